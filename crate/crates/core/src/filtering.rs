//! Belief dynamics: the jump-Bayes rule, drift and diffusion coefficients of
//! the belief process, the infinitesimal generator and its (k₀+K) scaling,
//! and the log-odds learning rates for L = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AtomTable, Belief, LevyModel};

/// ρ(π) = Σ π_ℓ ρ_ℓ.
pub fn expected_drift(model: &LevyModel, full: &[f64]) -> f64 {
    full.iter().enumerate().map(|(l, p)| p * model.rho(l)).sum()
}

/// λ(π) = Σ π_ℓ λ_ℓ.
pub fn expected_jump_rate(model: &LevyModel, full: &[f64]) -> f64 {
    full.iter().enumerate().map(|(l, p)| p * model.lambda(l)).sum()
}

/// ν(π)({h}) for atom `atom` of the model's atom table.
pub fn expected_atom_rate(table: &AtomTable, atom: usize, full: &[f64]) -> f64 {
    full.iter().zip(&table.rates).map(|(p, r)| p * r[atom]).sum()
}

/// Writes j(π, h) for atom `atom` into `out`. Returns false (leaving `out`
/// untouched) if the atom has zero probability under `full`.
pub(crate) fn jump_update_full(table: &AtomTable, atom: usize, full: &[f64], out: &mut [f64]) -> bool {
    let total = expected_atom_rate(table, atom, full);
    if !(total > 0.0) {
        return false;
    }
    for ((o, p), r) in out.iter_mut().zip(full).zip(&table.rates) {
        *o = p * r[atom] / total;
    }
    true
}

/// Posterior after a lump-sum payoff of size `h`.
pub fn jump_update(model: &LevyModel, pi: &Belief, h: f64) -> Result<Belief> {
    check_dim(model, pi)?;
    let table = model.atoms();
    let atom = table.index_of(h).ok_or(Error::InvalidObservation { size: h })?;
    let mut out = vec![0.0; pi.full().len()];
    if !jump_update_full(table, atom, pi.full(), &mut out) {
        return Err(Error::InvalidObservation { size: h });
    }
    Ok(Belief::normalized(out))
}

/// Components ℓ = 1..L of the no-news drift −π_ℓ(λ_ℓ − λ(π)), per unit of
/// operational time.
pub fn belief_drift(model: &LevyModel, pi: &Belief) -> Result<Vec<f64>> {
    check_dim(model, pi)?;
    let full = pi.full();
    let lam = expected_jump_rate(model, full);
    Ok((1..full.len()).map(|l| -full[l] * (model.lambda(l) - lam)).collect())
}

/// Components ℓ = 1..L of π_ℓ(ρ_ℓ − ρ(π))/σ.
pub fn belief_diffusion(model: &LevyModel, pi: &Belief) -> Result<Vec<f64>> {
    check_dim(model, pi)?;
    let full = pi.full();
    let rho = expected_drift(model, full);
    Ok((1..full.len())
        .map(|l| full[l] * (model.rho(l) - rho) / model.sigma())
        .collect())
}

fn check_dim(model: &LevyModel, pi: &Belief) -> Result<()> {
    if pi.dim() != model.dim() {
        return Err(Error::invalid(
            "belief",
            format!("dimension {} does not match model dimension {}", pi.dim(), model.dim()),
        ));
    }
    Ok(())
}

// ── Generator ───────────────────────────────────────────────────────────

/// Coefficients of the generator at one belief.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorStencil {
    /// b_ℓ = π_ℓ(ρ_ℓ − ρ(π))/σ for ℓ = 1..L; the diffusion matrix is b bᵀ.
    pub diffusion: Vec<f64>,
    /// (ν(π)({h}), j(π, h)) for every atom with positive expected rate.
    pub jumps: Vec<(f64, Belief)>,
    /// −π_ℓ(λ_ℓ − λ(π)) for ℓ = 1..L.
    pub drift: Vec<f64>,
}

impl GeneratorStencil {
    pub fn at(model: &LevyModel, pi: &Belief) -> Result<Self> {
        let diffusion = belief_diffusion(model, pi)?;
        let drift = belief_drift(model, pi)?;
        let table = model.atoms();
        let mut jumps = Vec::new();
        let mut out = vec![0.0; pi.full().len()];
        for atom in 0..table.sizes.len() {
            if jump_update_full(table, atom, pi.full(), &mut out) {
                jumps.push((
                    expected_atom_rate(table, atom, pi.full()),
                    Belief::normalized(out.clone()),
                ));
            }
        }
        Ok(Self {
            diffusion,
            jumps,
            drift,
        })
    }

    /// Diffusion matrix entry (i, l) for i, l in 0..L (state indices 1..L).
    pub fn diffusion_matrix(&self, i: usize, l: usize) -> f64 {
        self.diffusion[i] * self.diffusion[l]
    }
}

/// A scalar field u on the simplex, in the coordinates (π₁, …, π_L).
pub trait BeliefFunction {
    fn value(&self, probs: &[f64]) -> f64;

    /// Gradient and Hessian, if available in closed form.
    fn derivatives(&self, _probs: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        None
    }
}

impl<F: Fn(&[f64]) -> f64> BeliefFunction for F {
    fn value(&self, probs: &[f64]) -> f64 {
        self(probs)
    }
}

/// A field with analytic first and second derivatives.
pub struct AnalyticField<V, D> {
    pub value: V,
    pub derivatives: D,
}

impl<V, D> BeliefFunction for AnalyticField<V, D>
where
    V: Fn(&[f64]) -> f64,
    D: Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
{
    fn value(&self, probs: &[f64]) -> f64 {
        (self.value)(probs)
    }

    fn derivatives(&self, probs: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        Some((self.derivatives)(probs))
    }
}

/// Finite-difference settings for derivatives that are not supplied analytically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    pub step: f64,
    /// One Richardson extrapolation from steps h and h/2.
    pub richardson: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            step: 1e-4,
            richardson: true,
        }
    }
}

fn fd_derivatives(u: &dyn BeliefFunction, probs: &[f64], h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let dim = probs.len();
    let mut x = probs.to_vec();
    let mut eval = |shift: &[(usize, f64)]| {
        x.copy_from_slice(probs);
        for &(i, d) in shift {
            x[i] += d;
        }
        u.value(&x)
    };
    let u0 = eval(&[]);
    let mut grad = vec![0.0; dim];
    let mut hess = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        let up = eval(&[(i, h)]);
        let dn = eval(&[(i, -h)]);
        grad[i] = (up - dn) / (2.0 * h);
        hess[i][i] = (up - 2.0 * u0 + dn) / (h * h);
        for l in (i + 1)..dim {
            let pp = eval(&[(i, h), (l, h)]);
            let pm = eval(&[(i, h), (l, -h)]);
            let mp = eval(&[(i, -h), (l, h)]);
            let mm = eval(&[(i, -h), (l, -h)]);
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[i][l] = v;
            hess[l][i] = v;
        }
    }
    (grad, hess)
}

fn derivatives(u: &dyn BeliefFunction, pi: &Belief, fd: FdOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if let Some(d) = u.derivatives(pi.probs()) {
        return Ok(d);
    }
    let h = fd.step;
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::invalid("step", format!("finite-difference step must be in (0, 0.5) (got {h})")));
    }
    // The stencil moves each π_ℓ (ℓ ≥ 1) by ±h and π₀ by up to 2h (h for L = 1).
    let full = pi.full();
    let slack = 1e-12;
    let need0 = if pi.dim() >= 2 { 2.0 * h } else { h };
    if full[1..].iter().any(|&p| p < h - slack) || full[0] < need0 - slack {
        return Err(Error::Domain(format!(
            "belief {:?} is too close to the boundary for a finite-difference step of {h}",
            pi.probs()
        )));
    }
    let (g1, h1) = fd_derivatives(u, pi.probs(), h);
    if !fd.richardson {
        return Ok((g1, h1));
    }
    let (g2, h2) = fd_derivatives(u, pi.probs(), h / 2.0);
    let extrap = |a: f64, b: f64| (4.0 * b - a) / 3.0;
    let grad = g1.iter().zip(&g2).map(|(&a, &b)| extrap(a, b)).collect();
    let hess = h1
        .iter()
        .zip(&h2)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(&a, &b)| extrap(a, b)).collect())
        .collect();
    Ok((grad, hess))
}

/// 𝒢u(π) at an interior belief.
pub fn apply_generator(model: &LevyModel, u: &dyn BeliefFunction, pi: &Belief, fd: FdOptions) -> Result<f64> {
    check_dim(model, pi)?;
    if !pi.is_interior() {
        return Err(Error::Domain("the generator is evaluated at interior beliefs only".into()));
    }
    let stencil = GeneratorStencil::at(model, pi)?;
    let (grad, hess) = derivatives(u, pi, fd)?;
    Ok(generator_from_parts(&stencil, u, pi, &grad, &hess))
}

pub(crate) fn generator_from_parts(
    stencil: &GeneratorStencil,
    u: &dyn BeliefFunction,
    pi: &Belief,
    grad: &[f64],
    hess: &[Vec<f64>],
) -> f64 {
    let dim = grad.len();
    let mut diffusion = 0.0;
    for i in 0..dim {
        for l in 0..dim {
            diffusion += stencil.diffusion_matrix(i, l) * hess[i][l];
        }
    }
    let u0 = u.value(pi.probs());
    let jumps: f64 = stencil
        .jumps
        .iter()
        .map(|(rate, dest)| rate * (u.value(dest.probs()) - u0))
        .sum();
    let drift: f64 = stencil.drift.iter().zip(grad).map(|(d, g)| d * g).sum();
    0.5 * diffusion + jumps + drift
}

/// Total observation intensity k₀ + Σ k_n.
pub fn total_intensity(model: &LevyModel, intensities: &[f64]) -> Result<f64> {
    if intensities.len() != model.n_players() {
        return Err(Error::invalid(
            "intensities",
            format!("expected {} actions, got {}", model.n_players(), intensities.len()),
        ));
    }
    for (n, &k) in intensities.iter().enumerate() {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::invalid(format!("intensities[{n}]"), format!("must lie in [0, 1] (got {k})")));
        }
    }
    Ok(model.k0() + intensities.iter().sum::<f64>())
}

/// (k₀ + K)·𝒢u(π) for per-player actions k₁..k_N.
pub fn scaled_generator(
    model: &LevyModel,
    intensities: &[f64],
    u: &dyn BeliefFunction,
    pi: &Belief,
    fd: FdOptions,
) -> Result<f64> {
    Ok(total_intensity(model, intensities)? * apply_generator(model, u, pi, fd)?)
}

// ── Log-odds learning rates (L = 1) ─────────────────────────────────────

/// An atom set charged by one state's measure but not the other's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    /// State whose arrivals reveal it.
    pub state: usize,
    /// ν_state(B): rate at which the revealing atoms arrive.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogOddsDiagnostics {
    /// η₀ and η₁ per unit of operational time, over the atoms charged by both states.
    pub eta: [f64; 2],
    /// Non-equivalent jump measures: states that are revealed by a jump.
    pub identifying: Vec<Identification>,
}

impl LogOddsDiagnostics {
    pub fn eta0(&self) -> f64 {
        self.eta[0]
    }

    pub fn eta1(&self) -> f64 {
        self.eta[1]
    }
}

/// Drift rates of the log odds ω = ln(π₁/π₀) under each state, per unit of
/// operational time.
pub fn learning_rates(model: &LevyModel) -> Result<LogOddsDiagnostics> {
    if model.dim() != 1 {
        return Err(Error::invalid("states", "learning rates are defined for L = 1 only"));
    }
    let d = model.rho(1) - model.rho(0);
    let gauss = d * d / (2.0 * model.sigma().powi(2));
    let dlam = model.lambda(1) - model.lambda(0);
    let table = model.atoms();
    let mut eta = [-gauss - dlam, gauss - dlam];
    let mut ident = [0.0, 0.0];
    for a in 0..table.sizes.len() {
        let (r0, r1) = (table.rates[0][a], table.rates[1][a]);
        match (r0 > 0.0, r1 > 0.0) {
            (true, true) => {
                let lr = (r1 / r0).ln();
                eta[0] += lr * r0;
                eta[1] += lr * r1;
            }
            (false, true) => ident[1] += r1,
            (true, false) => ident[0] += r0,
            (false, false) => {}
        }
    }
    let identifying = (0..2)
        .filter(|&l| ident[l] > 0.0)
        .map(|l| Identification {
            state: l,
            rate: ident[l],
        })
        .collect();
    Ok(LogOddsDiagnostics { eta, identifying })
}

/// Asymptotic decay rate of E_ℓ[belief error] per unit of operational time
/// for L = 1 with Brownian payoffs only: (ρ₁ − ρ₀)²/(8σ²). The mean log-odds
/// drift η_ℓ governs typical paths; the expected error is dominated by the
/// rare paths whose log odds are still near zero.
pub fn brownian_error_decay_rate(model: &LevyModel) -> Result<Option<f64>> {
    if model.dim() != 1 {
        return Err(Error::invalid("states", "defined for L = 1 only"));
    }
    if model.has_jumps() {
        return Ok(None);
    }
    let d = model.rho(1) - model.rho(0);
    Ok(Some(d * d / (8.0 * model.sigma().powi(2))))
}
