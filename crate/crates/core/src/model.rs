//! Game primitives: jump measures, the Lévy bandit model, beliefs on the
//! simplex, and the static payoff functionals m(π), f(π) and I(π).
//!
//! Beliefs are indexed by the L+1 states `0..=L`. The public constructor
//! [`Belief::new`] takes the probabilities of states `1..=L` with the mass of
//! state 0 implied; internally the full vector is stored so that π₀ never has
//! to be recovered by cancellation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a belief lies in the simplex.
pub const BELIEF_TOL: f64 = 1e-12;

/// Relative tolerance used to match an observed jump size against an atom.
const ATOM_MATCH_TOL: f64 = 1e-12;

// ── Jump measures ───────────────────────────────────────────────────────

/// One atom of a finite-support Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub size: f64,
    pub rate: f64,
}

/// Finite Lévy measure with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JumpMeasure {
    atoms: Vec<Atom>,
}

impl JumpMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        Self::validated(atoms, "jumps")
    }

    fn validated(atoms: Vec<Atom>, field: &str) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if !a.size.is_finite() || a.size == 0.0 {
                return Err(Error::invalid(
                    format!("{field}[{i}].size"),
                    format!("jump sizes must be finite and nonzero (got {})", a.size),
                ));
            }
            if !a.rate.is_finite() || a.rate < 0.0 {
                return Err(Error::invalid(
                    format!("{field}[{i}].rate"),
                    format!("rates must be finite and >= 0 (got {})", a.rate),
                ));
            }
            for (j, b) in atoms.iter().enumerate().take(i) {
                if sizes_match(a.size, b.size) {
                    return Err(Error::invalid(
                        format!("{field}[{i}].size"),
                        format!("duplicate atom size {} (also at index {j})", a.size),
                    ));
                }
            }
        }
        Ok(Self { atoms })
    }

    /// The trivial measure (no jumps).
    pub fn none() -> Self {
        Self::default()
    }

    /// Atoms given as per-arrival probabilities scaled by a total arrival rate.
    pub fn from_probabilities(sizes: &[f64], probs: &[f64], total_rate: f64) -> Result<Self> {
        if sizes.len() != probs.len() {
            return Err(Error::invalid("jumps", "sizes and probabilities differ in length"));
        }
        Self::new(
            sizes
                .iter()
                .zip(probs)
                .map(|(&size, &p)| Atom {
                    size,
                    rate: p * total_rate,
                })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// λ = ν(ℝ∖{0}).
    pub fn total_rate(&self) -> f64 {
        self.atoms.iter().map(|a| a.rate).sum()
    }

    /// ∫ h ν(dh).
    pub fn first_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.rate * a.size).sum()
    }

    /// ∫ h² ν(dh).
    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.rate * a.size * a.size).sum()
    }

    /// Expected jump size h = ∫ h ν(dh) / λ, zero for the trivial measure.
    pub fn mean_jump(&self) -> f64 {
        let lambda = self.total_rate();
        if lambda > 0.0 {
            self.first_moment() / lambda
        } else {
            0.0
        }
    }

    /// ν({h}); zero if `h` is not an atom.
    pub fn rate_at(&self, h: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| sizes_match(a.size, h))
            .map_or(0.0, |a| a.rate)
    }
}

fn sizes_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= ATOM_MATCH_TOL * a.abs().max(b.abs())
}

// ── Payoffs ─────────────────────────────────────────────────────────────

/// The incentive to experiment, I(π) = (f(π) − s)/(s − m(π)), with a distinct
/// infinite value whenever m(π) ≥ s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Incentive {
    Finite(f64),
    Infinite,
}

impl Incentive {
    /// Builds I from the two nonnegative pieces f − s and s − m.
    pub fn from_gaps(f_minus_s: f64, s_minus_m: f64) -> Self {
        if s_minus_m > 0.0 {
            Incentive::Finite(f_minus_s.max(0.0) / s_minus_m)
        } else {
            Incentive::Infinite
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Incentive::Finite(v) => v,
            Incentive::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Incentive::Infinite)
    }
}

impl PartialOrd for Incentive {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Incentive::Finite(a), Incentive::Finite(b)) => a.partial_cmp(b),
            (Incentive::Finite(_), Incentive::Infinite) => Some(Ordering::Less),
            (Incentive::Infinite, Incentive::Finite(_)) => Some(Ordering::Greater),
            (Incentive::Infinite, Incentive::Infinite) => Some(Ordering::Equal),
        }
    }
}

/// State-contingent mean payoffs μ₀ < … < μ_L together with the safe payoff s.
///
/// All three functionals depend on the model only through these numbers,
/// which is why the equilibrium rule does not care about the payoff process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payoffs {
    pub mu: Vec<f64>,
    pub safe: f64,
}

impl Payoffs {
    pub fn new(mu: Vec<f64>, safe: f64) -> Result<Self> {
        if mu.len() < 2 {
            return Err(Error::invalid("states", "need at least two states (L >= 1)"));
        }
        if !(safe.is_finite() && safe > 0.0) {
            return Err(Error::invalid(
                "safe_payoff",
                format!("must be finite and > 0 (got {safe})"),
            ));
        }
        for (l, w) in mu.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(
                    "states",
                    format!(
                        "state means must be strictly increasing: mu[{}] = {} <= mu[{}] = {}",
                        l + 1,
                        w[1],
                        l,
                        w[0]
                    ),
                ));
            }
        }
        let (lo, hi) = (mu[0], mu[mu.len() - 1]);
        if !(lo < safe && safe < hi) {
            return Err(Error::invalid(
                "safe_payoff",
                format!("must satisfy mu_0 < s < mu_L ({lo} < {safe} < {hi} fails)"),
            ));
        }
        Ok(Self { mu, safe })
    }

    /// Number of non-baseline states L.
    pub fn dim(&self) -> usize {
        self.mu.len() - 1
    }

    /// m(π) on a full probability vector (π₀, …, π_L).
    pub fn m_full(&self, full: &[f64]) -> f64 {
        full.iter().zip(&self.mu).map(|(p, mu)| p * mu).sum()
    }

    /// f(π) on a full probability vector.
    pub fn f_full(&self, full: &[f64]) -> f64 {
        full.iter()
            .zip(&self.mu)
            .map(|(p, &mu)| p * mu.max(self.safe))
            .sum()
    }

    /// I(π) on a full probability vector. Both gaps are accumulated as sums
    /// of nonnegative terms so that f − s never suffers cancellation.
    pub fn incentive_full(&self, full: &[f64]) -> Incentive {
        let mut upside = 0.0;
        let mut s_minus_m = 0.0;
        for (p, &mu) in full.iter().zip(&self.mu) {
            upside += p * (mu - self.safe).max(0.0);
            s_minus_m += p * (self.safe - mu);
        }
        Incentive::from_gaps(upside, s_minus_m)
    }

    pub fn m(&self, pi: &Belief) -> f64 {
        self.m_full(pi.full())
    }

    pub fn f(&self, pi: &Belief) -> f64 {
        self.f_full(pi.full())
    }

    pub fn incentive(&self, pi: &Belief) -> Incentive {
        self.incentive_full(pi.full())
    }

    /// Membership in Δ⁰: no mass on states with μ_ℓ > s.
    pub fn on_safe_face(&self, pi: &Belief) -> bool {
        pi.full()
            .iter()
            .zip(&self.mu)
            .all(|(&p, &mu)| mu <= self.safe || p == 0.0)
    }

    /// Membership in Δ¹: no mass on states with μ_ℓ < s.
    pub fn on_risky_face(&self, pi: &Belief) -> bool {
        pi.full()
            .iter()
            .zip(&self.mu)
            .all(|(&p, &mu)| mu >= self.safe || p == 0.0)
    }
}

// ── Beliefs ─────────────────────────────────────────────────────────────

/// A point of the L-simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief {
    full: Vec<f64>,
}

impl Belief {
    /// Belief from (π₁, …, π_L); π₀ = 1 − Σ π_ℓ.
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("belief", "need at least one component"));
        }
        let rest: f64 = probs.iter().sum();
        let mut full = Vec::with_capacity(probs.len() + 1);
        full.push(1.0 - rest);
        full.extend_from_slice(probs);
        Self::from_full(full)
    }

    /// Belief from the full vector (π₀, …, π_L).
    pub fn from_full(full: Vec<f64>) -> Result<Self> {
        if full.len() < 2 {
            return Err(Error::invalid("belief", "need at least two states"));
        }
        for (l, &p) in full.iter().enumerate() {
            if !p.is_finite() || p < -BELIEF_TOL || p > 1.0 + BELIEF_TOL {
                return Err(Error::invalid(
                    format!("belief[{l}]"),
                    format!("probability {p} outside [0, 1]"),
                ));
            }
        }
        let total: f64 = full.iter().sum();
        if (total - 1.0).abs() > BELIEF_TOL * full.len() as f64 {
            return Err(Error::invalid(
                "belief",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        Ok(Self::normalized(full))
    }

    /// Clips to [0, 1] and rescales to unit mass. Panics on zero total mass.
    pub(crate) fn normalized(mut full: Vec<f64>) -> Self {
        renormalize(&mut full);
        Self { full }
    }

    /// Degenerate belief on state `l` of a model with `dim` + 1 states.
    pub fn vertex(dim: usize, l: usize) -> Result<Self> {
        if l > dim {
            return Err(Error::StateOutOfRange {
                index: l,
                states: dim + 1,
            });
        }
        let mut full = vec![0.0; dim + 1];
        full[l] = 1.0;
        Ok(Self { full })
    }

    pub fn uniform(dim: usize) -> Self {
        Self {
            full: vec![1.0 / (dim + 1) as f64; dim + 1],
        }
    }

    /// L.
    pub fn dim(&self) -> usize {
        self.full.len() - 1
    }

    /// (π₀, …, π_L).
    pub fn full(&self) -> &[f64] {
        &self.full
    }

    /// (π₁, …, π_L).
    pub fn probs(&self) -> &[f64] {
        &self.full[1..]
    }

    /// π_ℓ for ℓ in 0..=L.
    pub fn get(&self, l: usize) -> Result<f64> {
        self.full.get(l).copied().ok_or(Error::StateOutOfRange {
            index: l,
            states: self.full.len(),
        })
    }

    /// True if every state has positive probability.
    pub fn is_interior(&self) -> bool {
        self.full.iter().all(|&p| p > 0.0)
    }

    /// True if the belief is a vertex.
    pub fn is_vertex(&self) -> bool {
        self.full.iter().filter(|&&p| p > 0.0).count() == 1
    }

    /// w·self + (1 − w)·other.
    pub fn mix(&self, other: &Belief, w: f64) -> Result<Belief> {
        if self.dim() != other.dim() {
            return Err(Error::invalid("belief", "dimension mismatch"));
        }
        let full = self
            .full
            .iter()
            .zip(&other.full)
            .map(|(a, b)| w * a + (1.0 - w) * b)
            .collect();
        Ok(Self::normalized(full))
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;

    fn try_from(full: Vec<f64>) -> Result<Self> {
        Belief::from_full(full)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.full
    }
}

/// Clips every component to [0, 1] and rescales to unit mass. Returns true if
/// the vector had drifted from the simplex by more than [`BELIEF_TOL`].
pub(crate) fn renormalize(full: &mut [f64]) -> bool {
    let mut drifted = false;
    for p in full.iter_mut() {
        if *p < 0.0 || *p > 1.0 {
            drifted |= *p < -BELIEF_TOL || *p > 1.0 + BELIEF_TOL;
            *p = p.clamp(0.0, 1.0);
        }
    }
    let total: f64 = full.iter().sum();
    drifted |= (total - 1.0).abs() > BELIEF_TOL;
    assert!(total > 0.0, "belief lost all probability mass");
    for p in full.iter_mut() {
        *p /= total;
    }
    drifted
}

// ── The model ───────────────────────────────────────────────────────────

/// Drift rate and Lévy measure of the risky payoff in one state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    pub rho: f64,
    pub jumps: JumpMeasure,
}

impl StateSpec {
    pub fn new(rho: f64, jumps: JumpMeasure) -> Self {
        Self { rho, jumps }
    }

    pub fn brownian(rho: f64) -> Self {
        Self {
            rho,
            jumps: JumpMeasure::none(),
        }
    }

    /// μ = ρ + λh.
    pub fn mean(&self) -> f64 {
        self.rho + self.jumps.first_moment()
    }
}

/// The union of atom sizes across states with per-state rates, used by the
/// filter and the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomTable {
    pub sizes: Vec<f64>,
    /// `rates[state][atom]`.
    pub rates: Vec<Vec<f64>>,
}

impl AtomTable {
    fn build(states: &[StateSpec]) -> Self {
        let mut sizes: Vec<f64> = Vec::new();
        for st in states {
            for a in st.jumps.atoms() {
                if a.rate > 0.0 && !sizes.iter().any(|&s| sizes_match(s, a.size)) {
                    sizes.push(a.size);
                }
            }
        }
        sizes.sort_by(f64::total_cmp);
        let rates = states
            .iter()
            .map(|st| sizes.iter().map(|&h| st.jumps.rate_at(h)).collect())
            .collect();
        Self { sizes, rates }
    }

    pub fn index_of(&self, h: f64) -> Option<usize> {
        self.sizes.iter().position(|&s| sizes_match(s, h))
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }
}

/// A two-armed Lévy bandit game.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    states: Vec<StateSpec>,
    sigma: f64,
    payoffs: Payoffs,
    prior: Belief,
    k0: f64,
    n_players: usize,
    lambda: Vec<f64>,
    atoms: AtomTable,
}

impl LevyModel {
    pub fn new(
        states: Vec<StateSpec>,
        sigma: f64,
        safe_payoff: f64,
        prior: Belief,
        k0: f64,
        n_players: usize,
    ) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::invalid("states", "need at least two states (L >= 1)"));
        }
        for (l, st) in states.iter().enumerate() {
            if !st.rho.is_finite() {
                return Err(Error::invalid(format!("states[{l}].rho"), "must be finite"));
            }
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be finite and > 0 (got {sigma})")));
        }
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::invalid("k0", format!("must be finite and > 0 (got {k0})")));
        }
        if n_players == 0 {
            return Err(Error::invalid("n_players", "must be >= 1"));
        }
        if prior.dim() + 1 != states.len() {
            return Err(Error::invalid(
                "prior",
                format!(
                    "has {} probabilities but the model has {} states",
                    prior.dim() + 1,
                    states.len()
                ),
            ));
        }
        let mu: Vec<f64> = states.iter().map(StateSpec::mean).collect();
        let payoffs = Payoffs::new(mu, safe_payoff)?;
        let lambda = states.iter().map(|s| s.jumps.total_rate()).collect();
        let atoms = AtomTable::build(&states);
        Ok(Self {
            states,
            sigma,
            payoffs,
            prior,
            k0,
            n_players,
            lambda,
            atoms,
        })
    }

    /// Number of non-baseline states L.
    pub fn dim(&self) -> usize {
        self.states.len() - 1
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateSpec] {
        &self.states
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn safe_payoff(&self) -> f64 {
        self.payoffs.safe
    }

    pub fn payoffs(&self) -> &Payoffs {
        &self.payoffs
    }

    pub fn prior(&self) -> &Belief {
        &self.prior
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn rho(&self, l: usize) -> f64 {
        self.states[l].rho
    }

    pub fn lambda(&self, l: usize) -> f64 {
        self.lambda[l]
    }

    pub fn atoms(&self) -> &AtomTable {
        &self.atoms
    }

    pub fn has_jumps(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// μ_ℓ = ρ_ℓ + λ_ℓ h_ℓ.
    pub fn state_mean(&self, l: usize) -> Result<f64> {
        self.payoffs
            .mu
            .get(l)
            .copied()
            .ok_or(Error::StateOutOfRange {
                index: l,
                states: self.n_states(),
            })
    }

    fn check_dim(&self, pi: &Belief) -> Result<()> {
        if pi.dim() != self.dim() {
            return Err(Error::invalid(
                "belief",
                format!("dimension {} does not match model dimension {}", pi.dim(), self.dim()),
            ));
        }
        Ok(())
    }

    /// m(π) = Σ π_ℓ μ_ℓ.
    pub fn expected_payoff(&self, pi: &Belief) -> Result<f64> {
        self.check_dim(pi)?;
        Ok(self.payoffs.m(pi))
    }

    /// f(π) = Σ π_ℓ max{s, μ_ℓ}.
    pub fn full_info_payoff(&self, pi: &Belief) -> Result<f64> {
        self.check_dim(pi)?;
        Ok(self.payoffs.f(pi))
    }

    pub fn incentive(&self, pi: &Belief) -> Result<Incentive> {
        self.check_dim(pi)?;
        Ok(self.payoffs.incentive(pi))
    }

    /// Copy with some scalar parameters replaced; re-validates everything.
    pub fn with_overrides(
        &self,
        safe_payoff: Option<f64>,
        k0: Option<f64>,
        n_players: Option<usize>,
    ) -> Result<Self> {
        Self::new(
            self.states.clone(),
            self.sigma,
            safe_payoff.unwrap_or(self.payoffs.safe),
            self.prior.clone(),
            k0.unwrap_or(self.k0),
            n_players.unwrap_or(self.n_players),
        )
    }

    pub fn with_prior(&self, prior: Belief) -> Result<Self> {
        Self::new(
            self.states.clone(),
            self.sigma,
            self.payoffs.safe,
            prior,
            self.k0,
            self.n_players,
        )
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            states: self
                .states
                .iter()
                .map(|s| StateFile {
                    rho: s.rho,
                    jumps: s.jumps.atoms().to_vec(),
                })
                .collect(),
            sigma: self.sigma,
            safe_payoff: self.payoffs.safe,
            prior: self.prior.full().to_vec(),
            k0: self.k0,
            n_players: self.n_players,
        }
    }
}

// ── Model files ─────────────────────────────────────────────────────────

/// On-disk JSON layout of a discrete-state model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<StateFile>,
    pub sigma: f64,
    pub safe_payoff: f64,
    /// π₀, …, π_L.
    pub prior: Vec<f64>,
    pub k0: f64,
    pub n_players: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub rho: f64,
    #[serde(default)]
    pub jumps: Vec<Atom>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<LevyModel> {
        let states = self
            .states
            .into_iter()
            .enumerate()
            .map(|(l, st)| {
                JumpMeasure::validated(st.jumps, &format!("states[{l}].jumps"))
                    .map(|jumps| StateSpec::new(st.rho, jumps))
            })
            .collect::<Result<Vec<_>>>()?;
        if self.prior.len() != states.len() {
            return Err(Error::invalid(
                "prior",
                format!(
                    "has {} probabilities but the model has {} states",
                    self.prior.len(),
                    states.len()
                ),
            ));
        }
        if let Some((l, p)) = self.prior.iter().enumerate().find(|(_, &p)| !(p > 0.0)) {
            return Err(Error::invalid(
                format!("prior[{l}]"),
                format!("prior probabilities must be > 0 (got {p})"),
            ));
        }
        let prior = Belief::from_full(self.prior).map_err(|e| match e {
            Error::Invalid { reason, .. } => Error::invalid("prior", reason),
            other => other,
        })?;
        LevyModel::new(states, self.sigma, self.safe_payoff, prior, self.k0, self.n_players)
    }
}

impl LevyModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }
}
