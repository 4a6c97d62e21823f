//! Continuous-state extensions: Brownian payoffs with a normal prior and
//! Poisson payoffs with a gamma prior, described by their sufficient
//! statistics (m, τ) and (α, β).

use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumRule;
use crate::error::{Error, Result};
use crate::model::Incentive;
use crate::rng::PathRng;
use crate::special::{gamma_cdf, gamma_sf, norm_cdf, norm_pdf, norm_sf};
use crate::stats::MeanSe;

// ── Brownian payoffs, normal prior ──────────────────────────────────────

/// Posterior mean m and precision τ of the unknown drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalStat {
    pub m: f64,
    pub tau: f64,
}

impl NormalStat {
    pub fn new(m: f64, tau: f64) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::invalid("mean", "must be finite"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid("precision", format!("must be finite and > 0 (got {tau})")));
        }
        Ok(Self { m, tau })
    }

    /// From posterior mean and variance 1/τ.
    pub fn from_mean_variance(mean: f64, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::invalid("variance", format!("must be finite and > 0 (got {variance})")));
        }
        Self::new(mean, 1.0 / variance)
    }

    pub fn variance(&self) -> f64 {
        1.0 / self.tau
    }

    /// z = (s − m) τ^{1/2}.
    pub fn z(&self, s: f64) -> f64 {
        (s - self.m) * self.tau.sqrt()
    }
}

/// f = sΦ(z) + m(1 − Φ(z)) + τ^{−1/2} φ(z).
pub fn normal_f(stat: &NormalStat, s: f64) -> f64 {
    let z = stat.z(s);
    s * norm_cdf(z) + stat.m * norm_sf(z) + norm_pdf(z) / stat.tau.sqrt()
}

/// f − s = τ^{−1/2}[φ(z) − z(1 − Φ(z))], free of cancellation against s.
pub fn normal_upside(stat: &NormalStat, s: f64) -> f64 {
    let z = stat.z(s);
    (norm_pdf(z) - z * norm_sf(z)) / stat.tau.sqrt()
}

/// F(z) = Φ(z) − 1 + φ(z)/z for z > 0.
pub fn normal_incentive_z(z: f64) -> f64 {
    norm_pdf(z) / z - norm_sf(z)
}

/// F′(z) = −φ(z)/z².
pub fn normal_incentive_z_derivative(z: f64) -> f64 {
    -norm_pdf(z) / (z * z)
}

/// F⁻¹(c) for c > 0: the unique z > 0 with F(z) = c.
pub fn normal_incentive_z_inverse(c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid("level", format!("must be finite and > 0 (got {c})")));
    }
    let (mut lo, mut hi) = (1.0, 1.0);
    while normal_incentive_z(lo) < c {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Numerical(format!("cannot bracket F(z) = {c}")));
        }
    }
    while normal_incentive_z(hi) > c {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Numerical(format!("level {c} below the representable range of F")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if normal_incentive_z(mid) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn normal_incentive(stat: &NormalStat, s: f64) -> Incentive {
    if stat.m >= s {
        Incentive::Infinite
    } else {
        Incentive::Finite(normal_incentive_z(stat.z(s)))
    }
}

/// Conjugate update after observing the aggregate increment `dx` over `dt`
/// at total intensity k₀ + K: τ' = τ + (k₀+K)σ⁻²dt,
/// m' = m + τ'⁻¹σ⁻²(dx − m(k₀+K)dt).
pub fn normal_update(stat: &NormalStat, dx: f64, dt: f64, intensity: f64, sigma: f64) -> Result<NormalStat> {
    if !(dt > 0.0 && intensity > 0.0 && sigma > 0.0) {
        return Err(Error::invalid("update", "dt, intensity and sigma must be > 0"));
    }
    let s2 = sigma * sigma;
    let tau = stat.tau + intensity * dt / s2;
    let m = stat.m + (dx - stat.m * intensity * dt) / (s2 * tau);
    Ok(NormalStat { m, tau })
}

// ── Poisson payoffs, gamma prior ────────────────────────────────────────

/// Shape α and rate β of the gamma posterior on the arrival intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaStat {
    pub alpha: f64,
    pub beta: f64,
}

impl GammaStat {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be finite and > 0 (got {alpha})")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid("beta", format!("must be finite and > 0 (got {beta})")));
        }
        Ok(Self { alpha, beta })
    }

    /// α = mean²/variance, β = α/mean.
    pub fn from_mean_variance(mean: f64, variance: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::invalid("mean", format!("must be finite and > 0 (got {mean})")));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::invalid("variance", format!("must be finite and > 0 (got {variance})")));
        }
        let alpha = mean * mean / variance;
        Self::new(alpha, alpha / mean)
    }

    pub fn mean(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn variance(&self) -> f64 {
        self.alpha / (self.beta * self.beta)
    }
}

/// f = sG(s; α, β) + (α/β)[1 − G(s; α+1, β)].
pub fn gamma_f(stat: &GammaStat, s: f64) -> f64 {
    s * gamma_cdf(s, stat.alpha, stat.beta) + stat.mean() * gamma_sf(s, stat.alpha + 1.0, stat.beta)
}

/// f − s = (α/β)[1 − G(s; α+1, β)] − s[1 − G(s; α, β)].
pub fn gamma_upside(stat: &GammaStat, s: f64) -> f64 {
    (stat.mean() * gamma_sf(s, stat.alpha + 1.0, stat.beta) - s * gamma_sf(s, stat.alpha, stat.beta)).max(0.0)
}

/// I = (sG(s; α, β) − (α/β)G(s; α+1, β)) / (s − α/β) − 1.
pub fn gamma_incentive(stat: &GammaStat, s: f64) -> Incentive {
    let mean = stat.mean();
    if mean >= s {
        return Incentive::Infinite;
    }
    let num = s * gamma_cdf(s, stat.alpha, stat.beta) - mean * gamma_cdf(s, stat.alpha + 1.0, stat.beta);
    Incentive::Finite((num / (s - mean) - 1.0).max(0.0))
}

/// I = (f − s)/(s − α/β), the defining ratio.
pub fn gamma_incentive_ratio(stat: &GammaStat, s: f64) -> Incentive {
    Incentive::from_gaps(gamma_upside(stat, s), s - stat.mean())
}

/// ∂G(s; α, β)/∂β = (α/β)[G(s; α, β) − G(s; α+1, β)].
pub fn gamma_cdf_beta_derivative(s: f64, alpha: f64, beta: f64) -> f64 {
    alpha / beta * (gamma_cdf(s, alpha, beta) - gamma_cdf(s, alpha + 1.0, beta))
}

/// ∂I/∂β at fixed α for α/β < s.
pub fn gamma_incentive_beta_derivative(stat: &GammaStat, s: f64) -> f64 {
    let (a, b) = (stat.alpha, stat.beta);
    let g0 = gamma_cdf(s, a, b);
    let g1 = gamma_cdf(s, a + 1.0, b);
    let dg0 = gamma_cdf_beta_derivative(s, a, b);
    let dg1 = gamma_cdf_beta_derivative(s, a + 1.0, b);
    let num = s * g0 - a / b * g1;
    let dnum = s * dg0 + a / (b * b) * g1 - a / b * dg1;
    let den = s - a / b;
    let dden = a / (b * b);
    (dnum * den - num * dden) / (den * den)
}

/// An observation for the gamma posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaEvent {
    ArrivalObserved,
    /// Quiet stretch of operational time Δβ.
    QuietInterval(f64),
}

pub fn gamma_update(stat: &GammaStat, event: GammaEvent) -> Result<GammaStat> {
    match event {
        GammaEvent::ArrivalObserved => Ok(GammaStat {
            alpha: stat.alpha + 1.0,
            beta: stat.beta,
        }),
        GammaEvent::QuietInterval(d) if d >= 0.0 && d.is_finite() => Ok(GammaStat {
            alpha: stat.alpha,
            beta: stat.beta + d,
        }),
        GammaEvent::QuietInterval(d) => Err(Error::invalid("elapsed", format!("must be finite and >= 0 (got {d})"))),
    }
}

// ── Shared ──────────────────────────────────────────────────────────────

/// Sufficient statistic of either conjugate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ConjugateStat {
    Normal(NormalStat),
    Gamma(GammaStat),
}

impl ConjugateStat {
    pub fn mean(&self) -> f64 {
        match self {
            ConjugateStat::Normal(n) => n.m,
            ConjugateStat::Gamma(g) => g.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ConjugateStat::Normal(n) => n.variance(),
            ConjugateStat::Gamma(g) => g.variance(),
        }
    }

    pub fn full_info_payoff(&self, s: f64) -> f64 {
        match self {
            ConjugateStat::Normal(n) => normal_f(n, s),
            ConjugateStat::Gamma(g) => gamma_f(g, s),
        }
    }

    pub fn incentive(&self, s: f64) -> Incentive {
        match self {
            ConjugateStat::Normal(n) => normal_incentive(n, s),
            ConjugateStat::Gamma(g) => gamma_incentive(g, s),
        }
    }
}

/// κ† applied to the model-specific incentive.
pub fn conjugate_equilibrium_action(stat: &ConjugateStat, s: f64, k0: f64, n_players: usize) -> Result<f64> {
    Ok(EquilibriumRule::new(k0, n_players)?.action(stat.incentive(s)))
}

/// Which conjugate family a model or figure uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    Gamma,
}

/// Incentive at a (mean, variance) point of either family. The gamma family
/// needs mean > 0.
pub fn incentive_mean_variance(family: Family, mean: f64, variance: f64, s: f64) -> Result<Incentive> {
    Ok(match family {
        Family::Normal => normal_incentive(&NormalStat::from_mean_variance(mean, variance)?, s),
        Family::Gamma => gamma_incentive(&GammaStat::from_mean_variance(mean, variance)?, s),
    })
}

/// Slope dv/dm of the level curve of I through (mean, variance), by central
/// differences with relative step `h`.
pub fn level_curve_slope(family: Family, mean: f64, variance: f64, s: f64, h: f64) -> Result<f64> {
    let i = |m: f64, v: f64| -> Result<f64> { Ok(incentive_mean_variance(family, m, v, s)?.as_f64()) };
    let dm = h * mean.abs().max(1.0);
    let dv = h * variance;
    let di_dm = (i(mean + dm, variance)? - i(mean - dm, variance)?) / (2.0 * dm);
    let di_dv = (i(mean, variance + dv)? - i(mean, variance - dv)?) / (2.0 * dv);
    if !(di_dm.is_finite() && di_dv.is_finite()) || di_dv == 0.0 {
        return Err(Error::Numerical(format!(
            "level-curve slope undefined at mean {mean}, variance {variance}"
        )));
    }
    Ok(-di_dm / di_dv)
}

// ── Lipschitz diagnostics ───────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalLipschitzReport {
    pub band: [f64; 2],
    pub tau_range: [f64; 2],
    /// F strictly decreasing at every tested z.
    pub f_strictly_decreasing: bool,
    /// sup |∂(Iτ⁻¹)/∂m| over the grid.
    pub sup_dm: f64,
    /// sup |∂(Iτ⁻¹)/∂τ| over the grid.
    pub sup_dtau: f64,
    /// Largest relative gap between the closed-form partials and central differences.
    pub max_fd_rel_error: f64,
    /// |∂(Iτ⁻¹)/∂m| at the top level of the band for τ = τ₀·10^j, j = 0, 1, ….
    pub dm_along_level: Vec<f64>,
    pub levels: usize,
    pub taus: usize,
}

/// Evaluates the partial derivatives of Iτ⁻¹ on the band a ≤ I ≤ b over a
/// level × precision grid.
pub fn normal_lipschitz_check(band: [f64; 2], tau_range: [f64; 2], levels: usize, taus: usize) -> Result<NormalLipschitzReport> {
    let [a, b] = band;
    if !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(Error::invalid("band", format!("need 0 < a <= b (got [{a}, {b}])")));
    }
    let [t0, t1] = tau_range;
    if !(t0 > 0.0 && t1 >= t0 && t1.is_finite()) {
        return Err(Error::invalid("tau_range", format!("need 0 < tau0 <= tau1 (got [{t0}, {t1}])")));
    }
    let levels = levels.max(1);
    let taus = taus.max(1);

    let zs: Vec<f64> = (1..=2000).map(|i| i as f64 * 0.005).collect();
    let f_strictly_decreasing = zs.windows(2).all(|w| normal_incentive_z(w[1]) < normal_incentive_z(w[0]));

    let level_at = |i: usize| if levels == 1 { a } else { a + (b - a) * i as f64 / (levels - 1) as f64 };
    let tau_at = |j: usize| if taus == 1 { t0 } else { t0 * (t1 / t0).powf(j as f64 / (taus - 1) as f64) };
    let s = 0.0;
    let mut sup_dm: f64 = 0.0;
    let mut sup_dtau: f64 = 0.0;
    let mut max_err: f64 = 0.0;
    for i in 0..levels {
        let c = level_at(i);
        let zc = normal_incentive_z_inverse(c)?;
        let fp = normal_incentive_z_derivative(zc);
        for j in 0..taus {
            let tau = tau_at(j);
            let dm = -fp / tau.sqrt();
            let dtau = (0.5 * fp * zc - c) / (tau * tau);
            sup_dm = sup_dm.max(dm.abs());
            sup_dtau = sup_dtau.max(dtau.abs());
            if i % 7 == 0 && j % 7 == 0 {
                // Iτ⁻¹ as a function of (m, τ) with s = 0, so m = −z τ^{−1/2}.
                let m = s - zc / tau.sqrt();
                let g = |m: f64, t: f64| normal_incentive_z((s - m) * t.sqrt()) / t;
                let hm = 1e-5 / tau.sqrt();
                let ht = 1e-5 * tau;
                let fd_m = (g(m + hm, tau) - g(m - hm, tau)) / (2.0 * hm);
                let fd_t = (g(m, tau + ht) - g(m, tau - ht)) / (2.0 * ht);
                max_err = max_err.max(((fd_m - dm) / dm).abs()).max(((fd_t - dtau) / dtau).abs());
            }
        }
    }
    let zb = normal_incentive_z_inverse(b)?;
    let dm_along_level = (0..6)
        .map(|j| normal_incentive_z_derivative(zb).abs() / (t0 * 10f64.powi(j)).sqrt())
        .collect();
    Ok(NormalLipschitzReport {
        band,
        tau_range,
        f_strictly_decreasing,
        sup_dm,
        sup_dtau,
        max_fd_rel_error: max_err,
        dm_along_level,
        levels,
        taus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaLipschitzReport {
    pub alpha: f64,
    pub safe_payoff: f64,
    pub band: [f64; 2],
    /// No β ≥ β₀ attains the band.
    pub empty: bool,
    /// Endpoints of B(a, b) = {β : a ≤ I(α, β) ≤ b} within the domain.
    pub beta_range: Option<[f64; 2]>,
    /// min β − α/s over B(a, b).
    pub gap: Option<f64>,
    /// G(s; α, α/s) − G(s; α+1, α/s), positive by the bracket argument.
    pub bracket_at_boundary: f64,
    pub sup_di_dbeta: Option<f64>,
    /// I(α, ·) decreasing at every tested β.
    pub monotone: bool,
    pub max_fd_rel_error: Option<f64>,
    pub points: usize,
}

/// Bounds on ∂I/∂β for fixed α over the band a ≤ I ≤ b, restricted to
/// β ≥ `beta0` (pass `None` for the whole half-line β > α/s).
pub fn gamma_lipschitz_check(
    alpha: f64,
    s: f64,
    band: [f64; 2],
    beta0: Option<f64>,
    points: usize,
) -> Result<GammaLipschitzReport> {
    let [a, b] = band;
    if !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(Error::invalid("band", format!("need 0 < a <= b (got [{a}, {b}])")));
    }
    if !(alpha > 0.0 && alpha.is_finite() && s > 0.0 && s.is_finite()) {
        return Err(Error::invalid("alpha", "alpha and s must be finite and > 0"));
    }
    let floor = alpha / s;
    let lo_dom = match beta0 {
        Some(b0) if b0 <= floor => {
            return Err(Error::invalid("beta0", format!("must exceed alpha/s = {floor}")));
        }
        Some(b0) => b0,
        None => floor * (1.0 + 1e-9),
    };
    let points = points.max(2);
    let bracket = gamma_cdf(s, alpha, floor) - gamma_cdf(s, alpha + 1.0, floor);
    let inc = |beta: f64| gamma_incentive(&GammaStat { alpha, beta }, s).as_f64();

    let mut report = GammaLipschitzReport {
        alpha,
        safe_payoff: s,
        band,
        empty: true,
        beta_range: None,
        gap: None,
        bracket_at_boundary: bracket,
        sup_di_dbeta: None,
        monotone: true,
        max_fd_rel_error: None,
        points,
    };
    if inc(lo_dom) < a {
        return Ok(report);
    }
    // I(α, ·) falls from I(β_lo) towards 0; locate where it crosses b and a.
    let solve = |c: f64| -> f64 {
        let mut lo = lo_dom;
        if inc(lo) <= c {
            return lo;
        }
        let mut hi = lo * 2.0;
        while inc(hi) > c {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if inc(mid) > c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let beta_b = solve(b);
    let beta_a = solve(a);
    let mut sup: f64 = 0.0;
    let mut err: f64 = 0.0;
    let mut prev = f64::INFINITY;
    for i in 0..points {
        let beta = beta_b + (beta_a - beta_b) * i as f64 / (points - 1) as f64;
        let st = GammaStat { alpha, beta };
        let d = gamma_incentive_beta_derivative(&st, s);
        sup = sup.max(d.abs());
        let v = inc(beta);
        if v > prev {
            report.monotone = false;
        }
        prev = v;
        if i % 16 == 0 {
            let h = 1e-6 * beta;
            let fd = (inc(beta + h) - inc(beta - h)) / (2.0 * h);
            if d != 0.0 {
                err = err.max(((fd - d) / d).abs());
            }
        }
    }
    report.empty = false;
    report.beta_range = Some([beta_b, beta_a]);
    report.gap = Some(beta_b - floor);
    report.sup_di_dbeta = Some(sup);
    report.max_fd_rel_error = Some(err);
    Ok(report)
}

// ── Conjugate models and path simulation ────────────────────────────────

/// A conjugate game: prior statistic plus the game parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConjugateModel {
    Normal {
        mean: f64,
        precision: f64,
        sigma: f64,
        safe_payoff: f64,
        k0: f64,
        n_players: usize,
    },
    Gamma {
        alpha: f64,
        beta: f64,
        safe_payoff: f64,
        k0: f64,
        n_players: usize,
    },
}

impl ConjugateModel {
    pub fn validate(&self) -> Result<()> {
        self.prior()?;
        EquilibriumRule::new(self.k0(), self.n_players())?;
        let s = self.safe_payoff();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid("safe_payoff", format!("must be finite and > 0 (got {s})")));
        }
        if let ConjugateModel::Normal { sigma, .. } = self {
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::invalid("sigma", format!("must be finite and > 0 (got {sigma})")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn family(&self) -> Family {
        match self {
            ConjugateModel::Normal { .. } => Family::Normal,
            ConjugateModel::Gamma { .. } => Family::Gamma,
        }
    }

    pub fn prior(&self) -> Result<ConjugateStat> {
        Ok(match *self {
            ConjugateModel::Normal { mean, precision, .. } => ConjugateStat::Normal(NormalStat::new(mean, precision)?),
            ConjugateModel::Gamma { alpha, beta, .. } => ConjugateStat::Gamma(GammaStat::new(alpha, beta)?),
        })
    }

    pub fn safe_payoff(&self) -> f64 {
        match *self {
            ConjugateModel::Normal { safe_payoff, .. } | ConjugateModel::Gamma { safe_payoff, .. } => safe_payoff,
        }
    }

    pub fn k0(&self) -> f64 {
        match *self {
            ConjugateModel::Normal { k0, .. } | ConjugateModel::Gamma { k0, .. } => k0,
        }
    }

    pub fn n_players(&self) -> usize {
        match *self {
            ConjugateModel::Normal { n_players, .. } | ConjugateModel::Gamma { n_players, .. } => n_players,
        }
    }

    pub fn rule(&self) -> EquilibriumRule {
        EquilibriumRule {
            k0: self.k0(),
            n_players: self.n_players(),
        }
    }
}

/// Settings for simulating sufficient-statistic paths under the symmetric κ† profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateSimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Number of equally spaced recording times in (0, T].
    pub records: usize,
}

/// Ensemble statistics of the posterior mean along simulated paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateEnsemble {
    pub times: Vec<f64>,
    /// E[m_t] (normal) or E[α_t/β_t] (gamma) with standard errors.
    pub posterior_mean: Vec<MeanSe>,
    /// E[τ_t] or E[β_t].
    pub precision_or_rate: Vec<f64>,
    pub initial_mean: f64,
}

/// Simulates posterior-statistic paths with all N players on κ†.
pub fn simulate_conjugate(model: &ConjugateModel, config: &ConjugateSimConfig) -> Result<ConjugateEnsemble> {
    model.validate()?;
    if !(config.dt > 0.0 && config.horizon >= config.dt && config.n_paths >= 1 && config.records >= 1) {
        return Err(Error::invalid("config", "need dt > 0, horizon >= dt, n_paths >= 1, records >= 1"));
    }
    let steps = (config.horizon / config.dt).round() as usize;
    let every = (steps / config.records).max(1);
    let n_rec = steps / every;
    let rule = model.rule();
    let s = model.safe_payoff();
    let prior = model.prior()?;

    let run = |index: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = PathRng::for_path(config.seed, index as u64);
        let mut means = Vec::with_capacity(n_rec);
        let mut precs = Vec::with_capacity(n_rec);
        match (model, prior) {
            (&ConjugateModel::Normal { sigma, .. }, ConjugateStat::Normal(st0)) => {
                let mut st = st0;
                let mu = Normal::new(st.m, st.tau.powf(-0.5))
                    .map_err(|e| Error::Numerical(e.to_string()))?
                    .sample(rng.init_rng());
                for step in 1..=steps {
                    let k = rule.action(normal_incentive(&st, s));
                    let intensity = rule.k0 + rule.n_players as f64 * k;
                    let dx = mu * intensity * config.dt + sigma * (intensity * config.dt).sqrt() * rng.normal();
                    st = normal_update(&st, dx, config.dt, intensity, sigma)?;
                    if step % every == 0 && means.len() < n_rec {
                        means.push(st.m);
                        precs.push(st.tau);
                    }
                }
            }
            (ConjugateModel::Gamma { .. }, ConjugateStat::Gamma(st0)) => {
                let mut st = st0;
                let mu = Gamma::new(st.alpha, 1.0 / st.beta)
                    .map_err(|e| Error::Numerical(e.to_string()))?
                    .sample(rng.init_rng());
                for step in 1..=steps {
                    let k = rule.action(gamma_incentive(&st, s));
                    let intensity = rule.k0 + rule.n_players as f64 * k;
                    let arrivals = rng.poisson(mu * intensity * config.dt);
                    st.alpha += arrivals as f64;
                    st.beta += intensity * config.dt;
                    if step % every == 0 && means.len() < n_rec {
                        means.push(st.mean());
                        precs.push(st.beta);
                    }
                }
            }
            _ => unreachable!("prior family matches model family"),
        }
        Ok((means, precs))
    };

    let paths: Vec<(Vec<f64>, Vec<f64>)> = (0..config.n_paths).into_par_iter().map(run).collect::<Result<_>>()?;
    let mut posterior_mean = Vec::with_capacity(n_rec);
    let mut precision_or_rate = Vec::with_capacity(n_rec);
    let mut col = vec![0.0; config.n_paths];
    for r in 0..n_rec {
        for (c, p) in col.iter_mut().zip(&paths) {
            *c = p.0[r];
        }
        posterior_mean.push(MeanSe::of(&col));
        for (c, p) in col.iter_mut().zip(&paths) {
            *c = p.1[r];
        }
        precision_or_rate.push(MeanSe::of(&col).mean);
    }
    Ok(ConjugateEnsemble {
        times: (1..=n_rec).map(|r| (r * every) as f64 * config.dt).collect(),
        posterior_mean,
        precision_or_rate,
        initial_mean: prior.mean(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn normal_f_at_zero_gap() {
        let st = NormalStat::new(6.0, 4.0).unwrap();
        assert_relative_eq!(normal_f(&st, 6.0), 6.0 + 0.398_942_280_401_432_7 / 2.0, max_relative = 1e-15);
        let sharp = NormalStat::new(5.0, 1e12).unwrap();
        assert_abs_diff_eq!(normal_f(&sharp, 6.0), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn normal_incentive_values() {
        assert_abs_diff_eq!(normal_incentive_z(1.0), 0.083_315_470_587_686_32, epsilon = 1e-14);
        assert!(normal_incentive_z(40.0) < 1e-300);
        assert!(normal_incentive_z(1e-8) > 1e7);
        assert_eq!(normal_incentive(&NormalStat::new(6.0, 1.0).unwrap(), 6.0), Incentive::Infinite);
        let z = normal_incentive_z_inverse(0.2).unwrap();
        assert_abs_diff_eq!(normal_incentive_z(z), 0.2, epsilon = 1e-14);
    }

    #[test]
    fn normal_update_properties() {
        let st = NormalStat::new(1.0, 2.0).unwrap();
        let up = normal_update(&st, 1.0 * 1.2 * 0.01, 0.01, 1.2, 1.0).unwrap();
        assert_eq!(up.m, 1.0);
        assert_relative_eq!(up.tau, 2.012, max_relative = 1e-15);
        let half1 = normal_update(&st, 0.3, 0.005, 1.2, 0.7).unwrap();
        let half2 = normal_update(&half1, 0.2, 0.005, 1.2, 0.7).unwrap();
        let full = normal_update(&st, 0.5, 0.01, 1.2, 0.7).unwrap();
        assert_relative_eq!(half2.tau, full.tau, max_relative = 1e-15);
        assert_relative_eq!(half2.m, full.m, max_relative = 1e-12);
    }

    #[test]
    fn gamma_f_exponential_prior() {
        let (b, s): (f64, f64) = (0.7, 2.0);
        let want = s * (1.0 - (-b * s).exp()) + (-b * s).exp() * (1.0 + b * s) / b;
        assert_relative_eq!(gamma_f(&GammaStat::new(1.0, b).unwrap(), s), want, max_relative = 1e-13);
    }

    #[test]
    fn gamma_incentive_forms_agree() {
        let st = GammaStat::new(3.0, 1.5).unwrap();
        let a = gamma_incentive(&st, 4.0).as_f64();
        let b = gamma_incentive_ratio(&st, 4.0).as_f64();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert!(gamma_incentive(&GammaStat::new(8.0, 1.0).unwrap(), 6.0).is_infinite());
    }

    #[test]
    fn gamma_updates_commute() {
        let st = GammaStat::new(2.0, 1.0).unwrap();
        let a = gamma_update(&gamma_update(&st, GammaEvent::ArrivalObserved).unwrap(), GammaEvent::QuietInterval(0.5)).unwrap();
        let b = gamma_update(&gamma_update(&st, GammaEvent::QuietInterval(0.2)).unwrap(), GammaEvent::ArrivalObserved).unwrap();
        let b = gamma_update(&b, GammaEvent::QuietInterval(0.3)).unwrap();
        assert_eq!(a.alpha, b.alpha);
        assert_relative_eq!(a.beta, b.beta, max_relative = 1e-15);
        assert!(gamma_update(&st, GammaEvent::QuietInterval(-1.0)).is_err());
    }

    #[test]
    fn mean_variance_round_trip() {
        let g = GammaStat::from_mean_variance(3.0, 2.0).unwrap();
        assert_relative_eq!(g.mean(), 3.0, max_relative = 1e-15);
        assert_relative_eq!(g.variance(), 2.0, max_relative = 1e-15);
        let n = NormalStat::from_mean_variance(-1.0, 0.25).unwrap();
        assert_eq!(n.tau, 4.0);
    }

    #[test]
    fn conjugate_actions() {
        let normal = ConjugateStat::Normal(NormalStat::new(6.5, 1.0).unwrap());
        assert_eq!(conjugate_equilibrium_action(&normal, 6.0, 0.2, 4).unwrap(), 1.0);
        let z = normal_incentive_z_inverse(0.2).unwrap();
        let edge = ConjugateStat::Normal(NormalStat::new(6.0 - z, 1.0).unwrap());
        assert_abs_diff_eq!(conjugate_equilibrium_action(&edge, 6.0, 0.2, 4).unwrap(), 0.0, epsilon = 1e-12);
        let gamma = ConjugateStat::Gamma(GammaStat::new(7.0, 1.0).unwrap());
        assert_eq!(conjugate_equilibrium_action(&gamma, 6.0, 0.2, 4).unwrap(), 1.0);
    }

    #[test]
    fn lipschitz_reports() {
        let r = normal_lipschitz_check([0.2, 3.2], [0.1, 100.0], 31, 31).unwrap();
        assert!(r.f_strictly_decreasing);
        assert!(r.sup_dm.is_finite() && r.sup_dtau.is_finite());
        assert!(r.max_fd_rel_error < 1e-5, "{}", r.max_fd_rel_error);
        assert!(r.dm_along_level.windows(2).all(|w| w[1] < w[0]));
        assert!(normal_lipschitz_check([0.5, 0.5], [1.0, 2.0], 3, 3).unwrap().sup_dm.is_finite());
        assert!(normal_lipschitz_check([0.5, 0.2], [1.0, 2.0], 3, 3).is_err());

        let g = gamma_lipschitz_check(2.0, 6.0, [0.2, 3.2], None, 200).unwrap();
        assert!(!g.empty && g.monotone);
        assert!(g.gap.unwrap() > 0.0);
        assert!(g.bracket_at_boundary > 0.0);
        assert!(g.max_fd_rel_error.unwrap() < 1e-5);
        let empty = gamma_lipschitz_check(2.0, 6.0, [50.0, 60.0], Some(1.0), 50).unwrap();
        assert!(empty.empty);
    }

    #[test]
    fn conjugate_json() {
        let m = ConjugateModel::from_json(
            r#"{"family":"normal","mean":5.0,"precision":0.5,"sigma":1.0,"safe_payoff":6.0,"k0":0.2,"n_players":4}"#,
        )
        .unwrap();
        assert_eq!(m.family(), Family::Normal);
        let bad = ConjugateModel::from_json(
            r#"{"family":"gamma","alpha":-1.0,"beta":0.5,"safe_payoff":6.0,"k0":0.2,"n_players":4}"#,
        );
        assert!(bad.unwrap_err().to_string().contains("`alpha`"));
    }
}
