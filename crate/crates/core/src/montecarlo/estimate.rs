use serde::{Deserialize, Serialize};

use super::{simulate, PathEnsemble, SimConfig};
use crate::equilibrium::Strategy;
use crate::error::{Error, Result};
use crate::filtering::learning_rates;
use crate::model::{Belief, LevyModel};
use crate::stats::{exponential_fit, MeanSe};

/// Relative slack allowed between fitted and predicted convergence rates.
pub const RATE_SLACK: f64 = 0.2;

/// Strong long-run average payoff estimate for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LraEstimate {
    pub player: usize,
    /// Monte Carlo mean of the shortfall integral over [0, T].
    pub estimate: f64,
    pub standard_error: f64,
    /// Magnitude of the fitted exponential remainder over [T, ∞); not added
    /// to `estimate`. Infinite when the fitted rate is not positive.
    pub tail_bound: f64,
    /// (c, r) of the fit c·e^{−rt} to |E[integrand]| over the last quarter.
    pub tail_fit: Option<(f64, f64)>,
    pub horizon: f64,
    pub n_units: usize,
}

fn tail_of(ens: &PathEnsemble, player: usize) -> (f64, Option<(f64, f64)>) {
    let c = &ens.curves;
    let n = c.times.len();
    let start = n - n.div_ceil(4).max(2).min(n);
    let t = &c.times[start..];
    let y: Vec<f64> = c.integrand[start..].iter().map(|g| g[player].abs()).collect();
    if y.iter().all(|&v| v == 0.0) {
        return (0.0, None);
    }
    match exponential_fit(t, &y) {
        Some((c0, r)) if r > 0.0 => {
            let horizon = *c.times.last().unwrap_or(&0.0);
            (c0 * (-r * horizon).exp() / r, Some((c0, r)))
        }
        fit => (f64::INFINITY, fit),
    }
}

fn check_player(ens: &PathEnsemble, player: usize) -> Result<()> {
    if player >= ens.n_players {
        return Err(Error::invalid(
            "player",
            format!("player {player} out of range for {} players", ens.n_players),
        ));
    }
    Ok(())
}

/// Estimates u_n(π₀) for `player` from an ensemble simulated on `model`.
pub fn estimate_lra_payoff(ens: &PathEnsemble, model: &LevyModel, player: usize) -> Result<LraEstimate> {
    ens.check_model(model)?;
    check_player(ens, player)?;
    let ms = MeanSe::of(&ens.unit_values(|p| p.shortfall[player]));
    let (tail_bound, tail_fit) = tail_of(ens, player);
    Ok(LraEstimate {
        player,
        estimate: ms.mean,
        standard_error: ms.se,
        tail_bound,
        tail_fit,
        horizon: ens.steps as f64 * ens.config.dt,
        n_units: ms.n,
    })
}

/// Shortfall estimates at each configured checkpoint, in configuration order.
pub fn checkpoint_estimates(ens: &PathEnsemble, model: &LevyModel, player: usize) -> Result<Vec<(f64, MeanSe)>> {
    ens.check_model(model)?;
    check_player(ens, player)?;
    Ok(ens
        .config
        .checkpoints
        .iter()
        .enumerate()
        .map(|(j, &t)| (t, MeanSe::of(&ens.unit_values(|p| p.checkpoint_shortfall[j][player]))))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRate {
    pub state: usize,
    pub paths: usize,
    pub times: Vec<f64>,
    /// E_ℓ[1 − π_ℓ(t)] on the recording grid.
    pub error: Vec<f64>,
    /// Rate of c·e^{−rt} fitted over the last quarter; `None` if the error vanishes.
    pub fitted_rate: Option<f64>,
    /// |η_ℓ|·k₀ (L = 1 only).
    pub predicted_floor: Option<f64>,
    /// |η_ℓ| times the mean total observation intensity along the paths (L = 1 only).
    pub predicted_scaled: Option<f64>,
    /// fitted ≥ (1 − slack)·|η_ℓ|k₀.
    pub meets_floor: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDiagnostics {
    pub eta: Option<[f64; 2]>,
    pub mean_intensity: f64,
    pub states: Vec<StateRate>,
}

/// Fits exponential decay rates of the per-state belief error.
pub fn convergence_diagnostics(ens: &PathEnsemble, model: &LevyModel) -> Result<ConvergenceDiagnostics> {
    ens.check_model(model)?;
    let eta = if model.dim() == 1 {
        Some(learning_rates(model)?.eta)
    } else {
        None
    };
    let horizon = ens.steps as f64 * ens.config.dt;
    let mean_intensity = model.k0()
        + ens
            .paths
            .iter()
            .map(|p| p.operational_time.iter().sum::<f64>())
            .sum::<f64>()
            / (ens.paths.len() as f64 * horizon);
    let c = &ens.curves;
    let n = c.times.len();
    let start = n - n.div_ceil(4).max(2).min(n);
    let states = c
        .error_by_state
        .iter()
        .enumerate()
        .filter_map(|(l, e)| e.as_ref().map(|e| (l, e)))
        .map(|(l, err)| {
            let fitted_rate = if err[start..].iter().all(|&v| v == 0.0) {
                None
            } else {
                exponential_fit(&c.times[start..], &err[start..]).map(|(_, r)| r)
            };
            let floor = eta.map(|e| e[l].abs() * model.k0());
            StateRate {
                state: l,
                paths: c.paths_by_state[l],
                times: c.times.clone(),
                error: err.clone(),
                fitted_rate,
                predicted_floor: floor,
                predicted_scaled: eta.map(|e| e[l].abs() * mean_intensity),
                meets_floor: floor.zip(fitted_rate).map(|(b, r)| r >= (1.0 - RATE_SLACK) * b),
            }
        })
        .collect();
    Ok(ConvergenceDiagnostics {
        eta,
        mean_intensity,
        states,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationResult {
    pub player: usize,
    pub deviation: String,
    pub base: LraEstimate,
    pub deviated: LraEstimate,
    /// Per-unit difference deviated − base under common random numbers.
    pub difference: MeanSe,
}

impl DeviationResult {
    /// Difference in units of its standard error (0 when exactly equal).
    pub fn z(&self) -> f64 {
        if self.difference.mean == 0.0 {
            0.0
        } else {
            self.difference.mean / self.difference.se
        }
    }
}

fn compare(
    model: &LevyModel,
    base_ens: &PathEnsemble,
    profile: &[Strategy],
    player: usize,
    deviation: &Strategy,
    config: &SimConfig,
) -> Result<DeviationResult> {
    let mut dev_profile = profile.to_vec();
    dev_profile[player] = deviation.clone();
    let dev_ens = simulate(model, &dev_profile, config)?;
    let a = base_ens.unit_values(|p| p.shortfall[player]);
    let b = dev_ens.unit_values(|p| p.shortfall[player]);
    let diff: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
    Ok(DeviationResult {
        player,
        deviation: deviation.label(),
        base: estimate_lra_payoff(base_ens, model, player)?,
        deviated: estimate_lra_payoff(&dev_ens, model, player)?,
        difference: MeanSe::of(&diff),
    })
}

/// u_n(π₀ | deviation, κ₋ₙ) − u_n(π₀ | κ) with common random numbers.
pub fn unilateral_deviation_value(
    model: &LevyModel,
    profile: &[Strategy],
    player: usize,
    deviation: &Strategy,
    pi0: &Belief,
    config: &SimConfig,
) -> Result<DeviationResult> {
    if player >= model.n_players() {
        return Err(Error::invalid("player", format!("player {player} out of range")));
    }
    let model = model.with_prior(pi0.clone())?;
    let base = simulate(&model, profile, config)?;
    compare(&model, &base, profile, player, deviation, config)
}

/// The fixed deviation family: constants 0 and 1, κ† ± 0.2, and threshold
/// rules at k₀, the midpoint, and k₀ + N − 1. Player 0 deviates from the
/// symmetric equilibrium.
pub fn deviation_family(model: &LevyModel, pi0: &Belief, config: &SimConfig) -> Result<Vec<DeviationResult>> {
    let model = model.with_prior(pi0.clone())?;
    let eq = Strategy::equilibrium(&model);
    let profile = vec![eq.clone(); model.n_players()];
    let k0 = model.k0();
    let top = k0 + (model.n_players() as f64 - 1.0);
    let payoffs = model.payoffs().clone();
    let mut family = vec![Strategy::Constant(0.0), Strategy::Constant(1.0)];
    for delta in [0.2, -0.2] {
        family.push(Strategy::Offset {
            base: Box::new(eq.clone()),
            delta,
        });
    }
    for level in [k0, 0.5 * (k0 + top), top] {
        family.push(Strategy::Threshold {
            payoffs: payoffs.clone(),
            level,
        });
    }
    let base = simulate(&model, &profile, config)?;
    family
        .iter()
        .map(|d| compare(&model, &base, &profile, 0, d, config))
        .collect()
}
