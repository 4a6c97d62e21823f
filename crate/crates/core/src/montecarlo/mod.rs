//! Simulation of full game paths under arbitrary Markov profiles and
//! estimation of the strong long-run average payoff.

mod engine;
mod estimate;

pub use engine::simulate;
pub use estimate::{
    checkpoint_estimates, convergence_diagnostics, deviation_family, estimate_lra_payoff, unilateral_deviation_value,
    ConvergenceDiagnostics, DeviationResult, LraEstimate, StateRate,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtering::learning_rates;
use crate::model::LevyModel;

/// How the true state of each path is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// State drawn from the prior on every path.
    PriorMixture,
    /// Every path in the given state.
    FixedState(usize),
    /// Path i in state i mod (L+1); estimates weight the per-state means by
    /// the prior, and standard errors are taken over (L+1)-tuples of paths.
    Stratified,
}

/// Belief-update scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exact Bayes update of log-likelihoods given the step's observations.
    #[default]
    ExactLikelihood,
    /// Euler–Maruyama on the innovation-form belief SDE with exact jump
    /// updates, clipping and renormalization.
    EulerMaruyama,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub conditioning: Conditioning,
    #[serde(default)]
    pub scheme: Scheme,
    /// Approximate number of recording intervals for ensemble curves.
    #[serde(default = "default_records")]
    pub records: usize,
    /// Times at which each path's cumulative shortfall is stored.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    /// Number of leading paths whose trajectories are kept in full.
    #[serde(default)]
    pub keep_paths: usize,
}

fn default_records() -> usize {
    200
}

impl SimConfig {
    pub fn new(horizon: f64, dt: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            horizon,
            dt,
            n_paths,
            seed,
            conditioning: Conditioning::PriorMixture,
            scheme: Scheme::ExactLikelihood,
            records: default_records(),
            checkpoints: Vec::new(),
            keep_paths: 0,
        }
    }

    /// dt = 1e-3, 10⁴ paths, and for L = 1 a horizon of 40/(|η|k₀) with
    /// |η| the smaller of |η₀|, |η₁|; otherwise T = 40/k₀.
    pub fn default_for(model: &LevyModel) -> Self {
        let eta = learning_rates(model)
            .ok()
            .map(|d| d.eta[0].abs().min(d.eta[1].abs()))
            .filter(|e| *e > 0.0)
            .unwrap_or(1.0);
        Self::new(40.0 / (eta * model.k0()), 1e-3, 10_000, 0)
    }

    pub fn with_conditioning(mut self, c: Conditioning) -> Self {
        self.conditioning = c;
        self
    }

    pub fn with_checkpoints(mut self, t: Vec<f64>) -> Self {
        self.checkpoints = t;
        self
    }

    pub fn with_scheme(mut self, s: Scheme) -> Self {
        self.scheme = s;
        self
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    pub fn validate(&self, model: &LevyModel) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be finite and > 0 (got {})", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("must be finite and >= dt (got {})", self.horizon)));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("paths", "must be >= 1"));
        }
        if self.records == 0 {
            return Err(Error::invalid("records", "must be >= 1"));
        }
        if let Some(t) = self.checkpoints.iter().find(|&&t| !(t > 0.0 && t <= self.horizon * (1.0 + 1e-12))) {
            return Err(Error::invalid("checkpoints", format!("checkpoint {t} outside (0, horizon]")));
        }
        match self.conditioning {
            Conditioning::FixedState(l) if l > model.dim() => Err(Error::StateOutOfRange {
                index: l,
                states: model.n_states(),
            }),
            Conditioning::Stratified if self.n_paths % model.n_states() != 0 => Err(Error::invalid(
                "paths",
                format!(
                    "stratified runs need a multiple of {} paths (got {})",
                    model.n_states(),
                    self.n_paths
                ),
            )),
            _ => Ok(()),
        }
    }
}

/// Per-path summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub index: usize,
    pub seed: u64,
    pub state: usize,
    pub final_belief: Vec<f64>,
    /// ∫₀ᵀ {(1−k)s + k m(π) − f(π)} dt per player.
    pub shortfall: Vec<f64>,
    /// Shortfall per player at each configured checkpoint.
    pub checkpoint_shortfall: Vec<Vec<f64>>,
    /// τⁿ(T) = ∫₀ᵀ k_{n,t} dt.
    pub operational_time: Vec<f64>,
    pub jumps: u64,
    /// Euler–Maruyama steps that left the simplex by more than the tolerance.
    pub simplex_corrections: u64,
    /// Largest value of the shortfall integrand along the path.
    pub max_integrand: f64,
}

/// Ensemble means on the recording grid. Under stratified conditioning the
/// means weight each state by its prior probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub times: Vec<f64>,
    /// E[π_ℓ(t)] for ℓ = 0..=L.
    pub belief: Vec<Vec<f64>>,
    pub m: Vec<f64>,
    pub f: Vec<f64>,
    /// E[(1−k_n)s + k_n m − f] per player.
    pub integrand: Vec<Vec<f64>>,
    /// E_ℓ[1 − π_ℓ(t)] conditional on the true state ℓ; `None` if no path was in state ℓ.
    pub error_by_state: Vec<Option<Vec<f64>>>,
    pub paths_by_state: Vec<usize>,
}

/// Full record of one path on the recording grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub index: usize,
    pub state: usize,
    pub times: Vec<f64>,
    pub beliefs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub operational_time: Vec<Vec<f64>>,
    pub shortfall: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub config: SimConfig,
    pub profile: Vec<String>,
    pub state_means: Vec<f64>,
    pub safe_payoff: f64,
    pub n_players: usize,
    pub initial_belief: Vec<f64>,
    pub steps: usize,
    pub paths: Vec<PathSummary>,
    pub curves: Curves,
    pub trajectories: Vec<Trajectory>,
}

impl PathEnsemble {
    pub fn n_states(&self) -> usize {
        self.initial_belief.len()
    }

    /// Independent sampling units: paths, or (L+1)-tuples under stratification.
    pub fn n_units(&self) -> usize {
        match self.config.conditioning {
            Conditioning::Stratified => self.paths.len() / self.n_states(),
            _ => self.paths.len(),
        }
    }

    /// Per-unit values of a per-path quantity; their mean is the estimator.
    pub fn unit_values(&self, f: impl Fn(&PathSummary) -> f64) -> Vec<f64> {
        match self.config.conditioning {
            Conditioning::Stratified => {
                let k = self.n_states();
                self.paths
                    .chunks(k)
                    .map(|tuple| {
                        tuple
                            .iter()
                            .map(|p| {
                                let w = self.initial_belief[p.state];
                                if w == 0.0 {
                                    0.0
                                } else {
                                    w * f(p)
                                }
                            })
                            .sum()
                    })
                    .collect()
            }
            _ => self.paths.iter().map(f).collect(),
        }
    }

    /// Checks that this ensemble was simulated on a model with the same payoffs.
    pub fn check_model(&self, model: &LevyModel) -> Result<()> {
        let p = model.payoffs();
        if p.mu != self.state_means || p.safe != self.safe_payoff || model.n_players() != self.n_players {
            return Err(Error::Mismatch(
                "the ensemble was simulated under different payoffs or player count".into(),
            ));
        }
        Ok(())
    }

    /// Total number of simplex corrections across paths.
    pub fn simplex_corrections(&self) -> u64 {
        self.paths.iter().map(|p| p.simplex_corrections).sum()
    }
}
