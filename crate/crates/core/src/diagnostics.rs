//! Bundled model diagnostics: learning rates, jump-news directions, strategy
//! class checks, convergence fits and conjugate Lipschitz reports.

use serde::{Deserialize, Serialize};

use crate::conjugate::{gamma_lipschitz_check, normal_lipschitz_check, ConjugateModel, ConjugateStat};
use crate::conjugate::{GammaLipschitzReport, NormalLipschitzReport};
use crate::equilibrium::{is_reasonable, lipschitz_estimate, ReasonablenessReport, Strategy};
use crate::error::Result;
use crate::filtering::{brownian_error_decay_rate, jump_update, learning_rates, LogOddsDiagnostics};
use crate::grid::SimplexGrid;
use crate::model::LevyModel;
use crate::montecarlo::{convergence_diagnostics, simulate, ConvergenceDiagnostics, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Unchanged,
}

/// Effect of one observed jump size on the belief at the prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpDirection {
    pub size: f64,
    pub posterior: Vec<f64>,
    pub mean_before: f64,
    pub mean_after: f64,
    /// Direction of the expected payoff m(π).
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDiagnostics {
    pub learning_rates: Option<LogOddsDiagnostics>,
    /// Decay rate of E_ℓ[error] per unit operational time for L = 1 without jumps.
    pub error_decay_rate: Option<f64>,
    pub jump_directions: Option<Vec<JumpDirection>>,
    /// Grid lower bound on the Lipschitz constant of κ†.
    pub lipschitz_estimate: f64,
    pub reasonable: ReasonablenessReport,
    pub convergence: Option<ConvergenceDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateDiagnostics {
    pub normal: Option<NormalLipschitzReport>,
    pub gamma: Option<GammaLipschitzReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DiagnosticsReport {
    Discrete(DiscreteDiagnostics),
    Conjugate(ConjugateDiagnostics),
}

pub fn jump_directions(model: &LevyModel) -> Result<Vec<JumpDirection>> {
    let pi = model.prior();
    let before = model.payoffs().m(pi);
    model
        .atoms()
        .sizes
        .iter()
        .map(|&h| {
            let post = jump_update(model, pi, h)?;
            let after = model.payoffs().m(&post);
            let direction = if after > before {
                Direction::Up
            } else if after < before {
                Direction::Down
            } else {
                Direction::Unchanged
            };
            Ok(JumpDirection {
                size: h,
                posterior: post.full().to_vec(),
                mean_before: before,
                mean_after: after,
                direction,
            })
        })
        .collect()
}

/// Diagnostics for a discrete-state model. With `sim`, the κ† profile is
/// simulated and belief-error decay rates are fitted.
pub fn discrete_diagnostics(model: &LevyModel, sim: Option<&SimConfig>) -> Result<DiscreteDiagnostics> {
    let (learning, decay) = if model.dim() == 1 {
        (Some(learning_rates(model)?), brownian_error_decay_rate(model)?)
    } else {
        (None, None)
    };
    let eq = Strategy::equilibrium(model);
    let res = match model.dim() {
        1 => 400,
        2 => 100,
        3 => 30,
        _ => 10,
    };
    let convergence = match sim {
        Some(cfg) => {
            let profile = vec![eq.clone(); model.n_players()];
            let ens = simulate(model, &profile, cfg)?;
            Some(convergence_diagnostics(&ens, model)?)
        }
        None => None,
    };
    Ok(DiscreteDiagnostics {
        learning_rates: learning,
        error_decay_rate: decay,
        jump_directions: if model.has_jumps() {
            Some(jump_directions(model)?)
        } else {
            None
        },
        lipschitz_estimate: lipschitz_estimate(&eq, &SimplexGrid::new(model.dim(), res)?)?,
        reasonable: is_reasonable(&eq, model.payoffs()),
        convergence,
    })
}

/// Lipschitz reports on the band k₀ ≤ I ≤ k₀ + N − 1 for a conjugate model.
pub fn conjugate_diagnostics(model: &ConjugateModel) -> Result<ConjugateDiagnostics> {
    model.validate()?;
    let rule = model.rule();
    let band = [rule.incentive_for_action(0.0), rule.incentive_for_action(1.0)];
    Ok(match model.prior()? {
        ConjugateStat::Normal(st) => ConjugateDiagnostics {
            normal: Some(normal_lipschitz_check(band, [st.tau, st.tau * 1e4], 20, 40)?),
            gamma: None,
        },
        ConjugateStat::Gamma(st) => ConjugateDiagnostics {
            normal: None,
            gamma: Some(gamma_lipschitz_check(
                st.alpha,
                model.safe_payoff(),
                band,
                Some(st.beta),
                200,
            )?),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Belief, JumpMeasure, StateSpec};

    #[test]
    fn news_example_directions() {
        let sizes = [-10.0, -5.0, 5.0, 10.0];
        let bad = JumpMeasure::from_probabilities(&sizes, &[0.5, 0.1, 0.1, 0.3], 1.0).unwrap();
        let good = JumpMeasure::from_probabilities(&sizes, &[0.1, 0.3, 0.5, 0.1], 1.0).unwrap();
        let states = vec![StateSpec::new(0.0, bad), StateSpec::new(0.5, good)];
        let m = LevyModel::new(states, 1.0, 0.5, Belief::new(&[0.5]).unwrap(), 0.2, 2).unwrap();
        let d = discrete_diagnostics(&m, None).unwrap();
        let dirs: Vec<Direction> = d.jump_directions.unwrap().iter().map(|j| j.direction).collect();
        assert_eq!(dirs, [Direction::Down, Direction::Up, Direction::Up, Direction::Down]);
        assert!(d.learning_rates.is_some());
        assert!(d.reasonable.reasonable);
    }

    #[test]
    fn brownian_model_has_no_jump_block() {
        let states = vec![StateSpec::brownian(0.0), StateSpec::brownian(1.0)];
        let m = LevyModel::new(states, 1.0, 0.5, Belief::new(&[0.5]).unwrap(), 0.2, 4).unwrap();
        let d = discrete_diagnostics(&m, None).unwrap();
        assert!(d.jump_directions.is_none());
        assert!(d.learning_rates.is_some());
        assert!(d.error_decay_rate.is_some());
    }

    #[test]
    fn conjugate_dispatch() {
        let g = ConjugateModel::Gamma {
            alpha: 2.0,
            beta: 1.0,
            safe_payoff: 6.0,
            k0: 0.2,
            n_players: 4,
        };
        let d = conjugate_diagnostics(&g).unwrap();
        assert!(d.gamma.is_some() && d.normal.is_none());
    }
}
