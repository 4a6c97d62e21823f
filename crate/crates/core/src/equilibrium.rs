//! The symmetric equilibrium strategy κ†, the k-dependent part of the HJB
//! maximand, best-response classification, and Markov strategies on the
//! simplex with their class checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SimplexGrid;
use crate::model::{Belief, Incentive, LevyModel, Payoffs};

/// Relative tolerance on the maximand numerator for knife-edge classification.
pub const KNIFE_EDGE_TOL: f64 = 1e-10;

// ── The equilibrium rule ────────────────────────────────────────────────

/// κ† as a function of the incentive, parameterized by k₀ and N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRule {
    pub k0: f64,
    pub n_players: usize,
}

impl EquilibriumRule {
    pub fn new(k0: f64, n_players: usize) -> Result<Self> {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::invalid("k0", format!("must be finite and > 0 (got {k0})")));
        }
        if n_players == 0 {
            return Err(Error::invalid("n_players", "must be >= 1"));
        }
        Ok(Self { k0, n_players })
    }

    pub fn of(model: &LevyModel) -> Self {
        Self {
            k0: model.k0(),
            n_players: model.n_players(),
        }
    }

    /// Incentive level at which κ† reaches `c` ∈ [0, 1]; for N = 1 the
    /// single switching level k₀.
    pub fn incentive_for_action(&self, c: f64) -> f64 {
        self.k0 + (self.n_players as f64 - 1.0) * c
    }

    /// κ† from I: 0 on I ≤ k₀, 1 on I ≥ k₀+N−1, linear in between. For N = 1
    /// the rule is the threshold at k₀.
    pub fn action(&self, incentive: Incentive) -> f64 {
        let i = match incentive {
            Incentive::Infinite => return 1.0,
            Incentive::Finite(i) => i,
        };
        if i <= self.k0 {
            return 0.0;
        }
        let spread = self.n_players as f64 - 1.0;
        if i >= self.k0 + spread {
            return 1.0;
        }
        ((i - self.k0) / spread).clamp(0.0, 1.0)
    }

    /// Regime of κ†: 0 (no experimentation), 1 (interior), 2 (full).
    pub fn regime(&self, incentive: Incentive) -> u8 {
        let a = self.action(incentive);
        if a <= 0.0 {
            0
        } else if a >= 1.0 {
            2
        } else {
            1
        }
    }

    /// The k-dependent term ([k₀+(N−1)κ̄](s−m) − (f−s)) / (k₀+(N−1)κ̄+k).
    pub fn maximand(&self, payoffs: &Payoffs, full: &[f64], kbar: f64, k: f64) -> f64 {
        let (num, _) = self.numerator(payoffs, full, kbar);
        num / (self.others(kbar) + k)
    }

    fn others(&self, kbar: f64) -> f64 {
        self.k0 + (self.n_players as f64 - 1.0) * kbar
    }

    /// Numerator of the maximand and its magnitude scale |s−m|+|f−s|.
    fn numerator(&self, payoffs: &Payoffs, full: &[f64], kbar: f64) -> (f64, f64) {
        let mut upside = 0.0;
        let mut s_minus_m = 0.0;
        for (p, &mu) in full.iter().zip(&payoffs.mu) {
            upside += p * (mu - payoffs.safe).max(0.0);
            s_minus_m += p * (payoffs.safe - mu);
        }
        (
            self.others(kbar) * s_minus_m - upside,
            s_minus_m.abs() + upside.abs(),
        )
    }

    pub fn best_response(&self, payoffs: &Payoffs, full: &[f64], kbar: f64) -> BestResponse {
        let (num, scale) = self.numerator(payoffs, full, kbar);
        if num.abs() <= KNIFE_EDGE_TOL * scale {
            BestResponse::AllOfUnitInterval
        } else if num > 0.0 {
            BestResponse::Zero
        } else {
            BestResponse::One
        }
    }
}

/// Argmax of the HJB maximand over k ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BestResponse {
    Zero,
    One,
    AllOfUnitInterval,
}

impl BestResponse {
    pub fn contains(self, k: f64) -> bool {
        match self {
            BestResponse::Zero => k == 0.0,
            BestResponse::One => k == 1.0,
            BestResponse::AllOfUnitInterval => (0.0..=1.0).contains(&k),
        }
    }
}

/// κ†(π) for a discrete model.
pub fn equilibrium_action(model: &LevyModel, pi: &Belief) -> Result<f64> {
    Ok(EquilibriumRule::of(model).action(model.incentive(pi)?))
}

/// The k-dependent term of the HJB maximand; the generator term does not
/// depend on k and is left out.
pub fn hjb_maximand(model: &LevyModel, pi: &Belief, opponents_action: f64, k: f64) -> Result<f64> {
    check_unit("opponents_action", opponents_action)?;
    check_unit("k", k)?;
    model.incentive(pi)?;
    Ok(EquilibriumRule::of(model).maximand(model.payoffs(), pi.full(), opponents_action, k))
}

pub fn best_response_set(model: &LevyModel, pi: &Belief, opponents_action: f64) -> Result<BestResponse> {
    check_unit("opponents_action", opponents_action)?;
    model.incentive(pi)?;
    Ok(EquilibriumRule::of(model).best_response(model.payoffs(), pi.full(), opponents_action))
}

fn check_unit(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must lie in [0, 1] (got {v})")))
    }
}

// ── Strategies ──────────────────────────────────────────────────────────

/// A Markov strategy κ: Δ_L → [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// κ† in closed form.
    Equilibrium { payoffs: Payoffs, rule: EquilibriumRule },
    /// Nodal values on a simplex grid, interpolated linearly on the Kuhn triangulation.
    Tabulated { grid: SimplexGrid, values: Vec<f64> },
    Constant(f64),
    /// clamp(base + delta, 0, 1).
    Offset { base: Box<Strategy>, delta: f64 },
    /// 1 where I(π) > level, else 0.
    Threshold { payoffs: Payoffs, level: f64 },
    /// clamp(intercept + Σ w_ℓ π_ℓ, 0, 1) over ℓ = 1..L.
    Linear { intercept: f64, weights: Vec<f64> },
}

impl Strategy {
    pub fn equilibrium(model: &LevyModel) -> Self {
        Strategy::Equilibrium {
            payoffs: model.payoffs().clone(),
            rule: EquilibriumRule::of(model),
        }
    }

    pub fn constant(k: f64) -> Result<Self> {
        check_unit("strategy", k)?;
        Ok(Strategy::Constant(k))
    }

    /// Tabulates `source` at the nodes of `grid`.
    pub fn tabulate(source: &Strategy, grid: SimplexGrid) -> Self {
        let values = (0..grid.len()).map(|n| source.action(&grid.full(n))).collect();
        Strategy::Tabulated { grid, values }
    }

    /// Parses a compact strategy description: `eq`, `const:K`,
    /// `offset:D` (κ† shifted by D), `threshold:C`, or `linear:A,W1,…,WL`.
    pub fn parse(text: &str, model: &LevyModel) -> Result<Self> {
        let text = text.trim();
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (text, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| Error::invalid("profile", format!("`{head}` needs an argument")))?;
            a.parse::<f64>()
                .map_err(|_| Error::invalid("profile", format!("cannot parse `{a}` as a number")))
        };
        match head {
            "eq" | "equilibrium" if arg.is_none() => Ok(Self::equilibrium(model)),
            "const" | "constant" => Self::constant(num(arg)?),
            "offset" => {
                let delta = num(arg)?;
                if !delta.is_finite() {
                    return Err(Error::invalid("profile", "offset must be finite"));
                }
                Ok(Strategy::Offset {
                    base: Box::new(Self::equilibrium(model)),
                    delta,
                })
            }
            "threshold" => {
                let level = num(arg)?;
                if !(level >= 0.0) {
                    return Err(Error::invalid("profile", "threshold level must be >= 0"));
                }
                Ok(Strategy::Threshold {
                    payoffs: model.payoffs().clone(),
                    level,
                })
            }
            "linear" => {
                let parts = arg
                    .ok_or_else(|| Error::invalid("profile", "`linear` needs coefficients"))?
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::invalid("profile", format!("cannot parse `{p}` as a number")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if parts.len() != model.dim() + 1 {
                    return Err(Error::invalid(
                        "profile",
                        format!("`linear` needs {} coefficients", model.dim() + 1),
                    ));
                }
                Ok(Strategy::Linear {
                    intercept: parts[0],
                    weights: parts[1..].to_vec(),
                })
            }
            _ => Err(Error::invalid("profile", format!("unknown strategy `{text}`"))),
        }
    }

    /// Parses a comma-free, `;`- or `/`-separated list, or a single entry
    /// replicated for all N players.
    pub fn parse_profile(text: &str, model: &LevyModel) -> Result<Vec<Self>> {
        let parts: Vec<&str> = text.split(['/', ';']).filter(|p| !p.trim().is_empty()).collect();
        let n = model.n_players();
        match parts.len() {
            1 => Ok(vec![Self::parse(parts[0], model)?; n]),
            len if len == n => parts.iter().map(|p| Self::parse(p, model)).collect(),
            len => Err(Error::invalid(
                "profile",
                format!("got {len} strategies for {n} players"),
            )),
        }
    }

    /// κ(π) on the full vector (π₀, …, π_L).
    pub fn action(&self, full: &[f64]) -> f64 {
        match self {
            Strategy::Equilibrium { payoffs, rule } => rule.action(payoffs.incentive_full(full)),
            Strategy::Tabulated { grid, values } => grid.interpolate(values, &full[1..]).clamp(0.0, 1.0),
            Strategy::Constant(k) => *k,
            Strategy::Offset { base, delta } => (base.action(full) + delta).clamp(0.0, 1.0),
            Strategy::Threshold { payoffs, level } => {
                if payoffs.incentive_full(full).as_f64() > *level {
                    1.0
                } else {
                    0.0
                }
            }
            Strategy::Linear { intercept, weights } => {
                let v: f64 = intercept + weights.iter().zip(&full[1..]).map(|(w, p)| w * p).sum::<f64>();
                v.clamp(0.0, 1.0)
            }
        }
    }

    pub fn action_at(&self, pi: &Belief) -> f64 {
        self.action(pi.full())
    }

    /// Short description used in reports.
    pub fn label(&self) -> String {
        match self {
            Strategy::Equilibrium { .. } => "eq".into(),
            Strategy::Tabulated { grid, .. } => format!("tabulated:{}", grid.resolution()),
            Strategy::Constant(k) => format!("const:{k}"),
            Strategy::Offset { base, delta } => {
                if matches!(**base, Strategy::Equilibrium { .. }) {
                    format!("offset:{delta}")
                } else {
                    format!("offset({}):{delta}", base.label())
                }
            }
            Strategy::Threshold { level, .. } => format!("threshold:{level}"),
            Strategy::Linear { intercept, weights } => {
                let w: Vec<String> = weights.iter().map(f64::to_string).collect();
                format!("linear:{intercept},{}", w.join(","))
            }
        }
    }
}

// ── Class checks ────────────────────────────────────────────────────────

/// Max over grid edges of |Δκ| / ‖Δπ‖. This is a lower bound on the true
/// Lipschitz constant.
pub fn lipschitz_estimate(strategy: &Strategy, grid: &SimplexGrid) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "empty region"));
    }
    let values: Vec<f64> = (0..grid.len()).map(|n| strategy.action(&grid.full(n))).collect();
    let h = grid.step();
    let mut best: f64 = 0.0;
    for (a, b) in grid.edges() {
        let dist: f64 = grid
            .coords(a)
            .iter()
            .zip(grid.coords(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let dist = if dist > 0.0 { dist } else { h };
        best = best.max((values[a] - values[b]).abs() / dist);
    }
    Ok(best)
}

/// Face of the simplex on which a reasonable strategy is pinned down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Face {
    /// Δ¹: all mass on states with μ_ℓ ≥ s; the strategy must equal 1 nearby.
    Risky,
    /// Δ⁰: all mass on states with μ_ℓ ≤ s; the strategy must equal 0 nearby.
    Safe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub face: Face,
    pub belief: Vec<f64>,
    pub action: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonablenessReport {
    pub reasonable: bool,
    /// Largest tested neighborhood width on which both face conditions hold.
    pub neighborhood: Option<f64>,
    pub witness: Option<Violation>,
}

/// Tests whether `strategy` equals 1 near Δ¹ and 0 near Δ⁰ on a sample of
/// points (1−t)q + t·r, q on the face grid, r on a coarse simplex grid,
/// for a decreasing sequence of widths t.
pub fn is_reasonable(strategy: &Strategy, payoffs: &Payoffs) -> ReasonablenessReport {
    let dim = payoffs.dim();
    let (face_res, full_res) = match dim {
        1 => (1, 8),
        2 => (24, 8),
        3 => (10, 5),
        _ => (4, 3),
    };
    let coarse = SimplexGrid::new(dim, full_res.max(2)).expect("valid coarse grid");
    let risky_states: Vec<usize> = (0..=dim).filter(|&l| payoffs.mu[l] >= payoffs.safe).collect();
    let safe_states: Vec<usize> = (0..=dim).filter(|&l| payoffs.mu[l] <= payoffs.safe).collect();
    let faces = [
        (Face::Risky, face_points(dim, &risky_states, face_res), 1.0),
        (Face::Safe, face_points(dim, &safe_states, face_res), 0.0),
    ];

    let mut witness = None;
    let mut t = 0.1;
    while t > 1e-5 {
        let mut failed = None;
        'faces: for (face, points, target) in &faces {
            for q in points {
                for r in 0..coarse.len() {
                    let rf = coarse.full(r);
                    let full: Vec<f64> = q.iter().zip(&rf).map(|(a, b)| (1.0 - t) * a + t * b).collect();
                    let a = strategy.action(&full);
                    if a != *target {
                        failed = Some(Violation {
                            face: *face,
                            belief: full[1..].to_vec(),
                            action: a,
                        });
                        break 'faces;
                    }
                }
            }
        }
        match failed {
            None => {
                return ReasonablenessReport {
                    reasonable: true,
                    neighborhood: Some(t),
                    witness: None,
                }
            }
            Some(v) => witness = Some(v),
        }
        t *= 0.5;
    }
    ReasonablenessReport {
        reasonable: false,
        neighborhood: None,
        witness,
    }
}

/// Grid points of the face spanned by `states`, as full vectors.
fn face_points(dim: usize, states: &[usize], res: usize) -> Vec<Vec<f64>> {
    if states.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let k = states.len();
    if k == 1 {
        let mut full = vec![0.0; dim + 1];
        full[states[0]] = 1.0;
        return vec![full];
    }
    let grid = SimplexGrid::new(k - 1, res.max(2)).expect("valid face grid");
    for n in 0..grid.len() {
        let local = grid.full(n);
        let mut full = vec![0.0; dim + 1];
        for (j, &l) in states.iter().enumerate() {
            full[l] = local[j];
        }
        out.push(full);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig1(s: f64) -> Payoffs {
        Payoffs::new(vec![2.0, 5.0, 8.0], s).unwrap()
    }

    fn rule() -> EquilibriumRule {
        EquilibriumRule::new(0.2, 4).unwrap()
    }

    #[test]
    fn action_at_fig1_point() {
        let p = fig1(6.0);
        let pi = Belief::new(&[0.5, 0.25]).unwrap();
        assert_abs_diff_eq!(rule().action(p.incentive(&pi)), 0.1, epsilon = 1e-15);
        assert_eq!(rule().action(Incentive::Infinite), 1.0);
        assert_eq!(rule().action(Incentive::Finite(0.0)), 0.0);
        assert_eq!(rule().action(Incentive::Finite(0.2)), 0.0);
        assert_eq!(rule().action(Incentive::Finite(3.2)), 1.0);
    }

    #[test]
    fn single_player_is_a_threshold() {
        let r = EquilibriumRule::new(0.5, 1).unwrap();
        assert_eq!(r.action(Incentive::Finite(0.5)), 0.0);
        assert_eq!(r.action(Incentive::Finite(0.500001)), 1.0);
    }

    #[test]
    fn best_response_classification() {
        let p = fig1(6.0);
        let pi = Belief::new(&[0.5, 0.25]).unwrap();
        assert_eq!(rule().best_response(&p, pi.full(), 0.1), BestResponse::AllOfUnitInterval);
        let safe = Belief::new(&[0.6, 0.0]).unwrap();
        assert_eq!(rule().best_response(&p, safe.full(), 0.3), BestResponse::Zero);
        let top = Belief::vertex(2, 2).unwrap();
        assert_eq!(rule().best_response(&p, top.full(), 0.0), BestResponse::One);
    }

    #[test]
    fn maximand_signs() {
        let p = fig1(6.0);
        let pi = Belief::new(&[0.5, 0.25]).unwrap();
        let r = rule();
        // Numerator positive: decreasing in k.
        let lo = Belief::new(&[0.2, 0.05]).unwrap();
        assert!(r.maximand(&p, lo.full(), 0.0, 0.0) > r.maximand(&p, lo.full(), 0.0, 1.0));
        assert!(r.maximand(&p, lo.full(), 0.0, 1.0) > 0.0);
        // Numerator negative: increasing in k.
        let hi = Belief::new(&[0.1, 0.8]).unwrap();
        assert!(r.maximand(&p, hi.full(), 0.0, 1.0) > r.maximand(&p, hi.full(), 0.0, 0.0));
        assert_abs_diff_eq!(r.maximand(&p, pi.full(), 0.1, 0.7), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn strategy_parsing() {
        let model = crate::model::LevyModel::new(
            vec![
                crate::model::StateSpec::brownian(2.0),
                crate::model::StateSpec::brownian(5.0),
                crate::model::StateSpec::brownian(8.0),
            ],
            1.0,
            6.0,
            Belief::uniform(2),
            0.2,
            4,
        )
        .unwrap();
        let prof = Strategy::parse_profile("eq", &model).unwrap();
        assert_eq!(prof.len(), 4);
        let prof = Strategy::parse_profile("eq/const:0/offset:0.2/threshold:1.5", &model).unwrap();
        assert_eq!(prof[1], Strategy::Constant(0.0));
        assert_eq!(prof[2].label(), "offset:0.2");
        assert!(Strategy::parse("const:2", &model).is_err());
        assert!(Strategy::parse("wiggle", &model).is_err());
        assert!(Strategy::parse_profile("eq/eq", &model).is_err());
        let lin = Strategy::parse("linear:0.1,1,0", &model).unwrap();
        assert_abs_diff_eq!(lin.action(&[0.5, 0.3, 0.2]), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn reasonableness() {
        let p = fig1(6.0);
        let eq = Strategy::Equilibrium {
            payoffs: p.clone(),
            rule: rule(),
        };
        assert!(is_reasonable(&eq, &p).reasonable);
        let half = is_reasonable(&Strategy::Constant(0.5), &p);
        assert!(!half.reasonable);
        assert!(half.witness.is_some());
        let zero = is_reasonable(&Strategy::Constant(0.0), &p);
        assert_eq!(zero.witness.unwrap().face, Face::Risky);
    }

    #[test]
    fn lipschitz_of_simple_strategies() {
        let g1 = SimplexGrid::new(1, 50).unwrap();
        assert_eq!(lipschitz_estimate(&Strategy::Constant(0.3), &g1).unwrap(), 0.0);
        let lin = Strategy::Linear {
            intercept: 0.0,
            weights: vec![1.0],
        };
        assert_abs_diff_eq!(lipschitz_estimate(&lin, &g1).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tabulated_matches_at_nodes() {
        let p = fig1(6.0);
        let eq = Strategy::Equilibrium {
            payoffs: p,
            rule: rule(),
        };
        let grid = SimplexGrid::new(2, 20).unwrap();
        let tab = Strategy::tabulate(&eq, grid.clone());
        for n in (0..grid.len()).step_by(7) {
            assert_abs_diff_eq!(tab.action(&grid.full(n)), eq.action(&grid.full(n)), epsilon = 1e-14);
        }
    }
}
