//! Monte Carlo value fields and checks of the HJB characterization.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{best_response_set, BestResponse, EquilibriumRule, Strategy, KNIFE_EDGE_TOL};
use crate::error::{Error, Result};
use crate::filtering::{apply_generator, FdOptions};
use crate::grid::SimplexGrid;
use crate::model::{Belief, LevyModel};
use crate::montecarlo::{simulate, Conditioning, SimConfig};
use crate::stats::MeanSe;

/// Action grid used for the maximand in residual checks.
pub const K_GRID: usize = 21;

/// Estimates of u(π | κ†, κ†₋ₙ) for player 0 on a simplex grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueField {
    pub dim: usize,
    pub resolution: usize,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Per-unit estimates, `units[node][unit]`; all nodes share random numbers.
    #[serde(skip)]
    pub units: Vec<Vec<f64>>,
    pub config: SimConfig,
}

impl ValueField {
    pub fn grid(&self) -> SimplexGrid {
        SimplexGrid::new(self.dim, self.resolution).expect("field grid was valid when built")
    }

    pub fn n_units(&self) -> usize {
        self.units.first().map_or(0, Vec::len)
    }

    /// Piecewise-linear interpolation of the mean field.
    pub fn interpolate(&self, probs: &[f64]) -> f64 {
        self.grid().interpolate(&self.values, probs)
    }
}

/// Simulates the symmetric κ† profile from every node of a grid of the
/// given resolution. Vertices are set to 0 without simulation.
pub fn build_value_field(model: &LevyModel, config: &SimConfig, resolution: usize) -> Result<ValueField> {
    let grid = SimplexGrid::new(model.dim(), resolution)?;
    let profile = vec![Strategy::equilibrium(model); model.n_players()];
    let n_units = match config.conditioning {
        Conditioning::Stratified => config.n_paths / model.n_states(),
        _ => config.n_paths,
    };
    let mut values = Vec::with_capacity(grid.len());
    let mut std_errors = Vec::with_capacity(grid.len());
    let mut units = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        if grid.is_vertex(node) {
            values.push(0.0);
            std_errors.push(0.0);
            units.push(vec![0.0; n_units]);
            continue;
        }
        let m = model.with_prior(grid.belief(node))?;
        let ens = simulate(&m, &profile, config)?;
        let u = ens.unit_values(|p| p.shortfall[0]);
        let ms = MeanSe::of(&u);
        values.push(ms.mean);
        std_errors.push(ms.se);
        units.push(u);
    }
    Ok(ValueField {
        dim: model.dim(),
        resolution,
        values,
        std_errors,
        units,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub node: usize,
    pub belief: Vec<f64>,
    pub kappa: f64,
    /// Mean of 𝒢u over units and its standard error.
    pub generator: MeanSe,
    /// max over the k-grid of (1−k)s + k m − f + (k₀ + (N−1)κ† + k)·𝒢u.
    pub residual: f64,
    /// (k₀ + (N−1)κ† + k*)·SE(𝒢u) at the maximizing k*.
    pub uncertainty: f64,
    pub argmax: f64,
    /// (f − (1−κ†)s − κ†m)/(k₀ + Nκ†).
    pub closed_form_generator: f64,
}

impl Residual {
    pub fn within(&self, factor: f64) -> bool {
        self.residual.abs() <= factor * self.uncertainty
    }

    pub fn closed_form_within(&self, factor: f64) -> bool {
        (self.generator.mean - self.closed_form_generator).abs() <= factor * self.generator.se
    }
}

/// HJB residual at a grid node. Derivatives are central differences with a
/// step of one grid cell on the interpolated per-unit fields.
pub fn hjb_residual(field: &ValueField, model: &LevyModel, node: usize) -> Result<Residual> {
    let grid = field.grid();
    if model.dim() != field.dim {
        return Err(Error::Mismatch("field and model have different dimensions".into()));
    }
    if node >= grid.len() {
        return Err(Error::invalid("node", format!("node {node} out of range")));
    }
    let pi = grid.belief(node);
    let fd = FdOptions {
        step: grid.step(),
        richardson: false,
    };
    let n_units = field.n_units();
    let mut per_unit = vec![0.0; grid.len()];
    let mut gens = Vec::with_capacity(n_units);
    for unit in 0..n_units {
        for (v, u) in per_unit.iter_mut().zip(&field.units) {
            *v = u[unit];
        }
        let u = |p: &[f64]| grid.interpolate(&per_unit, p);
        gens.push(apply_generator(model, &u, &pi, fd)?);
    }
    let generator = MeanSe::of(&gens);
    let payoffs = model.payoffs();
    let (m, f, s) = (payoffs.m(&pi), payoffs.f(&pi), payoffs.safe);
    let rule = EquilibriumRule::of(model);
    let kappa = rule.action(payoffs.incentive(&pi));
    let others = model.k0() + (model.n_players() as f64 - 1.0) * kappa;
    let (mut residual, mut argmax) = (f64::NEG_INFINITY, 0.0);
    for j in 0..K_GRID {
        let k = j as f64 / (K_GRID - 1) as f64;
        let v = (1.0 - k) * s + k * m - f + (others + k) * generator.mean;
        if v > residual {
            residual = v;
            argmax = k;
        }
    }
    Ok(Residual {
        node,
        belief: pi.full().to_vec(),
        kappa,
        generator,
        residual,
        uncertainty: (others + argmax) * generator.se,
        argmax,
        closed_form_generator: (f - (1.0 - kappa) * s - kappa * m) / (model.k0() + model.n_players() as f64 * kappa),
    })
}

/// Whether the derivative stencil at `node` stays inside one κ† regime.
pub fn stencil_is_smooth(grid: &SimplexGrid, model: &LevyModel, node: usize) -> bool {
    let rule = EquilibriumRule::of(model);
    let regime = |n: usize| rule.regime(model.payoffs().incentive(&grid.belief(n)));
    let r0 = regime(node);
    let dim = grid.dim();
    for i in 0..dim {
        for sign in [-1i64, 1] {
            let mut d = vec![0i64; dim];
            d[i] = sign;
            match grid.offset(node, &d) {
                Some(n) if regime(n) == r0 => {}
                _ => return false,
            }
            for l in (i + 1)..dim {
                for s2 in [-1i64, 1] {
                    let mut d2 = d.clone();
                    d2[l] = s2;
                    match grid.offset(node, &d2) {
                        Some(n) if regime(n) == r0 => {}
                        _ => return false,
                    }
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjbReport {
    pub residuals: Vec<Residual>,
    /// Interior nodes skipped because the stencil crosses a κ† regime boundary.
    pub skipped: Vec<usize>,
    pub failures: Vec<usize>,
    pub pass_fraction: f64,
}

/// Residuals at every interior node whose stencil lies in one κ† regime.
pub fn hjb_check(field: &ValueField, model: &LevyModel, factor: f64) -> Result<HjbReport> {
    let grid = field.grid();
    let mut residuals = Vec::new();
    let mut skipped = Vec::new();
    for node in 0..grid.len() {
        if grid.boundary_distance(node) < 1 || (model.dim() >= 2 && grid.boundary_distance(node) < 2) {
            continue;
        }
        if !stencil_is_smooth(&grid, model, node) {
            skipped.push(node);
            continue;
        }
        residuals.push(hjb_residual(field, model, node)?);
    }
    let failures: Vec<usize> = residuals.iter().filter(|r| !r.within(factor)).map(|r| r.node).collect();
    let pass_fraction = if residuals.is_empty() {
        f64::NAN
    } else {
        1.0 - failures.len() as f64 / residuals.len() as f64
    };
    Ok(HjbReport {
        residuals,
        skipped,
        failures,
        pass_fraction,
    })
}

/// Whether the argmax of the maximand over the k-grid equals the
/// best-response classification at `pi` against opponents playing `kbar`.
pub fn argmax_matches(model: &LevyModel, pi: &Belief, kbar: f64) -> Result<bool> {
    let set = best_response_set(model, pi, kbar)?;
    let payoffs = model.payoffs();
    let rule = EquilibriumRule::of(model);
    let vals: Vec<f64> = (0..K_GRID)
        .map(|j| rule.maximand(payoffs, pi.full(), kbar, j as f64 / (K_GRID - 1) as f64))
        .collect();
    let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (m, f, s) = (payoffs.m(pi), payoffs.f(pi), payoffs.safe);
    let tol = KNIFE_EDGE_TOL * ((s - m).abs() + (f - s).abs()) / rule.incentive_for_action(kbar);
    let arg: Vec<usize> = (0..K_GRID).filter(|&j| vals[j] >= best - tol).collect();
    Ok(match set {
        BestResponse::Zero => arg == [0],
        BestResponse::One => arg == [K_GRID - 1],
        BestResponse::AllOfUnitInterval => arg.len() == K_GRID,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub from: usize,
    pub to: usize,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Values rise toward 0 at both ends, within 3 standard errors per step.
    pub monotone_to_vertices: bool,
    /// One endpoint has μ < s and the other μ > s.
    pub crosses_safe_payoff: bool,
    pub midpoint: f64,
    pub midpoint_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexReport {
    pub vertices_zero: bool,
    pub edges: Vec<EdgeReport>,
    pub all_monotone: bool,
}

/// Checks u = 0 at vertices and the shape of u along simplex edges.
pub fn vertex_boundary_check(field: &ValueField, model: &LevyModel) -> VertexReport {
    let grid = field.grid();
    let vertices_zero = (0..grid.len())
        .filter(|&n| grid.is_vertex(n))
        .all(|n| field.values[n] == 0.0);
    let mu = &model.payoffs().mu;
    let s = model.safe_payoff();
    let mut edges = Vec::new();
    for a in 0..=field.dim {
        for b in (a + 1)..=field.dim {
            let nodes = grid.edge_nodes(a, b);
            let values: Vec<f64> = nodes.iter().map(|&n| field.values[n]).collect();
            let std_errors: Vec<f64> = nodes.iter().map(|&n| field.std_errors[n]).collect();
            let low = (0..values.len())
                .min_by(|&i, &j| values[i].total_cmp(&values[j]))
                .unwrap_or(0);
            let tol = |i: usize, j: usize| 3.0 * (std_errors[i].powi(2) + std_errors[j].powi(2)).sqrt();
            let down = (0..low).all(|i| values[i + 1] <= values[i] + tol(i, i + 1));
            let up = (low..values.len() - 1).all(|i| values[i + 1] >= values[i] - tol(i, i + 1));
            let mid = nodes.len() / 2;
            edges.push(EdgeReport {
                from: a,
                to: b,
                monotone_to_vertices: down && up,
                crosses_safe_payoff: (mu[a] - s) * (mu[b] - s) < 0.0,
                midpoint: values[mid],
                midpoint_se: std_errors[mid],
                values,
                std_errors,
            });
        }
    }
    VertexReport {
        vertices_zero,
        all_monotone: edges.iter().all(|e| e.monotone_to_vertices),
        edges,
    }
}
