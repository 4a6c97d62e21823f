use rayon::prelude::*;

use super::{Conditioning, Curves, PathEnsemble, PathSummary, Scheme, SimConfig, Trajectory};
use crate::equilibrium::Strategy;
use crate::error::{Error, Result};
use crate::filtering::jump_update_full;
use crate::model::{renormalize, LevyModel};
use crate::rng::{categorical, PathRng};

const BLOCK: usize = 64;

/// Static data shared by every path of one run.
struct Ctx<'a> {
    model: &'a LevyModel,
    profile: &'a [Strategy],
    /// For each player, the first player with an identical strategy.
    alias: Vec<usize>,
    config: &'a SimConfig,
    steps: usize,
    every: usize,
    n_rec: usize,
    checkpoints: Vec<usize>,
    prior: Vec<f64>,
    log_prior: Vec<f64>,
    /// ln ν_i({h}) per state and atom.
    log_rates: Vec<Vec<f64>>,
    has_jumps: bool,
}

/// Sums accumulated over a block of paths.
#[derive(Clone)]
struct Acc {
    weight: Vec<f64>,
    belief: Vec<Vec<f64>>,
    m: Vec<f64>,
    f: Vec<f64>,
    integrand: Vec<Vec<f64>>,
    error: Vec<Vec<f64>>,
    count: Vec<usize>,
}

impl Acc {
    fn new(n_rec: usize, states: usize, players: usize) -> Self {
        Self {
            weight: vec![0.0; n_rec],
            belief: vec![vec![0.0; states]; n_rec],
            m: vec![0.0; n_rec],
            f: vec![0.0; n_rec],
            integrand: vec![vec![0.0; players]; n_rec],
            error: vec![vec![0.0; n_rec]; states],
            count: vec![0; states],
        }
    }

    fn merge(mut self, other: &Acc) -> Acc {
        fn add(a: &mut [f64], b: &[f64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        add(&mut self.weight, &other.weight);
        add(&mut self.m, &other.m);
        add(&mut self.f, &other.f);
        for (a, b) in self.belief.iter_mut().zip(&other.belief) {
            add(a, b);
        }
        for (a, b) in self.integrand.iter_mut().zip(&other.integrand) {
            add(a, b);
        }
        for (a, b) in self.error.iter_mut().zip(&other.error) {
            add(a, b);
        }
        for (a, b) in self.count.iter_mut().zip(&other.count) {
            *a += b;
        }
        self
    }
}

/// Pairwise reduction in block order, so results do not depend on scheduling.
fn reduce(accs: &[Acc]) -> Acc {
    if accs.len() == 1 {
        return accs[0].clone();
    }
    let mid = accs.len() / 2;
    reduce(&accs[..mid]).merge(&reduce(&accs[mid..]))
}

/// Simulates `config.n_paths` paths of the game under `profile`, starting
/// from the model's prior.
pub fn simulate(model: &LevyModel, profile: &[Strategy], config: &SimConfig) -> Result<PathEnsemble> {
    config.validate(model)?;
    if profile.len() != model.n_players() {
        return Err(Error::invalid(
            "profile",
            format!("got {} strategies for {} players", profile.len(), model.n_players()),
        ));
    }
    let steps = config.steps();
    let every = (steps / config.records).max(1);
    let n_rec = steps / every + 1 + usize::from(steps % every != 0);
    let checkpoints = config
        .checkpoints
        .iter()
        .map(|&t| ((t / config.dt).round() as usize).clamp(1, steps))
        .collect();
    let alias = (0..profile.len())
        .map(|n| (0..n).find(|&j| profile[j] == profile[n]).unwrap_or(n))
        .collect();
    let prior = model.prior().full().to_vec();
    let table = model.atoms();
    let ctx = Ctx {
        model,
        profile,
        alias,
        config,
        steps,
        every,
        n_rec,
        checkpoints,
        log_prior: prior.iter().map(|p| p.ln()).collect(),
        prior,
        log_rates: table
            .rates
            .iter()
            .map(|r| r.iter().map(|x| x.ln()).collect())
            .collect(),
        has_jumps: model.has_jumps(),
    };

    let n_blocks = config.n_paths.div_ceil(BLOCK);
    let blocks: Vec<(Vec<PathSummary>, Acc, Vec<Trajectory>)> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Acc::new(n_rec, model.n_states(), model.n_players());
            let mut sums = Vec::new();
            let mut trajs = Vec::new();
            for index in (b * BLOCK)..((b + 1) * BLOCK).min(config.n_paths) {
                let keep = index < config.keep_paths;
                let (summary, traj) = simulate_path(&ctx, index, &mut acc, keep)?;
                sums.push(summary);
                trajs.extend(traj);
            }
            Ok((sums, acc, trajs))
        })
        .collect::<Result<_>>()?;

    let accs: Vec<Acc> = blocks.iter().map(|b| b.1.clone()).collect();
    let total = reduce(&accs);
    let mut paths = Vec::with_capacity(config.n_paths);
    let mut trajectories = Vec::new();
    for (s, _, t) in blocks {
        paths.extend(s);
        trajectories.extend(t);
    }
    let curves = finish_curves(&ctx, &total);
    Ok(PathEnsemble {
        config: config.clone(),
        profile: profile.iter().map(Strategy::label).collect(),
        state_means: model.payoffs().mu.clone(),
        safe_payoff: model.safe_payoff(),
        n_players: model.n_players(),
        initial_belief: ctx.prior.clone(),
        steps,
        paths,
        curves,
        trajectories,
    })
}

fn record_times(ctx: &Ctx) -> Vec<f64> {
    let mut times: Vec<f64> = (0..ctx.n_rec)
        .map(|r| ((r * ctx.every).min(ctx.steps)) as f64 * ctx.config.dt)
        .collect();
    if let Some(last) = times.last_mut() {
        *last = ctx.steps as f64 * ctx.config.dt;
    }
    times
}

fn finish_curves(ctx: &Ctx, acc: &Acc) -> Curves {
    let div = |v: f64, w: f64| if w > 0.0 { v / w } else { f64::NAN };
    let states = ctx.model.n_states();
    Curves {
        times: record_times(ctx),
        belief: acc
            .belief
            .iter()
            .zip(&acc.weight)
            .map(|(b, &w)| b.iter().map(|x| div(*x, w)).collect())
            .collect(),
        m: acc.m.iter().zip(&acc.weight).map(|(x, &w)| div(*x, w)).collect(),
        f: acc.f.iter().zip(&acc.weight).map(|(x, &w)| div(*x, w)).collect(),
        integrand: acc
            .integrand
            .iter()
            .zip(&acc.weight)
            .map(|(b, &w)| b.iter().map(|x| div(*x, w)).collect())
            .collect(),
        error_by_state: (0..states)
            .map(|l| {
                (acc.count[l] > 0).then(|| acc.error[l].iter().map(|x| x / acc.count[l] as f64).collect())
            })
            .collect(),
        paths_by_state: acc.count.clone(),
    }
}

/// Mutable per-path state.
struct PathState {
    full: Vec<f64>,
    log_w: Vec<f64>,
    scratch: Vec<f64>,
    actions: Vec<f64>,
    integrand: Vec<f64>,
}

impl PathState {
    fn refresh_from_log(&mut self) {
        let max = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (p, &lw) in self.full.iter_mut().zip(&self.log_w) {
            *p = (lw - max).exp();
            total += *p;
        }
        for p in self.full.iter_mut() {
            *p /= total;
        }
        for lw in self.log_w.iter_mut() {
            *lw -= max;
        }
    }

    fn evaluate(&mut self, ctx: &Ctx) -> (f64, f64) {
        let payoffs = ctx.model.payoffs();
        let m = payoffs.m_full(&self.full);
        let f = payoffs.f_full(&self.full);
        let s = payoffs.safe;
        for n in 0..ctx.profile.len() {
            let a = ctx.alias[n];
            self.actions[n] = if a < n {
                self.actions[a]
            } else {
                ctx.profile[n].action(&self.full)
            };
            let k = self.actions[n];
            self.integrand[n] = (1.0 - k) * s + k * m - f;
        }
        (m, f)
    }
}

fn simulate_path(ctx: &Ctx, index: usize, acc: &mut Acc, keep: bool) -> Result<(PathSummary, Option<Trajectory>)> {
    let model = ctx.model;
    let config = ctx.config;
    let states = model.n_states();
    let players = model.n_players();
    let mut rng = PathRng::for_path(config.seed, index as u64);
    let state = match config.conditioning {
        Conditioning::PriorMixture => categorical(rng.init_uniform(), &ctx.prior),
        Conditioning::FixedState(l) => l,
        Conditioning::Stratified => index % states,
    };
    let weight = match config.conditioning {
        Conditioning::Stratified => ctx.prior[state] * states as f64,
        _ => 1.0,
    };

    let mut ps = PathState {
        full: ctx.prior.clone(),
        log_w: ctx.log_prior.clone(),
        scratch: vec![0.0; states],
        actions: vec![0.0; players],
        integrand: vec![0.0; players],
    };
    let (mut m, mut f) = ps.evaluate(ctx);
    let mut max_integrand = ps.integrand.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut shortfall = vec![0.0; players];
    let mut op_time = vec![0.0; players];
    let mut checkpoint_shortfall = vec![Vec::new(); ctx.checkpoints.len()];
    let mut jumps = 0u64;
    let mut corrections = 0u64;
    let mut traj = keep.then(|| Trajectory {
        index,
        state,
        times: Vec::new(),
        beliefs: Vec::new(),
        actions: Vec::new(),
        operational_time: Vec::new(),
        shortfall: Vec::new(),
    });

    let dt = config.dt;
    let sigma = model.sigma();
    let s2 = sigma * sigma;
    let rho_true = model.rho(state);
    let lambda_true = model.lambda(state);
    let table = model.atoms();
    let true_rates = &table.rates[state];
    let mut rec = 0usize;

    let mut record = |rec: &mut usize, ps: &PathState, m: f64, f: f64, shortfall: &[f64], op: &[f64], t: f64| {
        let r = *rec;
        acc.weight[r] += weight;
        for (b, p) in acc.belief[r].iter_mut().zip(&ps.full) {
            *b += weight * p;
        }
        acc.m[r] += weight * m;
        acc.f[r] += weight * f;
        for (g, v) in acc.integrand[r].iter_mut().zip(&ps.integrand) {
            *g += weight * v;
        }
        acc.error[state][r] += 1.0 - ps.full[state];
        if let Some(tr) = traj.as_mut() {
            tr.times.push(t);
            tr.beliefs.push(ps.full.clone());
            tr.actions.push(ps.actions.clone());
            tr.operational_time.push(op.to_vec());
            tr.shortfall.push(shortfall.to_vec());
        }
        *rec += 1;
    };
    record(&mut rec, &ps, m, f, &shortfall, &op_time, 0.0);

    for step in 1..=ctx.steps {
        // Actions at the left limit drive this step's observation intensity.
        let k_total: f64 = ps.actions.iter().sum();
        let intensity = model.k0() + k_total;
        let it = intensity * dt;
        for (o, k) in op_time.iter_mut().zip(&ps.actions) {
            *o += k * dt;
        }
        let prev_integrand = ps.integrand.clone();

        let dx = rho_true * it + sigma * it.sqrt() * rng.normal();
        let n_jumps = if ctx.has_jumps { rng.poisson(lambda_true * it) } else { 0 };
        jumps += n_jumps;

        match config.scheme {
            Scheme::ExactLikelihood => {
                for (l, lw) in ps.log_w.iter_mut().enumerate() {
                    let r = model.rho(l);
                    *lw += (r * dx - 0.5 * r * r * it) / s2 - model.lambda(l) * it;
                }
                for _ in 0..n_jumps {
                    let atom = categorical(rng.mark(), true_rates);
                    for (lw, lr) in ps.log_w.iter_mut().zip(&ctx.log_rates) {
                        *lw += lr[atom];
                    }
                }
                ps.refresh_from_log();
            }
            Scheme::EulerMaruyama => {
                let rho_bar: f64 = ps.full.iter().enumerate().map(|(l, p)| p * model.rho(l)).sum();
                let lam_bar: f64 = ps.full.iter().enumerate().map(|(l, p)| p * model.lambda(l)).sum();
                let innov = dx - rho_bar * it;
                for (l, p) in ps.full.iter_mut().enumerate() {
                    let pl = *p;
                    *p = pl + pl * (model.rho(l) - rho_bar) / s2 * innov - pl * (model.lambda(l) - lam_bar) * it;
                }
                if renormalize(&mut ps.full) {
                    corrections += 1;
                }
                for _ in 0..n_jumps {
                    let atom = categorical(rng.mark(), true_rates);
                    if jump_update_full(table, atom, &ps.full, &mut ps.scratch) {
                        std::mem::swap(&mut ps.full, &mut ps.scratch);
                    } else {
                        corrections += 1;
                    }
                }
            }
        }
        if ps.full.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteBelief {
                path_seed: rng.seed,
                step,
            });
        }

        (m, f) = ps.evaluate(ctx);
        for ((sf, a), b) in shortfall.iter_mut().zip(&prev_integrand).zip(&ps.integrand) {
            *sf += 0.5 * dt * (a + b);
        }
        for &g in &ps.integrand {
            max_integrand = max_integrand.max(g);
        }
        for (slot, &c) in checkpoint_shortfall.iter_mut().zip(&ctx.checkpoints) {
            if c == step {
                *slot = shortfall.clone();
            }
        }
        if step % ctx.every == 0 || step == ctx.steps {
            record(&mut rec, &ps, m, f, &shortfall, &op_time, step as f64 * dt);
        }
    }
    acc.count[state] += 1;

    Ok((
        PathSummary {
            index,
            seed: rng.seed,
            state,
            final_belief: ps.full.clone(),
            shortfall,
            checkpoint_shortfall,
            operational_time: op_time,
            jumps,
            simplex_corrections: corrections,
            max_integrand,
        },
        traj,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Belief, StateSpec};
    use crate::stats::MeanSe;

    fn model() -> LevyModel {
        let states = vec![StateSpec::brownian(0.0), StateSpec::brownian(2.0)];
        LevyModel::new(states, 1.0, 1.0, Belief::new(&[0.4]).unwrap(), 1.0, 3).unwrap()
    }

    #[test]
    fn reproducible_and_bounded() {
        let m = model();
        let prof = vec![Strategy::equilibrium(&m); 3];
        let cfg = SimConfig::new(2.0, 0.01, 200, 17);
        let a = simulate(&m, &prof, &cfg).unwrap();
        let b = simulate(&m, &prof, &cfg).unwrap();
        assert_eq!(a, b);
        for p in &a.paths {
            assert!(p.max_integrand <= 1e-12);
            for &t in &p.operational_time {
                assert!((0.0..=2.0 + 1e-12).contains(&t));
            }
        }
    }

    #[test]
    fn belief_is_a_martingale() {
        let m = model();
        let prof = vec![Strategy::equilibrium(&m); 3];
        let ens = simulate(&m, &prof, &SimConfig::new(1.0, 0.01, 4000, 5)).unwrap();
        let ms = MeanSe::of(&ens.paths.iter().map(|p| p.final_belief[1]).collect::<Vec<_>>());
        assert!(ms.z_score(0.4) < 3.0, "{ms:?}");
    }

    #[test]
    fn safe_play_is_noiseless_only_through_background() {
        let m = model();
        let prof = vec![Strategy::Constant(0.0); 3];
        let ens = simulate(&m, &prof, &SimConfig::new(1.0, 0.01, 64, 1)).unwrap();
        assert!(ens.paths.iter().all(|p| p.operational_time == vec![0.0; 3]));
        assert!(ens.paths.iter().any(|p| p.final_belief[1] != 0.4));
    }

    #[test]
    fn euler_scheme_stays_on_simplex() {
        let m = model();
        let prof = vec![Strategy::Constant(1.0); 3];
        let cfg = SimConfig::new(1.0, 0.01, 64, 2).with_scheme(Scheme::EulerMaruyama);
        let ens = simulate(&m, &prof, &cfg).unwrap();
        for p in &ens.paths {
            let s: f64 = p.final_belief.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(p.final_belief.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn stratified_needs_whole_tuples() {
        let m = model();
        let prof = vec![Strategy::Constant(0.0); 3];
        let cfg = SimConfig::new(1.0, 0.01, 7, 2).with_conditioning(Conditioning::Stratified);
        assert!(simulate(&m, &prof, &cfg).unwrap_err().is_validation());
    }
}
