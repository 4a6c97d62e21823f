//! Independent oracles and model builders shared by the integration tests.
#![allow(dead_code)]

use levyexp::model::{Belief, JumpMeasure, LevyModel, StateSpec};

/// ∫ₐᵇ f by double-exponential quadrature on `pieces` equal subintervals.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            quadrature::integrate(&f, lo, lo + h, 1e-14).integral
        })
        .sum()
}

/// E[max{s, μ}] for μ ~ N(m, 1/τ) by quadrature of the density.
pub fn normal_f_oracle(m: f64, tau: f64, s: f64) -> f64 {
    let sd = tau.sqrt().recip();
    let dens = |x: f64| (tau / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * tau * (x - m) * (x - m)).exp();
    let (lo, hi) = (m - 40.0 * sd, m + 40.0 * sd);
    let split = s.clamp(lo, hi);
    let pieces = |a: f64, b: f64| (((b - a) / sd).ceil() as usize).max(1);
    integrate(|x| s * dens(x), lo, split, pieces(lo, split)) + integrate(|x| x * dens(x), split, hi, pieces(split, hi))
}

/// E[max{s, μ}] for μ ~ Gamma(α, rate β) by quadrature of the density.
pub fn gamma_f_oracle(alpha: f64, beta: f64, s: f64) -> f64 {
    let ln_norm = alpha * beta.ln() - libm::lgamma(alpha);
    let dens = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            (ln_norm + (alpha - 1.0) * x.ln() - beta * x).exp()
        }
    };
    let mean = alpha / beta;
    let sd = alpha.sqrt() / beta;
    let hi = (mean + 60.0 * sd).max(2.0 * s);
    let below = s.min(hi);
    // Mass on [0, head] after x = t^{1/α}, which removes the x^{α−1} singularity.
    let head = below.min(sd);
    let near_zero = integrate(|t: f64| (ln_norm - beta * t.powf(1.0 / alpha)).exp() / alpha, 0.0, head.powf(alpha), 4);
    let low = near_zero + integrate(&dens, head, below, (((below - head) / sd).ceil() as usize).max(1));
    let upper = integrate(|x| x * dens(x), below, hi, (((hi - below) / sd).ceil() as usize).max(1));
    s * low + upper
}

pub fn brownian_pair(rho1: f64, safe: f64, prior1: f64, k0: f64, n: usize) -> LevyModel {
    let states = vec![StateSpec::brownian(0.0), StateSpec::brownian(rho1)];
    LevyModel::new(states, 1.0, safe, Belief::new(&[prior1]).unwrap(), k0, n).unwrap()
}

/// L = 1 jump-diffusion with atoms at ±5, ±10: bad news from large jumps,
/// good news from moderate ones.
pub fn news_model() -> LevyModel {
    let sizes = [-10.0, -5.0, 5.0, 10.0];
    let bad = JumpMeasure::from_probabilities(&sizes, &[0.5, 0.1, 0.1, 0.3], 1.0).unwrap();
    let good = JumpMeasure::from_probabilities(&sizes, &[0.1, 0.3, 0.5, 0.1], 1.0).unwrap();
    let states = vec![StateSpec::new(0.0, bad), StateSpec::new(0.5, good)];
    LevyModel::new(states, 1.0, 0.5, Belief::new(&[0.5]).unwrap(), 0.2, 2).unwrap()
}

/// L = 2 Brownian model with μ = (2, 5, 8), N = 4, k₀ = 0.2.
pub fn simplex_model(safe: f64, prior: &[f64]) -> LevyModel {
    let states = [2.0, 5.0, 8.0].map(StateSpec::brownian).to_vec();
    LevyModel::new(states, 1.0, safe, Belief::new(prior).unwrap(), 0.2, 4).unwrap()
}
