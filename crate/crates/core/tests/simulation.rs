mod common;

use levyexp::equilibrium::Strategy;
use levyexp::model::Belief;
use levyexp::montecarlo::{estimate_lra_payoff, simulate, unilateral_deviation_value, Conditioning, SimConfig};

use common::brownian_pair;

fn config(dt: f64, paths: usize) -> SimConfig {
    SimConfig::new(20.0, dt, paths, 17).with_conditioning(Conditioning::Stratified)
}

#[test]
fn interior_prior_has_clearly_negative_payoff() {
    let m = brownian_pair(2.0, 1.0, 0.4, 1.0, 3);
    let eq = vec![Strategy::equilibrium(&m); 3];
    let ens = simulate(&m, &eq, &config(1e-2, 4000)).unwrap();
    let e = estimate_lra_payoff(&ens, &m, 0).unwrap();
    assert!(e.estimate < 0.0);
    assert!(e.estimate.abs() > 20.0 * e.standard_error, "{e:?}");
    assert!(e.tail_bound.is_finite() && e.tail_bound < e.standard_error);
}

#[test]
fn halving_dt_stays_within_monte_carlo_noise() {
    // The two runs draw independent increments, so the change is compared
    // with the standard error of the difference.
    let m = brownian_pair(2.0, 1.0, 0.4, 1.0, 3);
    let eq = vec![Strategy::equilibrium(&m); 3];
    let a = estimate_lra_payoff(&simulate(&m, &eq, &config(2e-2, 4000)).unwrap(), &m, 0).unwrap();
    let b = estimate_lra_payoff(&simulate(&m, &eq, &config(1e-2, 4000)).unwrap(), &m, 0).unwrap();
    let se = a.standard_error.hypot(b.standard_error);
    assert!((a.estimate - b.estimate).abs() < 3.0 * se, "{a:?} {b:?}");
}

#[test]
fn always_risky_below_threshold_loses() {
    // I(0.2) = 0.2/0.6 < k0 = 1, so κ† = 0 at the prior.
    let m = brownian_pair(2.0, 1.0, 0.2, 1.0, 3);
    let pi0 = Belief::new(&[0.2]).unwrap();
    let eq = vec![Strategy::equilibrium(&m); 3];
    let d = unilateral_deviation_value(&m, &eq, 0, &Strategy::constant(1.0).unwrap(), &pi0, &config(1e-2, 2000)).unwrap();
    assert!(d.difference.mean < 0.0);
    assert!(d.z() < -3.0, "{:?}", d.difference);
}

#[test]
fn common_random_numbers_reproduce_bit_for_bit() {
    let m = brownian_pair(2.0, 1.0, 0.4, 1.0, 3);
    let eq = vec![Strategy::equilibrium(&m); 3];
    let a = simulate(&m, &eq, &config(2e-2, 256)).unwrap();
    let b = simulate(&m, &eq, &config(2e-2, 256)).unwrap();
    assert_eq!(a, b);
}
