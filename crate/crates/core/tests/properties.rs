mod common;

use proptest::prelude::*;

use levyexp::conjugate::{normal_incentive_z, normal_incentive_z_inverse};
use levyexp::equilibrium::{best_response_set, BestResponse, EquilibriumRule};
use levyexp::filtering::jump_update;
use levyexp::model::{Belief, Incentive, Payoffs};

fn belief2() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| {
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        [a, b]
    })
}

proptest! {
    #[test]
    fn kappa_is_monotone_and_bounded(k0 in 0.01f64..3.0, n in 1usize..12, a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let rule = EquilibriumRule::new(k0, n).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (rule.action(Incentive::Finite(lo)), rule.action(Incentive::Finite(hi)));
        prop_assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
        prop_assert!(x <= y);
        prop_assert_eq!(rule.action(Incentive::Infinite), 1.0);
    }

    #[test]
    fn more_players_never_raise_kappa(k0 in 0.01f64..3.0, n in 1usize..12, i in 0.0f64..20.0) {
        let a = EquilibriumRule::new(k0, n).unwrap().action(Incentive::Finite(i));
        let b = EquilibriumRule::new(k0, n + 1).unwrap().action(Incentive::Finite(i));
        prop_assert!(b <= a);
    }

    #[test]
    fn incentive_falls_with_safe_payoff(p in belief2(), s in 2.5f64..7.5, ds in 0.01f64..0.5) {
        let full = [1.0 - p[0] - p[1], p[0], p[1]];
        let a = Payoffs::new(vec![2.0, 5.0, 8.0], s).unwrap().incentive_full(&full);
        let b = Payoffs::new(vec![2.0, 5.0, 8.0], s + ds).unwrap().incentive_full(&full);
        prop_assert!(b <= a);
    }

    #[test]
    fn equilibrium_action_is_a_best_response(p in belief2()) {
        let m = common::simplex_model(6.0, &[0.3, 0.3]);
        let pi = Belief::new(&p).unwrap();
        let k = EquilibriumRule::of(&m).action(m.incentive(&pi).unwrap());
        let set = best_response_set(&m, &pi, k).unwrap();
        let ok = match set {
            BestResponse::Zero => k == 0.0,
            BestResponse::One => k == 1.0,
            BestResponse::AllOfUnitInterval => true,
        };
        prop_assert!(ok, "kappa {} classified {:?}", k, set);
    }

    #[test]
    fn jump_updates_stay_on_the_simplex(p in 0.001f64..0.999, idx in 0usize..4) {
        let m = common::news_model();
        let h = [-10.0, -5.0, 5.0, 10.0][idx];
        let post = jump_update(&m, &Belief::new(&[p]).unwrap(), h).unwrap();
        let sum: f64 = post.full().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(post.full().iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn normal_incentive_inverse(c in 1e-3f64..50.0) {
        let z = normal_incentive_z_inverse(c).unwrap();
        prop_assert!((normal_incentive_z(z) - c).abs() <= 1e-10 * c.max(1.0));
    }
}
