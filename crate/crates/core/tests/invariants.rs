use std::f64::consts::PI;

use proptest::prelude::*;

use quench_core::cumulants::exact_triple;
use quench_core::fcs::{cumulants_from_probabilities, distribution_from_probabilities};
use quench_core::scaling::depth_sweep;
use quench_core::spectral::{dispersion, sudden_pk};
use quench_core::{MomentumGrid, QuenchProtocol};

proptest! {
    #[test]
    fn grid_avoids_zero_and_pi(half in 1usize..500) {
        let grid = MomentumGrid::new(2 * half).unwrap();
        prop_assert_eq!(grid.len(), half);
        for k in grid.iter() {
            prop_assert!(k > 0.0 && k < PI);
            prop_assert!(k.sin() > 0.0);
        }
    }

    #[test]
    fn ramp_is_affine_with_slope_one_over_tau(
        gi in -3.0f64..0.0,
        span in 0.1f64..3.0,
        tau in 0.01f64..100.0,
        frac in 0.0f64..1.0,
    ) {
        let p = QuenchProtocol::new(gi, gi + span, tau).unwrap();
        let t1 = 0.5 * frac * p.duration();
        let t2 = t1 + 0.25 * p.duration();
        let slope = (p.field_at(t2).unwrap() - p.field_at(t1).unwrap()) / (t2 - t1);
        prop_assert!((slope * tau - 1.0).abs() < 1e-9, "slope {}", slope);
        prop_assert!((p.field_at(0.0).unwrap() - gi).abs() < 1e-15);
        prop_assert!((p.field_at(p.duration()).unwrap() - (gi + span)).abs() < 1e-12);
    }

    #[test]
    fn dispersion_inversion_symmetry(k in 0.0f64..PI, g in prop_oneof![-5.0f64..-0.05, 0.05f64..5.0]) {
        let lhs = dispersion(k, g);
        let rhs = g.abs() * dispersion(k, 1.0 / g);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn sudden_probability_bounds(k in 1e-3f64..PI - 1e-3, gi in -3.0f64..3.0, gf in -3.0f64..3.0) {
        let p = sudden_pk(k, gi, gf).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(sudden_pk(k, gi, gi).unwrap() < 1e-15);
    }

    #[test]
    fn closed_form_pairs_are_sub_poissonian(eps in 1e-3f64..=1.0, half in 10usize..1000) {
        let t = exact_triple(2.0 * half as f64, eps - 1.0).unwrap();
        prop_assert!(t.kappa2 < t.kappa1);
        prop_assert!(t.kappa3 < t.kappa1);
    }

    #[test]
    fn poisson_binomial_is_sub_poissonian(probs in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        prop_assume!(probs.iter().any(|&p| p > 0.0));
        let c = cumulants_from_probabilities(&probs);
        prop_assert!(c.kappa2 < c.kappa1);
        let d = distribution_from_probabilities(&probs).unwrap();
        let total: f64 = d.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sweep_rows_map_pairs_to_kinks_exactly(
        half in 5usize..60,
        gi in -1.5f64..-1.0,
        eps in prop::collection::btree_set(0u32..=100, 1..6),
    ) {
        let grid = MomentumGrid::new(2 * half).unwrap();
        let eps: Vec<f64> = eps.into_iter().map(|e| f64::from(e) / 100.0).collect();
        let table = depth_sweep(&grid, gi, &eps, 0.0, &Default::default()).unwrap();
        for row in &table.rows {
            let p = row.pairs.as_array();
            let k = row.kinks.as_array();
            prop_assert_eq!(k, [2.0 * p[0], 4.0 * p[1], 8.0 * p[2]]);
        }
    }
}
