mod common;

use bsbloch::expansion::build_ledger;
use bsbloch::model::{ModelSpace, Spectrum};
use bsbloch::toys::{gap_toy, toy_b};
use common::mixed_potential;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn orders_are_homogeneous_in_the_coupling(
        q in prop::collection::vec(0.8f64..2.0, 2..5),
        split in 0.0f64..0.05,
        scale in 0.01f64..0.1,
    ) {
        let mut h = vec![0.0, split];
        h.extend(&q);
        let s = Spectrum::from_diagonal(h.clone()).unwrap();
        let Ok(p) = ModelSpace::new(&s, &[0, 1]) else { return Ok(()) };
        let v = mixed_potential(h.len(), scale);
        let full = build_ledger(&s, &p, &v, 3).unwrap();
        let half = build_ledger(&s, &p, &v.coupling_scaled(0.5), 3).unwrap();
        for n in 1..=3 {
            let a = &full.order(n).unwrap().heff;
            let b = half.order(n).unwrap().heff.scale(2f64.powi(n as i32));
            prop_assert!(a.max_abs_diff(&b) <= 1e-10 * (1.0 + a.max_abs()), "order {}", n);
        }
    }

    #[test]
    fn counterterms_stay_finite_as_gap_closes(exp in -6.0f64..-1.0) {
        let delta = 10f64.powf(exp);
        let inst = gap_toy(delta).unwrap();
        let at_zero = gap_toy(0.0).unwrap();
        let l = build_ledger(&inst.spectrum, &inst.model, &inst.potential, 3).unwrap();
        let l0 = build_ledger(&at_zero.spectrum, &at_zero.model, &at_zero.potential, 3).unwrap();
        prop_assert!(l.is_finite());
        for n in 2..=3 {
            let t = l.order(n).unwrap();
            prop_assert!(t.heff_msc.max_abs() < 1.0 && t.omega_msc.max_abs() < 1.0);
            // the degenerate ledger is the continuous limit
            let d = t.heff.max_abs_diff(&l0.order(n).unwrap().heff);
            prop_assert!(d <= delta, "order {} drift {:e} at gap {:e}", n, d, delta);
        }
    }

    #[test]
    fn single_state_rational_coefficients(lambda in 0.05f64..1.0) {
        let inst = toy_b::<f64>().with_coupling(lambda);
        let l = build_ledger(&inst.spectrum, &inst.model, &inst.potential, 3).unwrap();
        for (n, c) in [(1, 0.25), (2, -0.03125), (3, 0.0078125)] {
            let got = l.order(n).unwrap().heff[(0, 0)] / lambda.powi(n as i32);
            prop_assert!((got - c).abs() <= 1e-12, "order {}: {}", n, got);
        }
    }
}
