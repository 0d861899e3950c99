use bsbloch::model::{reduced_resolvent, resolvent, ModelSpace, Orbital, Spectrum};
use bsbloch::Matrix;
use proptest::prelude::*;

fn levels() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reduced_is_q_projection_of_full(h in levels(), e in -4.0f64..4.0, mask in any::<u16>()) {
        let s = Spectrum::from_diagonal(h.clone()).unwrap();
        let p_idx: Vec<usize> = (0..h.len()).filter(|i| mask >> i & 1 == 1).collect();
        prop_assume!(!p_idx.is_empty());
        let Ok(p) = ModelSpace::new(&s, &p_idx) else { return Ok(()) };
        let (Ok(g), Ok(gq)) = (resolvent(&s, e), reduced_resolvent(&s, &p, e)) else { return Ok(()) };
        for i in 0..h.len() {
            let expect = if p.contains(i) { 0.0 } else { g[(i, i)] };
            prop_assert_eq!(gq[(i, i)], expect);
        }
    }

    #[test]
    fn resolvent_inverts_shifted_h0(h in levels(), e in -4.0f64..4.0) {
        let s = Spectrum::from_diagonal(h.clone()).unwrap();
        prop_assume!(h.iter().all(|x| (e - x).abs() > 1e-3));
        let g = resolvent(&s, e).unwrap();
        let shifted = &Matrix::identity(h.len()).scale(e) - &s.h0_matrix();
        let prod = g.matmul(&shifted).unwrap();
        prop_assert!(prod.max_abs_diff(&Matrix::identity(h.len())) <= 1e-12);
    }

    #[test]
    fn reduced_ignores_model_energies(h in levels(), e in -4.0f64..4.0, moved in -3.0f64..3.0) {
        let s = Spectrum::from_diagonal(h.clone()).unwrap();
        let Ok(p) = ModelSpace::new(&s, &[0]) else { return Ok(()) };
        let Ok(a) = reduced_resolvent(&s, &p, e) else { return Ok(()) };
        let s2 = s.with_energy(0, moved).unwrap();
        let b = reduced_resolvent(&s2, &p, e).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tensor_energies_are_pair_sums(
        h1 in prop::collection::vec(-2.0f64..2.0, 1..4),
        h2 in prop::collection::vec(-2.0f64..2.0, 1..4),
    ) {
        let o1: Vec<_> = h1.iter().enumerate().map(|(i, &x)| Orbital::new(i, x)).collect();
        let o2: Vec<_> = h2.iter().enumerate().map(|(i, &x)| Orbital::new(i, x)).collect();
        let s = Spectrum::<f64>::tensor_h0(&o1, &o2).unwrap();
        for (e, (r, t)) in s.h0_diagonal().iter().zip(s.orbital_pairs().unwrap()) {
            prop_assert!((e - (r.energy + t.energy)).abs() <= 1e-14);
            prop_assert_eq!(r.sign == 1, r.energy >= 0.0);
        }
    }

    #[test]
    fn degenerate_flag_matches_energies(a in -1.0f64..1.0, gap in prop::sample::select(vec![0.0, 1e-13, 1e-6, 0.1])) {
        let s = Spectrum::from_diagonal(vec![a, a + gap, a + 5.0]).unwrap();
        let p = ModelSpace::new(&s, &[0, 1]).unwrap();
        prop_assert_eq!(p.degenerate_energy().is_some(), gap <= 1e-12);
    }
}
