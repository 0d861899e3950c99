use bsbloch::model::{Orbital, Spectrum};
use bsbloch::numerics::{eig_general, gauss_legendre, EigenSystem};
use bsbloch::potential::{apply_function_of_heff, apply_with_eigensystem, EnergyDependentPotential, PhotonKernel, PotentialTerm, Profile};
use bsbloch::Matrix;
use proptest::prelude::*;

fn sym(n: usize, x: &[f64]) -> Matrix<f64> {
    Matrix::from_fn(n, n, |i, j| x[(i.min(j) * n + i.max(j)) % x.len()])
}

fn photon_potential(n1: usize, x: &[f64]) -> EnergyDependentPotential<f64> {
    let o1: Vec<_> = (0..n1).map(|i| Orbital::new(i, 0.2 + 0.3 * i as f64)).collect();
    let o2 = vec![Orbital::new(0, 0.1), Orbital::new(1, 0.9)];
    let s = Spectrum::<f64>::tensor_h0(&o1, &o2).unwrap();
    let grid = gauss_legendre(6, 2.0, 5.0).unwrap();
    let k = PhotonKernel::new(&s, grid, Profile::Gaussian { center: 3.0, width: 1.0 }, sym(s.len(), x), 0.0).unwrap();
    EnergyDependentPotential::photon(k).unwrap()
}

fn term_potential(kind: u8, x: &[f64], pole: f64, power: u32) -> EnergyDependentPotential<f64> {
    match kind {
        0 => EnergyDependentPotential::constant(sym(3, x)).unwrap(),
        1 => EnergyDependentPotential::rational(sym(3, x), pole, power).unwrap(),
        _ => photon_potential(2, x),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn derivative_matches_central_difference(
        kind in 0u8..3,
        x in prop::collection::vec(-1.0f64..1.0, 16),
        pole in -4.0f64..-2.0,
        power in 1u32..=3,
        e in -0.5f64..0.5,
    ) {
        let v = term_potential(kind, &x, pole, power);
        let h = 1e-5;
        let fd = (&v.evaluate(e + h).unwrap() - &v.evaluate(e - h).unwrap()).scale(0.5 / h);
        let d = v.derivative(e, 1).unwrap();
        prop_assert!(d.max_abs_diff(&fd) <= 1e-7 * (1.0 + v.evaluate(e).unwrap().max_abs()));
    }

    #[test]
    fn terms_add_linearly(x in prop::collection::vec(-1.0f64..1.0, 16), pole in -4.0f64..-2.0, e in -0.5f64..0.5) {
        let a = PotentialTerm::Constant { w: sym(4, &x) };
        let b = PotentialTerm::Rational { w: sym(4, &x[3..]), pole, power: 2 };
        let both = EnergyDependentPotential::new(4, vec![a.clone(), b.clone()]).unwrap();
        let va = EnergyDependentPotential::new(4, vec![a]).unwrap().evaluate(e).unwrap();
        let vb = EnergyDependentPotential::new(4, vec![b]).unwrap().evaluate(e).unwrap();
        prop_assert_eq!(both.evaluate(e).unwrap(), &va + &vb);
    }

    #[test]
    fn diagonal_heff_applies_columnwise(
        x in prop::collection::vec(-1.0f64..1.0, 16),
        diag in prop::collection::vec(-0.5f64..0.5, 3),
        b in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let v = term_potential(1, &x, -2.5, 1);
        let heff = Matrix::from_diagonal(&diag);
        let bm = Matrix::from_fn(3, 3, |i, j| b[i * 3 + j]);
        let out = apply_function_of_heff(&v, &heff, &bm, 0).unwrap();
        for (m, &e) in diag.iter().enumerate() {
            let col = v.evaluate(e).unwrap().mul_vec(&bm.column(m));
            for i in 0..3 {
                prop_assert!((out[(i, m)] - col[i]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn eigenvector_rescaling_is_invisible(
        x in prop::collection::vec(-1.0f64..1.0, 16),
        h in prop::collection::vec(-0.3f64..0.3, 4),
        scales in prop::collection::vec(0.1f64..10.0, 2),
    ) {
        let v = term_potential(1, &x, -2.5, 2);
        let heff = Matrix::from_rows(&[vec![h[0], h[1]], vec![h[2], h[3] + 0.7]]).unwrap();
        let Ok(sys) = eig_general(&heff) else { return Ok(()) };
        let bm = Matrix::from_fn(3, 2, |i, j| x[i + 3 * j]);
        let base = apply_with_eigensystem(&v, &sys, &bm, 0).unwrap();
        let right = Matrix::from_fn(2, 2, |i, k| sys.right[(i, k)] * scales[k]);
        let left = Matrix::from_fn(2, 2, |k, j| sys.left[(k, j)] / scales[k]);
        let scaled = EigenSystem { values: sys.values.clone(), right, left };
        let other = apply_with_eigensystem(&v, &scaled, &bm, 0).unwrap();
        prop_assert!(other.max_abs_diff(&base) < 1e-12);
    }
}
