mod common;

use bsbloch::allorder::{bs_bloch_solve, bs_residual, omega_bar, solve_bs_state, BsBlochOptions, BsBlochState};
use bsbloch::model::{reduced_resolvent, ModelSpace};
use bsbloch::numerics::eig_general;
use bsbloch::toys::{ensemble_instance, Instance};
use bsbloch::Matrix;
use common::full_hamiltonian;
use proptest::prelude::*;

fn solved(seed: u64) -> (Instance<f64>, BsBlochState<f64>) {
    let inst = ensemble_instance(seed).unwrap();
    let st = bs_bloch_solve(&inst.spectrum, &inst.model, &inst.potential, &BsBlochOptions::default()).unwrap();
    (inst, st)
}

fn v_scale(inst: &Instance<f64>, e: f64) -> f64 {
    inst.potential.evaluate(e).unwrap().norm_inf()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bw_wave_column_is_exact_eigenvector(seed in 0u64..10_000) {
        let (inst, st) = solved(seed);
        let p = &inst.model;
        for &e in &st.energies {
            let h = full_hamiltonian(&inst.spectrum, &inst.potential, e);
            let sys = eig_general(&h).unwrap();
            let k = (0..sys.values.len())
                .min_by(|&a, &b| (sys.values[a] - e).abs().total_cmp(&(sys.values[b] - e).abs()))
                .unwrap();
            prop_assert!((sys.values[k] - e).abs() <= 1e-9);
            let u = sys.right_vector(k);
            let pu: Vec<f64> = p.p_indices().iter().map(|&i| u[i]).collect();
            let ob = omega_bar(&inst.spectrum, p, &inst.potential, e).unwrap();
            let col = ob.block().mul_vec(&pu);
            let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (a, b) in col.iter().zip(&u) {
                prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn solved_states_satisfy_the_equation(seed in 0u64..10_000) {
        let (inst, st) = solved(seed);
        for (a, &e) in st.energies.iter().enumerate() {
            let psi = st.omega.block().mul_vec(&st.right.column(a));
            let r = bs_residual(&inst.spectrum, &inst.potential, e, &psi).unwrap();
            let norm = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!(r <= 1e-9 * (1.0 + v_scale(&inst, e)) * norm, "residual {:e}", r);
            prop_assert!(st.equation_residuals[a] <= 1e-9 * (1.0 + v_scale(&inst, e)) * norm.max(1.0));
        }
    }

    #[test]
    fn bloch_and_branch_solvers_agree(seed in 0u64..10_000) {
        let (inst, st) = solved(seed);
        for &e in &st.energies {
            let nearest = (0..inst.spectrum.len())
                .filter_map(|b| solve_bs_state(&inst.spectrum, &inst.model, &inst.potential, b, (e - 1e-3, e + 1e-3)).ok())
                .map(|r| r.energy)
                .min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()));
            let found = nearest.expect("some branch crosses the bracket");
            prop_assert!((found - e).abs() <= 1e-9, "{} vs {}", found, e);
        }
    }

    #[test]
    fn energies_scale_with_the_spectrum(seed in 0u64..10_000, c in 0.25f64..4.0) {
        let (inst, st) = solved(seed);
        let s2 = inst.spectrum.scaled(c);
        let p2 = ModelSpace::new(&s2, inst.model.p_indices()).unwrap();
        let v2 = inst.potential.energy_scaled(c).unwrap();
        let st2 = bs_bloch_solve(&s2, &p2, &v2, &BsBlochOptions::default()).unwrap();
        for (a, b) in st.energies.iter().zip(&st2.energies) {
            prop_assert!((b - c * a).abs() <= 1e-10 * (c * a).abs().max(c));
        }
    }

    #[test]
    fn truncated_bw_series_error_is_fourth_order(seed in 0u64..10_000, lambda in 0.2f64..1.5) {
        let inst = ensemble_instance(seed).unwrap().with_coupling(lambda);
        let (s, p, v) = (&inst.spectrum, &inst.model, &inst.potential);
        let e = p.energies()[0];
        let gv = reduced_resolvent(s, p, e).unwrap().matmul(&v.evaluate(e).unwrap()).unwrap();
        let r = gv.norm_inf();
        prop_assume!(r < 0.5);
        let mut term = p.injection();
        let mut series = term.clone();
        for _ in 0..3 {
            term = gv.matmul(&term).unwrap();
            series = &series + &term;
        }
        let exact = omega_bar(s, p, v, e).unwrap().into_block();
        let diff: Matrix<f64> = &exact - &series;
        prop_assert!(diff.norm_inf() <= r.powi(4) / (1.0 - r) + 1e-14);
    }
}
