mod common;

use bsbloch::expansion::build_ledger;
use bsbloch::model::{ModelSpace, Spectrum};

use common::{mixed_potential, rs_series};

fn compare(h0: Vec<f64>, model: &[usize], scale: f64) {
    let s = Spectrum::from_diagonal(h0).unwrap();
    let p = ModelSpace::new(&s, model).unwrap();
    let v = mixed_potential(s.len(), scale);
    let ledger = build_ledger(&s, &p, &v, 3).unwrap();
    let oracle = rs_series(&s, &p, &v, 3);
    for (n, (om, h)) in oracle.iter().enumerate() {
        let terms = ledger.order(n + 1).unwrap();
        let tol = 1e-12 * (1.0 + om.max_abs());
        assert!(
            terms.omega.approx_eq(om, tol),
            "omega order {}: {:?} vs {:?}",
            n + 1,
            terms.omega,
            om
        );
        assert!(terms.heff.approx_eq(h, 1e-12 * (1.0 + h.max_abs())), "heff order {}: {:?} vs {:?}", n + 1, terms.heff, h);
    }
}

#[test]
fn single_state_energy_dependent() {
    compare(vec![0.0, 0.9, 1.3, 2.1], &[0], 0.1);
}

#[test]
fn degenerate_pair_energy_dependent() {
    compare(vec![0.0, 0.0, 0.8, 1.3, 2.0], &[0, 1], 0.1);
}

#[test]
fn quasi_degenerate_pair_energy_dependent() {
    compare(vec![0.0, 0.01, 0.8, 1.3, 2.0], &[0, 1], 0.1);
}

#[test]
fn quasi_degenerate_triple() {
    compare(vec![0.8, -0.1, 0.0, 0.03, 1.5, 2.2], &[1, 2, 3], 0.08);
}

#[test]
fn mixed_degenerate_and_split() {
    compare(vec![0.0, 0.0, 0.2, 1.1, 1.9, 2.5], &[0, 1, 2], 0.08);
}
