//! Runs every acceptance criterion at its stated tolerance and prints one
//! pass/fail line per criterion.

use bsbloch::verify::Verifier;

const SEED: u64 = 20_240_601;
const ENSEMBLE: usize = 50;

#[test]
fn acceptance_suite() {
    let mut v = Verifier::new(SEED, ENSEMBLE);
    let reports = v.run_all();
    for r in &reports {
        println!("{}", r.line());
    }
    assert_eq!(reports.len(), 8);
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.line()).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
