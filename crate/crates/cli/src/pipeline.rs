//! Solver pipelines and parameter sweeps.

use bsbloch::allorder::{bs_bloch_solve, oracle_scan, solve_bs_state_with, BsBlochOptions, OracleRoot, SolveOptions};
use bsbloch::expansion::build_ledger;
use bsbloch::verify::Verifier;
use bsbloch::{eig_general, Matrix, Scalar};
use rayon::prelude::*;

use crate::config::{ScenarioConfig, SolverKind, SweepParam, SweepSpec, TermSpec};
use crate::error::CliError;
use crate::report::Row;
use crate::system::{build, AnySystem, System};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const VERIFY_ENSEMBLE: usize = 50;

/// Rows for one scenario, in a fixed order.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64, jobs: usize) -> Result<Vec<Row>, CliError> {
    cfg.validate_shallow()?;
    let rows = match cfg.solver {
        SolverKind::Verify => verify_rows(seed),
        SolverKind::Sweep => {
            let sw = cfg.sweep.as_ref().expect("validated");
            sweep_rows(cfg, sw, seed, jobs)?
        }
        kind => solve_scenario(cfg, kind, seed, None)?,
    };
    Ok(label(rows, &cfg.id))
}

fn label(mut rows: Vec<Row>, scenario: &str) -> Vec<Row> {
    for r in &mut rows {
        r.scenario = scenario.to_string();
    }
    rows
}

pub fn verify_rows(seed: u64) -> Vec<Row> {
    Verifier::new(seed, VERIFY_ENSEMBLE)
        .run_all()
        .into_iter()
        .map(|c| Row {
            solver: "verify".into(),
            quantity: "criterion".into(),
            index: c.id.to_string(),
            result: Some(if c.passed { 1.0 } else { 0.0 }),
            status: if c.passed { "pass" } else { "fail" }.into(),
            note: format!("{}: {}", c.name, c.detail),
            ..Row::default()
        })
        .collect()
}

pub fn sweep_rows(cfg: &ScenarioConfig, sw: &SweepSpec, seed: u64, jobs: usize) -> Result<Vec<Row>, CliError> {
    sw.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::io("starting worker pool", std::io::Error::other(e)))?;
    // fail fast on problems every row would hit
    if !sw.values.is_empty() {
        apply(cfg, sw.parameter, sw.values[0])?;
    }
    let per_value: Vec<Vec<Row>> = pool.install(|| {
        sw.values
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let rows = sweep_point(cfg, sw, x, seed.wrapping_add(i as u64))
                    .unwrap_or_else(|e| vec![Row::failed("row", e.to_string())]);
                rows.into_iter()
                    .map(|mut r| {
                        r.parameter = Some(sw.parameter.name().into());
                        r.value = Some(x);
                        if r.solver.is_empty() {
                            r.solver = sw.solver.name().into();
                        }
                        r
                    })
                    .collect()
            })
            .collect()
    });
    Ok(per_value.into_iter().flatten().collect())
}

fn sweep_point(cfg: &ScenarioConfig, sw: &SweepSpec, x: f64, seed: u64) -> Result<Vec<Row>, CliError> {
    let (point, coupling) = apply(cfg, sw.parameter, x)?;
    let mut rows = solve_scenario(&point, sw.solver, seed, coupling)?;
    if sw.parameter == SweepParam::Gap && sw.solver == SolverKind::Expand {
        let (limit, _) = apply(cfg, SweepParam::Gap, 0.0)?;
        rows.extend(msc_drift(&point, &limit, seed)?);
    }
    Ok(rows)
}

/// Scenario at one sweep value, plus a coupling factor applied after the
/// system is assembled.
fn apply(cfg: &ScenarioConfig, param: SweepParam, x: f64) -> Result<(ScenarioConfig, Option<f64>), CliError> {
    let mut c = cfg.clone();
    match param {
        SweepParam::Coupling => return Ok((c, Some(x))),
        SweepParam::Gap => {
            let Some(h) = c.spectrum.diagonal.as_mut() else {
                return Err(CliError::config("sweep.parameter", "gap sweeps need a diagonal spectrum"));
            };
            if c.model.len() < 2 {
                return Err(CliError::config("sweep.parameter", "gap sweeps need at least two model states"));
            }
            let base = *h.get(c.model[0]).ok_or_else(|| CliError::config("model[0]", "index out of range"))?;
            for (k, &i) in c.model.iter().enumerate().skip(1) {
                let slot = h
                    .get_mut(i)
                    .ok_or_else(|| CliError::config(format!("model[{k}]"), "index out of range"))?;
                *slot = base + k as f64 * x;
            }
        }
        SweepParam::Quadrature | SweepParam::Gamma => {
            let mut hit = false;
            for t in &mut c.potential {
                if let TermSpec::Photon { nodes, gamma, .. } = t {
                    hit = true;
                    match param {
                        SweepParam::Quadrature => *nodes = x as usize,
                        _ => *gamma = x,
                    }
                }
            }
            if !hit {
                return Err(CliError::config("sweep.parameter", format!("{} sweeps need a photon term", param.name())));
            }
        }
    }
    Ok((c, None))
}

fn solve_scenario(cfg: &ScenarioConfig, kind: SolverKind, seed: u64, coupling: Option<f64>) -> Result<Vec<Row>, CliError> {
    let mut rows = match build(cfg, seed)? {
        AnySystem::Real(sys) => solve(scale(sys, coupling), cfg, kind)?,
        AnySystem::Complex(sys) => solve(scale(sys, coupling), cfg, kind)?,
    };
    for r in &mut rows {
        r.solver = kind.name().into();
        if !r.is_finite() {
            return Err(CliError::solver(
                kind.name(),
                bsbloch::Error::InvalidInput(format!("non-finite {} {}", r.quantity, r.index)),
            ));
        }
    }
    Ok(rows)
}

fn scale<T: Scalar<Real = f64>>(mut sys: System<T>, coupling: Option<f64>) -> System<T> {
    if let Some(l) = coupling {
        sys.potential = sys.potential.coupling_scaled(T::lit(l));
    }
    sys
}

fn solve<T: Scalar<Real = f64>>(sys: System<T>, cfg: &ScenarioConfig, kind: SolverKind) -> Result<Vec<Row>, CliError> {
    let System {
        spectrum: s,
        model: p,
        potential: v,
        window,
    } = sys;
    let roots = if cfg.oracle.enabled {
        let [lo, hi] = cfg.oracle.range.unwrap_or([window.0, window.1]);
        oracle_scan(&s, &p, &v, (lo, hi), cfg.oracle.grid).map_err(|e| CliError::solver("oracle_scan", e))?
    } else {
        Vec::new()
    };
    let mut rows = Vec::new();
    match kind {
        SolverKind::Expand => {
            let ledger = build_ledger(&s, &p, &v, cfg.expand.order).map_err(|e| CliError::solver("build_ledger", e))?;
            for t in ledger.orders() {
                push_matrix(&mut rows, &format!("heff{}", t.order), &t.heff);
                if t.order >= 2 {
                    push_matrix(&mut rows, &format!("heff_msc{}", t.order), &t.heff_msc);
                }
            }
            let total = &p.h0_block() + &ledger.heff_sum(cfg.expand.order);
            let sys = eig_general(&total).map_err(|e| CliError::solver("effective hamiltonian eigenvalues", e))?;
            let mut values = sys.values.clone();
            values.sort_by(|a, b| a.re().total_cmp(&b.re()));
            for (a, e) in values.into_iter().enumerate() {
                rows.push(Row::new("energy", a, e.re(), e.im()).compared(nearest(&roots, e.re())));
            }
        }
        SolverKind::Bw => {
            let branch = cfg.bw.branch;
            if branch >= s.len() {
                return Err(CliError::config("bw.branch", format!("branch {branch} out of range for a basis of size {}", s.len())));
            }
            let [lo, hi] = cfg.bw.bracket.unwrap_or([window.0, window.1]);
            let opts = SolveOptions {
                residual_tol: cfg.tolerances.residual,
                max_iter: cfg.tolerances.max_iter,
                ..SolveOptions::default()
            };
            let r = solve_bs_state_with(&s, &p, &v, branch, (lo, hi), &opts).map_err(|e| CliError::solver("solve_bs_state", e))?;
            rows.push(
                Row::new("energy", branch, r.energy.re(), r.energy.im())
                    .compared(nearest(&roots, r.energy.re()))
                    .iterations(r.iterations),
            );
            rows.push(Row::new("residual", branch, r.residual, 0.0));
            rows.push(Row::new("equation_residual", branch, r.equation_residual, 0.0));
            for (i, x) in r.wave_column.iter().enumerate() {
                rows.push(Row::new("wave_column", i, x.re(), x.im()));
            }
        }
        SolverKind::Bsbloch => {
            let opts = BsBlochOptions {
                tol: cfg.tolerances.bloch,
                max_iter: cfg.tolerances.max_iter,
                eta: cfg.tolerances.eta,
                ..BsBlochOptions::default()
            };
            let st = bs_bloch_solve(&s, &p, &v, &opts).map_err(|e| CliError::solver("bs_bloch_solve", e))?;
            let it = st.iterations();
            for (a, e) in st.energies.iter().enumerate() {
                rows.push(Row::new("energy", a, e.re(), e.im()).compared(nearest(&roots, e.re())).iterations(it));
            }
            push_matrix(&mut rows, "heff", &st.heff.matrix());
            rows.push(Row::new("iterations", 0, it as f64, 0.0).iterations(it));
            rows.push(Row::new("normalization_error", 0, st.max_normalization_error(), 0.0));
            for (a, r) in st.equation_residuals.iter().enumerate() {
                rows.push(Row::new("equation_residual", a, *r, 0.0));
            }
        }
        SolverKind::Verify | SolverKind::Sweep => unreachable!("dispatched before assembly"),
    }
    Ok(rows)
}

/// `max |ΔMSC|` per order between a gapped ledger and its degenerate limit.
fn msc_drift(point: &ScenarioConfig, limit: &ScenarioConfig, seed: u64) -> Result<Vec<Row>, CliError> {
    let (AnySystem::Real(a), AnySystem::Real(b)) = (build(point, seed)?, build(limit, seed)?) else {
        return Err(CliError::config("sweep.parameter", "gap sweeps run in real arithmetic"));
    };
    let order = point.expand.order;
    let la = build_ledger(&a.spectrum, &a.model, &a.potential, order).map_err(|e| CliError::solver("build_ledger", e))?;
    let lb = build_ledger(&b.spectrum, &b.model, &b.potential, order).map_err(|e| CliError::solver("build_ledger", e))?;
    Ok((2..=order)
        .map(|n| {
            let (x, y) = (la.order(n).expect("order"), lb.order(n).expect("order"));
            let d = x.omega_msc.max_abs_diff(&y.omega_msc).max(x.heff_msc.max_abs_diff(&y.heff_msc));
            Row::new("msc_drift", n, d, 0.0)
        })
        .collect())
}

fn push_matrix<T: Scalar<Real = f64>>(rows: &mut Vec<Row>, quantity: &str, m: &Matrix<T>) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            rows.push(Row::new(quantity, format!("{i}:{j}"), m[(i, j)].re(), m[(i, j)].im()));
        }
    }
}

fn nearest(roots: &[OracleRoot<f64>], e: f64) -> Option<f64> {
    roots
        .iter()
        .map(|r| r.energy)
        .min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()))
}
