//! `bsbloch`: runs scenario files through the expansion and all-order
//! solvers and writes CSV tables plus a summary.

mod config;
mod error;
mod pipeline;
mod report;
mod system;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{ScenarioConfig, SolverKind, SweepParam, SweepSpec};
use error::CliError;
use pipeline::{run_scenario, sweep_rows, verify_rows, DEFAULT_SEED};
use report::{config_hash, write_outputs, Row, RunReport};

#[derive(Parser)]
#[command(name = "bsbloch", version, about = "Energy-dependent effective Hamiltonian scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver selected in the config.
    Run(Common),
    /// Repeat a scenario over a list of parameter values.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// coupling, gap, quadrature or gamma (overrides [sweep].parameter)
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values (overrides [sweep].values)
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
    },
    /// Run the acceptance suite on the built-in toys and ensemble.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

struct Loaded {
    cfg: ScenarioConfig,
    hash: String,
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::config("config", "file is not UTF-8"))?;
    Ok(Loaded {
        cfg: ScenarioConfig::parse(&text)?,
        hash: config_hash(&bytes),
    })
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<&ScenarioConfig>) -> PathBuf {
    flag.or_else(|| cfg.and_then(|c| c.output.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("bsbloch-out"))
}

fn seed(flag: Option<u64>, cfg: Option<&ScenarioConfig>) -> u64 {
    flag.or(cfg.and_then(|c| c.seed)).unwrap_or(DEFAULT_SEED)
}

fn finish(rows: &[Row], dir: &Path, csv: &str, id: &str, solver: &str, hash: String, seed: u64, start: Instant) -> Result<RunReport, CliError> {
    let report = write_outputs(dir, csv, rows, |path| {
        RunReport::new(id, solver, hash, seed, rows, start.elapsed().as_secs_f64(), path)
    })?;
    print!("{}", report.text());
    Ok(report)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    match cli.command {
        Command::Run(c) => {
            let Loaded { cfg, hash } = load(&c.config)?;
            let seed = seed(c.seed, Some(&cfg));
            let rows = run_scenario(&cfg, seed, c.jobs)?;
            let dir = out_dir(c.out, Some(&cfg));
            let report = finish(&rows, &dir, &cfg.output.csv, &cfg.id, cfg.solver.name(), hash, seed, start)?;
            check(&report, cfg.solver)
        }
        Command::Sweep { common: c, param, values } => {
            let Loaded { mut cfg, hash } = load(&c.config)?;
            let seed = seed(c.seed, Some(&cfg));
            let mut sw = cfg.sweep.clone().unwrap_or_else(|| SweepSpec {
                parameter: SweepParam::Coupling,
                values: Vec::new(),
                solver: cfg.solver,
            });
            if cfg.sweep.is_none() && param.is_none() {
                return Err(CliError::config("sweep", "needs a [sweep] table or --param"));
            }
            if let Some(p) = param {
                sw.parameter = SweepParam::parse(&p)?;
            }
            if let Some(v) = values {
                sw.values = v;
            }
            cfg.validate_shallow()?;
            cfg.sweep = Some(sw.clone());
            let rows: Vec<Row> = sweep_rows(&cfg, &sw, seed, c.jobs)?
                .into_iter()
                .map(|r| Row {
                    scenario: cfg.id.clone(),
                    ..r
                })
                .collect();
            let dir = out_dir(c.out, Some(&cfg));
            let report = finish(&rows, &dir, &cfg.output.csv, &cfg.id, "sweep", hash, seed, start)?;
            check(&report, SolverKind::Sweep)
        }
        Command::Verify { config, out, seed: flag } => {
            let loaded = config.as_deref().map(load).transpose()?;
            let cfg = loaded.as_ref().map(|l| &l.cfg);
            let seed = seed(flag, cfg);
            let rows: Vec<Row> = verify_rows(seed)
                .into_iter()
                .map(|r| Row {
                    scenario: "acceptance".into(),
                    ..r
                })
                .collect();
            for r in &rows {
                println!("[{}] {} {}", r.status.to_uppercase(), r.index, r.note);
            }
            let hash = loaded.as_ref().map(|l| l.hash.clone()).unwrap_or_else(|| config_hash(b""));
            let csv = cfg.map(|c| c.output.csv.clone()).unwrap_or_else(|| "acceptance.csv".into());
            let report = finish(&rows, &out_dir(out, cfg), &csv, "acceptance", "verify", hash, seed, start)?;
            check(&report, SolverKind::Verify)
        }
    }
}

/// Sweeps and the acceptance suite record failures as rows; the process
/// still reports them through its exit status.
fn check(report: &RunReport, solver: SolverKind) -> Result<(), CliError> {
    match (report.failed_rows, solver) {
        (0, _) => Ok(()),
        (n, SolverKind::Verify) => Err(CliError::Verification { failed: n }),
        (n, _) => Err(CliError::solver(
            "sweep",
            bsbloch::Error::InvalidInput(format!("{n} of {} rows failed", report.rows)),
        )),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
