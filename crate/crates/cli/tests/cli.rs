use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TOY_B: &str = r#"
id = "toy-b"
solver = "bw"
model = [0]

[spectrum]
diagonal = [0.0]

[[potential]]
kind = "rational"
matrix = [[0.5]]
pole = -2.0
power = 1

[bw]
bracket = [-0.5, 0.5]
"#;

/// Toy A with unit coupling, so sweep values are the coupling itself.
const TOY_A_UNIT: &str = r#"
id = "toy-a"
solver = "bw"
model = [0]

[spectrum]
diagonal = [0.0, 1.0, 1.5, 2.0]

[[potential]]
kind = "constant"
entries = [[0, 1, 1.0]]
symmetric = true

[bw]
bracket = [-0.3, 0.3]
"#;

const GAP_PAIR: &str = r#"
id = "gap-pair"
solver = "expand"
model = [0, 1]

[spectrum]
diagonal = [0.0, 0.01, 1.0, 1.3]

[[potential]]
kind = "constant"
entries = [[0, 1, 0.04], [0, 2, 0.1], [1, 2, 0.07], [1, 3, 0.05], [0, 3, -0.06],
           [0, 0, 0.03], [1, 1, -0.02], [3, 3, 0.01]]
symmetric = true

[[potential]]
kind = "rational"
entries = [[0, 1, 0.3], [0, 2, 0.2], [1, 3, -0.25], [2, 3, 0.1]]
symmetric = true
pole = -2.5

[oracle]
enabled = false

[sweep]
parameter = "gap"
values = [1e-2, 1e-4]
solver = "expand"
"#;

struct Run {
    out: Output,
    dir: PathBuf,
    _tmp: TempDir,
}

impl Run {
    fn code(&self) -> i32 {
        self.out.status.code().expect("exit code")
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.out.stderr).into_owned()
    }

    fn csv(&self) -> String {
        fs::read_to_string(self.dir.join("results.csv")).expect("csv written")
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let text = self.csv();
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
    }
}

fn bsbloch(config: &str, args: &[&str]) -> Run {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("scenario.toml");
    fs::write(&cfg, config).unwrap();
    let dir = tmp.path().join("out");
    let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    full.extend(["--config".into(), cfg.display().to_string(), "--out".into(), dir.display().to_string()]);
    let out = Command::new(env!("CARGO_BIN_EXE_bsbloch")).args(&full).output().unwrap();
    Run { out, dir, _tmp: tmp }
}

// column positions in the v1 contract
const VALUE: usize = 3;
const QUANTITY: usize = 4;
const INDEX: usize = 5;
const RESULT: usize = 6;
const ITERATIONS: usize = 10;
const STATUS: usize = 11;

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn bw_run_reports_the_quadratic_root() {
    let run = bsbloch(TOY_B, &["run"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let csv = run.csv();
    assert!(csv.starts_with("# bsbloch-results v1\n"));
    let rows = run.rows();
    let e = rows.iter().find(|r| r[QUANTITY] == "energy").unwrap();
    assert_eq!(format!("{:.10}", num(&e[RESULT])), "0.2247448714");
    assert!((num(&e[RESULT]) - (1.5f64.sqrt() - 1.0)).abs() < 1e-12);
    // oracle comparison carries both values and the difference
    assert!(num(&e[9]) < 1e-9);
    assert!(run.dir.join("summary.txt").exists());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_sha256"].as_str().unwrap().len(), 64);
    assert!(summary["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn empty_potential_echoes_the_model_block() {
    let cfg = r#"
        solver = "bsbloch"
        model = [0, 1]
        [spectrum]
        diagonal = [0.0, 0.3, 1.0]
    "#;
    let run = bsbloch(cfg, &["run"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let rows = run.rows();
    let it = rows.iter().find(|r| r[QUANTITY] == "iterations").unwrap();
    assert_eq!(it[ITERATIONS], "1");
    let heff: Vec<(String, f64)> = rows
        .iter()
        .filter(|r| r[QUANTITY] == "heff")
        .map(|r| (r[INDEX].clone(), num(&r[RESULT])))
        .collect();
    assert_eq!(heff, [("0:0".into(), 0.0), ("0:1".into(), 0.0), ("1:0".into(), 0.0), ("1:1".into(), 0.3)]);
}

#[test]
fn out_of_range_model_index_is_a_validation_error() {
    let bad = TOY_B.replace("model = [0]", "model = [3]");
    let run = bsbloch(&bad, &["run"]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("model[0]"), "{}", run.stderr());
    assert!(!run.dir.join("results.csv").exists());
}

#[test]
fn missing_root_is_a_solver_error() {
    let run = bsbloch(&TOY_B.replace("[-0.5, 0.5]", "[0.3, 0.5]"), &["run"]);
    assert_eq!(run.code(), 3, "{}", run.stderr());
    assert!(run.stderr().contains("solve_bs_state"));
}

#[test]
fn coupling_sweep_shows_second_order_scaling() {
    let run = bsbloch(TOY_A_UNIT, &["sweep", "--param", "coupling", "--values", "0.1,0.05"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let e: Vec<(f64, f64)> = run
        .rows()
        .iter()
        .filter(|r| r[QUANTITY] == "energy")
        .map(|r| (num(&r[VALUE]), num(&r[RESULT])))
        .collect();
    assert_eq!(e.len(), 2);
    assert_eq!((e[0].0, e[1].0), (0.1, 0.05));
    assert!((e[0].1 - (1.0 - 1.04f64.sqrt()) / 2.0).abs() < 1e-12);
    let ratio = e[1].1 / e[0].1;
    assert!((ratio / 0.25 - 1.0).abs() < 0.01, "ratio {ratio}");
}

#[test]
fn gap_sweep_drift_is_linear_in_the_gap() {
    let run = bsbloch(GAP_PAIR, &["sweep"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let rows = run.rows();
    for order in ["2", "3"] {
        let d: Vec<f64> = rows
            .iter()
            .filter(|r| r[QUANTITY] == "msc_drift" && r[INDEX] == order)
            .map(|r| num(&r[RESULT]))
            .collect();
        let ratio = d[0] / d[1];
        assert!((50.0..=200.0).contains(&ratio), "order {order}: ratio {ratio}");
    }
}

#[test]
fn empty_sweep_writes_header_only() {
    let cfg = format!("{TOY_A_UNIT}\n[sweep]\nparameter = \"coupling\"\nvalues = []\nsolver = \"bw\"\n");
    let run = bsbloch(&cfg, &["sweep"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let csv = run.csv();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    assert!(csv.lines().nth(1).unwrap().starts_with("scenario,solver"));
}

#[test]
fn identical_inputs_give_identical_csv() {
    let cfg = r#"
        id = "ensemble"
        solver = "sweep"
        seed = 7
        [spectrum]
        ensemble = true
        [sweep]
        parameter = "coupling"
        values = [1.0, 0.5, 0.25, 0.125, 0.0625]
        solver = "bsbloch"
    "#;
    let a = bsbloch(cfg, &["run", "--jobs", "4"]);
    let b = bsbloch(cfg, &["run", "--jobs", "1"]);
    assert_eq!(a.code(), 0, "{}", a.stderr());
    assert_eq!(a.csv(), b.csv());
    assert!(a.rows().iter().all(|r| r[STATUS] == "ok"));
}

#[test]
fn seed_flag_changes_generated_instances() {
    let cfg = "solver = \"bsbloch\"\n[spectrum]\nensemble = true\n";
    let a = bsbloch(cfg, &["run", "--seed", "1"]);
    let b = bsbloch(cfg, &["run", "--seed", "2"]);
    assert_eq!(a.code(), 0, "{}", a.stderr());
    assert_ne!(a.csv(), b.csv());
}

#[test]
fn damped_photon_runs_in_complex_arithmetic() {
    let cfg = r#"
        solver = "bsbloch"
        model = [0]
        [spectrum.tensor]
        first = [0.2, 0.9]
        second = [0.1, 1.1]
        [[potential]]
        kind = "photon"
        entries = [[0, 1, 0.02], [0, 2, 0.02], [1, 3, 0.01]]
        symmetric = true
        nodes = 8
        kmin = 2.0
        kmax = 4.0
        gamma = 0.05
        [oracle]
        enabled = false
    "#;
    let run = bsbloch(cfg, &["run"]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let rows = run.rows();
    let e = rows.iter().find(|r| r[QUANTITY] == "energy").unwrap();
    assert!(num(&e[7]) != 0.0, "damping should give the level a width");
}

#[test]
fn verify_subcommand_passes() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bsbloch"))
        .args(["verify", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 8);
    assert!(Path::new(&tmp.path().join("acceptance.csv")).exists());
}
