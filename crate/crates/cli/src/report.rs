//! Result rows, the CSV contract and the run summaries.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Bumped whenever the column set or its meaning changes.
pub const CSV_SCHEMA: &str = "# bsbloch-results v1";

/// One value produced by a solver. `reference` and `abs_diff` are set when
/// the value was compared against an oracle.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub solver: String,
    pub parameter: Option<String>,
    pub value: Option<f64>,
    pub quantity: String,
    pub index: String,
    pub result: Option<f64>,
    pub result_im: Option<f64>,
    pub reference: Option<f64>,
    pub abs_diff: Option<f64>,
    pub iterations: Option<usize>,
    pub status: String,
    pub note: String,
}

impl Row {
    pub fn new(quantity: impl Into<String>, index: impl ToString, re: f64, im: f64) -> Self {
        Row {
            quantity: quantity.into(),
            index: index.to_string(),
            result: Some(re),
            result_im: Some(im),
            status: "ok".into(),
            ..Row::default()
        }
    }

    pub fn compared(mut self, reference: Option<f64>) -> Self {
        if let (Some(r), Some(x)) = (reference, self.result) {
            self.reference = Some(r);
            self.abs_diff = Some((x - r).abs());
        }
        self
    }

    pub fn iterations(mut self, n: usize) -> Self {
        self.iterations = Some(n);
        self
    }

    pub fn failed(quantity: impl Into<String>, note: impl Into<String>) -> Self {
        Row {
            quantity: quantity.into(),
            status: "error".into(),
            note: note.into(),
            ..Row::default()
        }
    }

    fn numbers(&self) -> impl Iterator<Item = f64> + '_ {
        [self.value, self.result, self.result_im, self.reference, self.abs_diff]
            .into_iter()
            .flatten()
    }

    pub fn is_finite(&self) -> bool {
        self.numbers().all(f64::is_finite)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub index: String,
    pub parameter: Option<String>,
    pub value: Option<f64>,
    pub result: f64,
    pub reference: f64,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub solver: String,
    pub config_sha256: String,
    pub seed: u64,
    pub rows: usize,
    pub failed_rows: usize,
    pub max_abs_diff: Option<f64>,
    pub comparisons: Vec<Comparison>,
    pub wall_time_s: f64,
    pub csv: String,
}

impl RunReport {
    pub fn new(scenario: &str, solver: &str, config_sha256: String, seed: u64, rows: &[Row], wall_time_s: f64, csv: &Path) -> Self {
        let comparisons: Vec<Comparison> = rows
            .iter()
            .filter_map(|r| {
                Some(Comparison {
                    quantity: r.quantity.clone(),
                    index: r.index.clone(),
                    parameter: r.parameter.clone(),
                    value: r.value,
                    result: r.result?,
                    reference: r.reference?,
                    abs_diff: r.abs_diff?,
                })
            })
            .collect();
        RunReport {
            scenario: scenario.into(),
            solver: solver.into(),
            config_sha256,
            seed,
            rows: rows.len(),
            failed_rows: rows.iter().filter(|r| r.status != "ok" && r.status != "pass").count(),
            max_abs_diff: comparisons.iter().map(|c| c.abs_diff).reduce(f64::max),
            comparisons,
            wall_time_s,
            csv: csv.display().to_string(),
        }
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        s += &format!("scenario       {}\n", self.scenario);
        s += &format!("solver         {}\n", self.solver);
        s += &format!("config sha256  {}\n", self.config_sha256);
        s += &format!("seed           {}\n", self.seed);
        s += &format!("rows           {} ({} failed)\n", self.rows, self.failed_rows);
        match self.max_abs_diff {
            Some(d) => s += &format!("oracle checks  {} (max |diff| {:.3e})\n", self.comparisons.len(), d),
            None => s += "oracle checks  0\n",
        }
        s += &format!("wall time      {:.3} s\n", self.wall_time_s);
        s += &format!("csv            {}\n", self.csv);
        if !self.comparisons.is_empty() {
            s += "\nquantity  index  param  value  result  reference  |diff|\n";
            for c in &self.comparisons {
                s += &format!(
                    "{}  {}  {}  {}  {}  {}  {:.3e}\n",
                    c.quantity,
                    c.index,
                    c.parameter.as_deref().unwrap_or("-"),
                    c.value.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                    c.result,
                    c.reference,
                    c.abs_diff
                );
            }
        }
        s
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn csv_bytes(rows: &[Row]) -> Result<Vec<u8>, CliError> {
    let mut buf = format!("{CSV_SCHEMA}\n").into_bytes();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
    w.write_record([
        "scenario",
        "solver",
        "parameter",
        "value",
        "quantity",
        "index",
        "result",
        "result_im",
        "reference",
        "abs_diff",
        "iterations",
        "status",
        "note",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io("writing csv", e))?;
    drop(w);
    Ok(buf)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::io("writing csv", std::io::Error::other(e.to_string()))
}

pub fn write_outputs(dir: &Path, csv_name: &str, rows: &[Row], report_for: impl FnOnce(&Path) -> RunReport) -> Result<RunReport, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let csv_path: PathBuf = dir.join(csv_name);
    fs::write(&csv_path, csv_bytes(rows)?).map_err(|e| CliError::io(format!("writing {}", csv_path.display()), e))?;
    let report = report_for(&csv_path);
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::io("encoding summary", std::io::Error::other(e)))?;
    write_file(&dir.join("summary.json"), json.as_bytes())?;
    write_file(&dir.join("summary.txt"), report.text().as_bytes())?;
    Ok(report)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    f.write_all(bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_when_empty() {
        let text = String::from_utf8(csv_bytes(&[]).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_SCHEMA);
        assert!(lines[1].starts_with("scenario,solver,parameter"));
    }

    #[test]
    fn comparison_records_both_values() {
        let r = Row::new("energy", 0, 1.5, 0.0).compared(Some(1.25));
        assert_eq!(r.abs_diff, Some(0.25));
        let text = String::from_utf8(csv_bytes(&[r]).unwrap()).unwrap();
        assert!(text.lines().nth(2).unwrap().contains("energy,0,1.5,0.0,1.25,0.25"));
    }

    #[test]
    fn hash_is_hex_sha256() {
        let h = config_hash(b"abc");
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn non_finite_rows_are_detected() {
        assert!(!Row::new("energy", 0, f64::NAN, 0.0).is_finite());
        assert!(Row::failed("energy", "x").is_finite());
    }
}
