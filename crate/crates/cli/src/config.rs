//! Scenario files: one TOML document per run.

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Expand,
    Bw,
    Bsbloch,
    Verify,
    Sweep,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Expand => "expand",
            SolverKind::Bw => "bw",
            SolverKind::Bsbloch => "bsbloch",
            SolverKind::Verify => "verify",
            SolverKind::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Coupling,
    Gap,
    Quadrature,
    Gamma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Coupling => "coupling",
            SweepParam::Gap => "gap",
            SweepParam::Quadrature => "quadrature",
            SweepParam::Gamma => "gamma",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "coupling" => Ok(SweepParam::Coupling),
            "gap" => Ok(SweepParam::Gap),
            "quadrature" => Ok(SweepParam::Quadrature),
            "gamma" => Ok(SweepParam::Gamma),
            other => Err(CliError::config(
                "sweep.parameter",
                format!("unknown parameter '{other}' (expected coupling, gap, quadrature or gamma)"),
            )),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_id")]
    pub id: String,
    pub solver: SolverKind,
    pub seed: Option<u64>,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub model: Vec<usize>,
    #[serde(default)]
    pub no_pair: bool,
    #[serde(default)]
    pub potential: Vec<TermSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub bw: BwSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub expand: ExpandSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_id() -> String {
    "scenario".into()
}

/// Exactly one of `diagonal`, `tensor` or `ensemble` is set.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub diagonal: Option<Vec<f64>>,
    pub tensor: Option<TensorSpec>,
    #[serde(default)]
    pub ensemble: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    pub first: Vec<OrbitalSpec>,
    pub second: Vec<OrbitalSpec>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrbitalSpec {
    Energy(f64),
    Signed { energy: f64, sign: i8 },
}

/// Coupling matrix, dense or as `[i, j, value]` triples.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub matrix: Option<Vec<Vec<f64>>>,
    pub entries: Option<Vec<(usize, usize, f64)>>,
    #[serde(default)]
    pub symmetric: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TermSpec {
    Constant {
        #[serde(flatten)]
        w: MatrixSpec,
    },
    Rational {
        #[serde(flatten)]
        w: MatrixSpec,
        pole: f64,
        #[serde(default = "one")]
        power: u32,
    },
    Photon {
        #[serde(flatten)]
        w: MatrixSpec,
        nodes: usize,
        kmin: f64,
        kmax: f64,
        #[serde(default)]
        profile: ProfileSpec,
        #[serde(default)]
        gamma: f64,
    },
}

fn one() -> u32 {
    1
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant { value: f64 },
    Gaussian { center: f64, width: f64 },
    Lorentzian { center: f64, width: f64 },
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::Constant { value: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "Tolerances::d_residual")]
    pub residual: f64,
    #[serde(default = "Tolerances::d_bloch")]
    pub bloch: f64,
    #[serde(default = "Tolerances::d_max_iter")]
    pub max_iter: usize,
    #[serde(default = "Tolerances::d_eta")]
    pub eta: f64,
}

impl Tolerances {
    fn d_residual() -> f64 {
        1e-10
    }
    fn d_bloch() -> f64 {
        1e-13
    }
    fn d_max_iter() -> usize {
        2000
    }
    fn d_eta() -> f64 {
        0.5
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: Self::d_residual(),
            bloch: Self::d_bloch(),
            max_iter: Self::d_max_iter(),
            eta: Self::d_eta(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BwSpec {
    #[serde(default)]
    pub branch: usize,
    pub bracket: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub range: Option<[f64; 2]>,
    #[serde(default = "OracleSpec::d_grid")]
    pub grid: usize,
}

fn yes() -> bool {
    true
}

impl OracleSpec {
    fn d_grid() -> usize {
        401
    }
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            enabled: true,
            range: None,
            grid: Self::d_grid(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandSpec {
    #[serde(default = "ExpandSpec::d_order")]
    pub order: usize,
}

impl ExpandSpec {
    fn d_order() -> usize {
        3
    }
}

impl Default for ExpandSpec {
    fn default() -> Self {
        ExpandSpec { order: 3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    #[serde(default)]
    pub values: Vec<f64>,
    pub solver: SolverKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
    #[serde(default = "OutputSpec::d_csv")]
    pub csv: String,
}

impl OutputSpec {
    fn d_csv() -> String {
        "results.csv".into()
    }
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            csv: Self::d_csv(),
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("line {}", text[..s.start].lines().count().max(1)))
                .unwrap_or_else(|| "config".into());
            CliError::config(path, e.message().to_string())
        })
    }

    /// Checks that do not need the assembled system.
    pub fn validate_shallow(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        if !(t.residual > 0.0 && t.residual.is_finite()) {
            return Err(CliError::config("tolerances.residual", "must be positive"));
        }
        if !(t.bloch > 0.0 && t.bloch.is_finite()) {
            return Err(CliError::config("tolerances.bloch", "must be positive"));
        }
        if t.max_iter == 0 {
            return Err(CliError::config("tolerances.max_iter", "must be at least 1"));
        }
        if !(t.eta > 0.0 && t.eta <= 1.0) {
            return Err(CliError::config("tolerances.eta", "must lie in (0, 1]"));
        }
        if let Some([lo, hi]) = self.bw.bracket {
            if !(lo < hi) {
                return Err(CliError::config("bw.bracket", format!("bounds must be ordered, got [{lo}, {hi}]")));
            }
        }
        if let Some([lo, hi]) = self.oracle.range {
            if !(lo < hi) {
                return Err(CliError::config("oracle.range", format!("bounds must be ordered, got [{lo}, {hi}]")));
            }
        }
        if self.oracle.grid < 2 {
            return Err(CliError::config("oracle.grid", "needs at least 2 nodes"));
        }
        if !(1..=3).contains(&self.expand.order) {
            return Err(CliError::config("expand.order", format!("must be 1, 2 or 3, got {}", self.expand.order)));
        }
        if self.solver == SolverKind::Sweep {
            let Some(sw) = &self.sweep else {
                return Err(CliError::config("sweep", "solver = \"sweep\" needs a [sweep] table"));
            };
            sw.validate()?;
        }
        Ok(())
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if matches!(self.solver, SolverKind::Sweep | SolverKind::Verify) {
            return Err(CliError::config("sweep.solver", "must be expand, bw or bsbloch"));
        }
        for (i, &x) in self.values.iter().enumerate() {
            let path = format!("sweep.values[{i}]");
            if !x.is_finite() {
                return Err(CliError::config(path, "must be finite"));
            }
            match self.parameter {
                SweepParam::Quadrature if x < 1.0 || x.fract() != 0.0 => {
                    return Err(CliError::config(path, format!("quadrature size must be a positive integer, got {x}")));
                }
                SweepParam::Gamma | SweepParam::Gap if x < 0.0 => {
                    return Err(CliError::config(path, format!("must be non-negative, got {x}")));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
        id = "toy"
        solver = "bw"
        model = [0]
        [spectrum]
        diagonal = [0.0]
        [[potential]]
        kind = "rational"
        matrix = [[0.5]]
        pole = -2.0
    "#;

    #[test]
    fn parses_minimal_scenario() {
        let c = ScenarioConfig::parse(TOY).unwrap();
        assert_eq!(c.solver, SolverKind::Bw);
        assert_eq!(c.oracle.grid, 401);
        assert!(matches!(c.potential[0], TermSpec::Rational { power: 1, .. }));
        c.validate_shallow().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::parse(&format!("{TOY}\nbogus = 1\n")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn reversed_bracket_names_the_field() {
        let mut c = ScenarioConfig::parse(TOY).unwrap();
        c.bw.bracket = Some([1.0, 0.0]);
        assert!(c.validate_shallow().unwrap_err().to_string().contains("bw.bracket"));
    }

    #[test]
    fn orbitals_accept_plain_or_signed() {
        let t: TensorSpec = toml::from_str("first = [0.5, { energy = -1.0, sign = -1 }]\nsecond = [0.2]").unwrap();
        assert!(matches!(t.first[1], OrbitalSpec::Signed { sign: -1, .. }));
    }

    #[test]
    fn quadrature_sweep_needs_integers() {
        let s = SweepSpec {
            parameter: SweepParam::Quadrature,
            values: vec![8.0, 2.5],
            solver: SolverKind::Bsbloch,
        };
        assert!(s.validate().unwrap_err().to_string().contains("sweep.values[1]"));
    }
}
