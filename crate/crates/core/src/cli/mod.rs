// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment driver: flat `key: value` configs, validation, dispatch to the
//! library and CSV/JSON output.
//!
//! A config is UTF-8 text with one `key: value` pair per line. Blank lines and
//! lines starting with `#` are ignored. Lists are comma separated.

mod experiments;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    GapSweep,
    Meanfield,
    PerturbationCheck,
    Hydro,
    Correlators,
    Timecrystal,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Spectrum,
        Experiment::GapSweep,
        Experiment::Meanfield,
        Experiment::PerturbationCheck,
        Experiment::Hydro,
        Experiment::Correlators,
        Experiment::Timecrystal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::GapSweep => "gap-sweep",
            Experiment::Meanfield => "meanfield",
            Experiment::PerturbationCheck => "perturbation-check",
            Experiment::Hydro => "hydro",
            Experiment::Correlators => "correlators",
            Experiment::Timecrystal => "timecrystal",
        }
    }

    /// Models the experiment accepts; empty when it takes none.
    fn models(self) -> &'static [Model] {
        use Model::*;
        match self {
            Experiment::Spectrum | Experiment::GapSweep => &[I, II, III, EffN0, EffNHalf],
            Experiment::Meanfield => &[I, II],
            Experiment::PerturbationCheck => &[I, III],
            Experiment::Correlators | Experiment::Timecrystal => &[III],
            Experiment::Hydro => &[],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    I,
    II,
    III,
    EffN0,
    EffNHalf,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::I => "I",
            Model::II => "II",
            Model::III => "III",
            Model::EffN0 => "eff-n0",
            Model::EffNHalf => "eff-nhalf",
        }
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "1" => Ok(Model::I),
            "II" | "2" => Ok(Model::II),
            "III" | "3" => Ok(Model::III),
            "eff-n0" => Ok(Model::EffN0),
            "eff-nhalf" => Ok(Model::EffNHalf),
            _ => Err(format!("unknown model `{s}`")),
        }
    }
}

/// One rule broken by a config.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// A parsed config. Values stay textual until an experiment reads them, so
/// the metadata echo is exactly what the user wrote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: Option<Model>,
    pub params: BTreeMap<String, String>,
    pub output: Option<PathBuf>,
}

/// Canonical spelling of a parameter key.
fn canonical_key(key: &str) -> String {
    match key {
        "Γ" | "gamma_loss" => "Gamma".into(),
        "Γ_z" => "Gamma_z".into(),
        "μ" => "mu".into(),
        "Δ" => "Delta".into(),
        "λ" => "lambda".into(),
        "σ_n" => "sigma_n".into(),
        "Jz" => "J_z".into(),
        "Jxy" => "J_xy".into(),
        other => other.to_string(),
    }
}

impl ExperimentConfig {
    /// Parse config text. `experiment` may come from the command line; a
    /// config key of the same name must then agree with it.
    pub fn parse(text: &str, experiment: Option<Experiment>) -> Result<Self, Vec<Violation>> {
        let mut violations = Vec::new();
        let mut params = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once(':') else {
                violations.push(Violation::new(
                    &format!("line {}", lineno + 1),
                    "expected `key: value`",
                ));
                continue;
            };
            let key = canonical_key(k.trim());
            let value = v.split('#').next().unwrap_or("").trim().to_string();
            if key.is_empty() {
                violations.push(Violation::new(&format!("line {}", lineno + 1), "empty key"));
            } else if params.insert(key.clone(), value).is_some() {
                violations.push(Violation::new(&key, "given more than once"));
            }
        }
        let from_file = params.remove("experiment");
        let experiment = match (experiment, from_file) {
            (Some(e), Some(f)) if f != e.name() => {
                violations.push(Violation::new(
                    "experiment",
                    format!("config says `{f}` but `{e}` was requested"),
                ));
                Some(e)
            }
            (Some(e), _) => Some(e),
            (None, Some(f)) => match f.parse() {
                Ok(e) => Some(e),
                Err(msg) => {
                    violations.push(Violation::new("experiment", msg));
                    None
                }
            },
            (None, None) => {
                violations.push(Violation::new("experiment", "missing"));
                None
            }
        };
        let model = match params.remove("model") {
            Some(m) => match m.parse() {
                Ok(m) => Some(m),
                Err(msg) => {
                    violations.push(Violation::new("model", msg));
                    None
                }
            },
            None => None,
        };
        let output = params.remove("output").map(PathBuf::from);
        match experiment {
            Some(experiment) if violations.is_empty() => Ok(Self {
                experiment,
                model,
                params,
                output,
            }),
            _ => Err(violations),
        }
    }

    pub fn from_file(path: &Path, experiment: Option<Experiment>) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, experiment).map_err(CliError::validation)
    }

    /// All schema violations; empty for a well-formed config.
    pub fn validate(&self) -> Vec<Violation> {
        experiments::validate(self)
    }

    pub fn seed(&self) -> u64 {
        self.params
            .get("seed")
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

/// Failure of a run, with the exit code the binary reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    pub violations: Vec<Violation>,
}

impl CliError {
    pub fn validation(violations: Vec<Violation>) -> Self {
        let message = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        Self {
            kind: ErrorKind::Validation,
            message,
            violations,
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: message.into(),
            violations: Vec::new(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 4,
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind,
            "exit_code": self.exit_code(),
            "message": self.message,
            "violations": self.violations,
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let field = match &e {
            Error::InvalidParameter { name, .. } => Some(name.clone()),
            Error::InvalidLattice(_) => Some("L".to_string()),
            Error::StepSize(_) => Some("dt".to_string()),
            _ => None,
        };
        match field {
            Some(field) => CliError::validation(vec![Violation::new(&field, e.to_string())]),
            None => match e {
                Error::DimensionMismatch(_)
                | Error::Symmetry(_)
                | Error::NotTranslationInvariant(_) => {
                    CliError::validation(vec![Violation::new("model", e.to_string())])
                }
                _ => Self {
                    kind: ErrorKind::Numerical,
                    message: e.to_string(),
                    violations: Vec::new(),
                },
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Real(Vec<f64>),
    /// Written as `<name>_re`, `<name>_im`.
    Complex(Vec<Complex64>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Real(v) => v.len(),
            ColumnData::Complex(v) => v.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// A named table of equal-length columns, written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<Column>,
}

impl ResultTable {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            columns: Vec::new(),
        }
    }

    pub fn real(mut self, name: &str, values: Vec<f64>) -> Self {
        self.columns.push(Column {
            name: name.to_string(),
            data: ColumnData::Real(values),
        });
        self
    }

    pub fn complex(mut self, name: &str, values: Vec<Complex64>) -> Self {
        self.columns.push(Column {
            name: name.to_string(),
            data: ColumnData::Complex(values),
        });
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map(|c| c.data.len()).unwrap_or(0)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| &c.data)
    }

    /// Header plus one line per row; numbers use Rust's shortest round-trip
    /// formatting.
    pub fn to_csv(&self) -> String {
        let mut header = Vec::new();
        for c in &self.columns {
            match c.data {
                ColumnData::Real(_) => header.push(c.name.clone()),
                ColumnData::Complex(_) => {
                    header.push(format!("{}_re", c.name));
                    header.push(format!("{}_im", c.name));
                }
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for r in 0..self.rows() {
            let mut cells = Vec::with_capacity(header.len());
            for c in &self.columns {
                match &c.data {
                    ColumnData::Real(v) => cells.push(format!("{}", v[r])),
                    ColumnData::Complex(v) => {
                        cells.push(format!("{}", v[r].re));
                        cells.push(format!("{}", v[r].im));
                    }
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct ResultRecord {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub tables: Vec<ResultTable>,
    /// Scalar results (fitted exponents, residuals, detected frequencies).
    pub summary: BTreeMap<String, Value>,
}

impl ResultRecord {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// JSON sidecar: config echo, version, timestamp, seed, table list and
    /// summary.
    pub fn metadata(&self) -> Value {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        json!({
            "experiment": self.config.experiment,
            "model": self.config.model.map(|m| m.name()),
            "config": self.config.params,
            "version": format!("sslab {}", env!("CARGO_PKG_VERSION")),
            "timestamp": timestamp,
            "seed": self.seed,
            "tables": self.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
            "summary": self.summary,
        })
    }

    /// Write one CSV per table plus `<experiment>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv())
                .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
        }
        let path = dir.join(format!("{}.json", self.config.experiment));
        let text = serde_json::to_string_pretty(&self.metadata()).expect("metadata serializes");
        fs::write(&path, text)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
        Ok(written)
    }
}

/// Validate and run one experiment. `seed` overrides the config's seed.
pub fn run(config: &ExperimentConfig, seed: Option<u64>) -> Result<ResultRecord, CliError> {
    let mut config = config.clone();
    if let Some(s) = seed {
        config.params.insert("seed".into(), s.to_string());
    }
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(CliError::validation(violations));
    }
    let seed = config.seed();
    let (tables, summary) = experiments::dispatch(&config)?;
    Ok(ResultRecord {
        config,
        seed,
        tables,
        summary,
    })
}

/// Thread count from the flag, else `SSLAB_THREADS`, else `None` (all cores).
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(CliError::validation(vec![Violation::new(
                "threads",
                "must be at least 1",
            )]))
        } else {
            Ok(Some(n))
        };
    }
    match std::env::var("SSLAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::validation(vec![Violation::new(
                "SSLAB_THREADS",
                format!("`{v}` is not a positive integer"),
            )])),
        },
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text, None).unwrap()
    }

    #[test]
    fn parses_flat_key_values() {
        let c = cfg("# spectrum of model III\nexperiment: spectrum\nmodel: III\nL: 6   # ring\nΓ: 1\nJ_xy: 0.1\n");
        assert_eq!(c.experiment, Experiment::Spectrum);
        assert_eq!(c.model, Some(Model::III));
        assert_eq!(c.params["Gamma"], "1");
        assert_eq!(c.params["L"], "6");
    }

    #[test]
    fn parse_errors_are_reported_per_line() {
        let err = ExperimentConfig::parse("experiment: spectrum\nnonsense\nJ: 1\nJ: 2\n", None)
            .unwrap_err();
        assert_eq!(err.len(), 2);
        assert_eq!(err[0].field, "line 2");
        assert_eq!(err[1].field, "J");
        let err =
            ExperimentConfig::parse("experiment: spectrum\n", Some(Experiment::Hydro)).unwrap_err();
        assert_eq!(err[0].field, "experiment");
    }

    #[test]
    fn validation_rules() {
        let missing_j = cfg("experiment: gap-sweep\nmodel: I\nL: 4\nGamma: 1\n");
        assert!(missing_j.validate().iter().any(|v| v.field == "J_values"));
        let bad_n = cfg(
            "experiment: meanfield\nmodel: II\nJ: 0.1\nGamma: 1\nd: 1\nn: 1.5\nT: 10\ndt: 0.01\n",
        );
        assert!(bad_n.validate().iter().any(|v| v.field == "n"));
        let negative = cfg("experiment: spectrum\nmodel: I\nL: 4\nJ: 0.1\nGamma: -1\n");
        let v = negative.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "Gamma");
        let ok = cfg("experiment: spectrum\nmodel: III\nL: 4\nS: 0.5\nJ_xy: 0.1\nGamma: 1\nsector: 2,2\nseed: 7\n");
        assert!(ok.validate().is_empty(), "{:?}", ok.validate());
        let bad_seed =
            cfg("experiment: spectrum\nmodel: III\nL: 4\nS: 0.5\nJ_xy: 0.1\nGamma: 1\nseed: -3\n");
        assert!(bad_seed.validate().iter().any(|v| v.field == "seed"));
        let typo = cfg("experiment: spectrum\nmodel: III\nL: 4\nS: 0.5\nJ_xy: 0.1\nGama: 1\n");
        assert!(typo.validate().iter().any(|v| v.field == "Gama"));
    }

    #[test]
    fn negative_rate_exits_with_validation_code() {
        let c = cfg("experiment: spectrum\nmodel: I\nL: 4\nJ: 0.1\nGamma: -1\n");
        let err = run(&c, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let v: Value = serde_json::from_str(&err.to_json()).unwrap();
        assert_eq!(v["error"], "validation");
        assert_eq!(v["violations"][0]["field"], "Gamma");
    }

    #[test]
    fn csv_uses_round_trip_formatting_and_complex_pairs() {
        let t = ResultTable::new("x")
            .real("k", vec![0.1, 1.0 / 3.0])
            .complex(
                "lambda",
                vec![Complex64::new(-1.0, 0.5), Complex64::new(0.0, -0.0)],
            );
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("k,lambda_re,lambda_im"));
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(row, vec![0.1, -1.0, 0.5]);
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(row[0], 1.0 / 3.0);
    }

    #[test]
    fn library_errors_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::param("J", "bad")).exit_code(), 2);
        assert_eq!(CliError::from(Error::StepSize("x".into())).exit_code(), 2);
        assert_eq!(
            CliError::from(Error::Instability("x".into())).exit_code(),
            3
        );
        assert_eq!(
            CliError::from(Error::RootFinder { residual: 1.0 }).exit_code(),
            3
        );
        assert_eq!(CliError::io("disk").exit_code(), 4);
    }

    #[test]
    fn explicit_thread_flag_wins() {
        assert_eq!(thread_count(Some(3)).unwrap(), Some(3));
        assert!(thread_count(Some(0)).is_err());
    }
}
