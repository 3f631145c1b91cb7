//! Run configuration: a TOML file with `[model]`, `[numerics]`, task and
//! `[output]` tables. Command-line `--set table.key=value` pairs override
//! file values before validation.

use std::path::{Path, PathBuf};

use otto_core::kernel::KernelQuadrature;
use otto_core::{CycleConfig, MediumSelector, Model, Numerics};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that overrides `[output] dir`.
pub const OUTPUT_DIR_ENV: &str = "OTTO_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum ModelName {
    Ising,
    Xxz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: ModelName,
    /// Transverse field `h` (Ising).
    pub field: Option<f64>,
    /// Exchange coupling `J` (XXZ).
    pub coupling: Option<f64>,
    /// Anisotropy `Δ` (XXZ).
    pub anisotropy: Option<f64>,
    /// String cutoff (XXZ).
    pub max_string: Option<usize>,
}

impl ModelSection {
    pub fn build(&self) -> Result<Model, CliError> {
        let missing = |k: &str| CliError::Config(format!("[model] {k} is required"));
        let m = match self.name {
            ModelName::Ising => Model::ising(self.field.ok_or_else(|| missing("field"))?),
            ModelName::Xxz => Model::xxz(
                self.coupling.unwrap_or(-1.0),
                self.anisotropy.ok_or_else(|| missing("anisotropy"))?,
                self.max_string.unwrap_or(otto_core::models::DEFAULT_STRING_CUTOFF),
            ),
        };
        m.map_err(CliError::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    pub cells: usize,
    pub quadrature: KernelQuadrature,
    pub newton_tolerance: f64,
    pub max_newton_iterations: usize,
    pub linear_tolerance: f64,
    pub max_linear_iterations: usize,
    pub magnetization_tolerance: f64,
    /// Steps per stroke; the control step is the stroke length over this.
    pub steps: usize,
    pub bootstrap_substeps: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let n = Numerics::default();
        Self {
            cells: n.cells,
            quadrature: n.quadrature,
            newton_tolerance: n.newton_tolerance,
            max_newton_iterations: n.max_newton_iterations,
            linear_tolerance: n.linear_tolerance,
            max_linear_iterations: n.max_linear_iterations,
            magnetization_tolerance: n.magnetization_tolerance,
            steps: otto_core::strokes::DEFAULT_STEPS,
            bootstrap_substeps: otto_core::strokes::DEFAULT_BOOTSTRAP_SUBSTEPS,
        }
    }
}

impl NumericsSection {
    pub fn numerics(&self) -> Numerics {
        Numerics {
            cells: self.cells,
            quadrature: self.quadrature,
            newton_tolerance: self.newton_tolerance,
            max_newton_iterations: self.max_newton_iterations,
            linear_tolerance: self.linear_tolerance,
            max_linear_iterations: self.max_linear_iterations,
            magnetization_tolerance: self.magnetization_tolerance,
        }
    }
}

/// A thermal state, fixed either by the magnetization or by `μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub beta: f64,
    pub magnetization: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrokeKindName {
    Thermal,
    Prethermal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrokeSection {
    pub kind: StrokeKindName,
    /// Final control value; the stroke starts at the model's control value.
    pub chi_end: f64,
    /// Write the filling every this many steps (0 disables snapshots).
    #[serde(default)]
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSection {
    pub chi_cold: f64,
    pub chi_hot: f64,
    pub beta_cold: f64,
    pub beta_hot: f64,
    pub magnetization: Option<f64>,
    #[serde(default)]
    pub medium: MediumSelector,
    #[serde(default = "default_distance_every")]
    pub distance_every: usize,
}

fn default_distance_every() -> usize {
    10
}

/// Evenly spaced values, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.end
                    } else {
                        self.start + (self.end - self.start) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanAxis {
    /// Rows are inverse temperatures.
    #[default]
    Beta,
    /// Rows are temperatures `1/β`.
    Temperature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default)]
    pub axis: ScanAxis,
    pub rows: Range,
    pub chi: Range,
    pub magnetization: Option<f64>,
    #[serde(default = "default_dchi")]
    pub dchi: f64,
    #[serde(default = "default_dbeta")]
    pub dbeta: f64,
}

fn default_dchi() -> f64 {
    1e-3
}

fn default_dbeta() -> f64 {
    1e-1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Prepended to every file name.
    pub prefix: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("output"),
            prefix: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    pub state: Option<StateSection>,
    pub stroke: Option<StrokeSection>,
    pub cycle: Option<CycleSection>,
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Apply a `table.key=value` override to a parsed document.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{path}`")));
    }
    let mut table = doc;
    for k in &keys[..keys.len() - 1] {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override key `{path}`: `{k}` is not a table")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("malformed config: {e}")))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.build()?;
        self.numerics.numerics().validate()?;
        if self.numerics.steps == 0 {
            return Err(CliError::Config("[numerics] steps must be positive".into()));
        }
        if self.numerics.bootstrap_substeps == 0 {
            return Err(CliError::Config(
                "[numerics] bootstrap_substeps must be positive".into(),
            ));
        }
        if let Some(s) = &self.state {
            if !s.beta.is_finite() {
                return Err(CliError::Config("[state] beta must be finite".into()));
            }
            if s.magnetization.is_some() && s.mu.is_some() {
                return Err(CliError::Config(
                    "[state] give either magnetization or mu, not both".into(),
                ));
            }
        }
        if let Some(s) = &self.scan {
            if s.rows.count == 0 || s.chi.count == 0 {
                return Err(CliError::Config("[scan] ranges need a positive count".into()));
            }
            if !(s.dchi.is_finite() && s.dbeta.is_finite()) || s.dbeta == 0.0 {
                return Err(CliError::Config("[scan] dchi must be finite and dbeta nonzero".into()));
            }
            if s.axis == ScanAxis::Temperature && s.rows.values().contains(&0.0) {
                return Err(CliError::Config("[scan] temperature rows must be nonzero".into()));
            }
        }
        if let Some(c) = self.cycle.as_ref() {
            self.cycle_config(c)?.validate()?;
        }
        Ok(())
    }

    pub fn cycle_config(&self, c: &CycleSection) -> Result<CycleConfig, CliError> {
        let model = self.model.build()?;
        Ok(CycleConfig {
            model,
            chi_cold: c.chi_cold,
            chi_hot: c.chi_hot,
            beta_cold: c.beta_cold,
            beta_hot: c.beta_hot,
            magnetization: c.magnetization,
            numerics: self.numerics.numerics(),
            steps: self.numerics.steps,
            bootstrap_substeps: self.numerics.bootstrap_substeps,
            medium: c.medium,
            distance_every: c.distance_every,
        })
    }

    /// Output directory: command-line flag, then environment, then file.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output.dir.clone(),
        }
    }
}
