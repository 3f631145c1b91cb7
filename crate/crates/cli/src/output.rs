//! File emission. Every file carries the schema version and the resolved
//! configuration; CSV numbers use 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::CliError;

pub struct Writer {
    dir: PathBuf,
    prefix: String,
    config_json: String,
    written: Vec<PathBuf>,
}

/// Round-trip formatting of a float.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Writer {
    pub fn new(dir: &Path, config: &RunConfig) -> Result<Self, CliError> {
        let config_json = serde_json::to_string(config).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            prefix: config.output.prefix.clone(),
            config_json,
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", self.dir.display())))?;
        let p = self.dir.join(format!("{}{name}", self.prefix));
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn json(&mut self, name: &str, result: &impl Serialize) -> Result<(), CliError> {
        let config: serde_json::Value = serde_json::from_str(&self.config_json).expect("valid json");
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "config": config,
            "result": result,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
        let p = self.path(name)?;
        fs::write(&p, text + "\n").map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
    }

    /// CSV with two comment lines holding the schema version and the
    /// configuration.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut buf = format!("# schema_version={SCHEMA_VERSION}\n# config={}\n", self.config_json).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(header).map_err(io)?;
            for r in rows {
                w.write_record(r).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        let p = self.path(name)?;
        fs::write(&p, buf).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
