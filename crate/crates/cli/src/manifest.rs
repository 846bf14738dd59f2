//! Versioned JSON record of a verification run.

use crate::config::RunConfig;
use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// Passes when `value < bound * tol_scale`.
    Below,
    /// Passes when `value > bound / tol_scale`.
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Measurement {
    pub fn below(name: &str, value: f64, bound: f64, tol_scale: f64) -> Self {
        Measurement { name: name.into(), value, bound, relation: Relation::Below, passed: value < bound * tol_scale }
    }

    pub fn above(name: &str, value: f64, bound: f64, tol_scale: f64) -> Self {
        Measurement { name: name.into(), value, bound, relation: Relation::Above, passed: value > bound / tol_scale }
    }

    /// An exact check: passes only with zero failures.
    pub fn failures(name: &str, count: usize, tol_scale: f64) -> Self {
        Self::below(name, count as f64, 1.0, tol_scale)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    /// Error message when the check could not be evaluated.
    pub error: Option<String>,
    /// First few failing relations for exact checks.
    pub detail: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: u64,
    pub total_seconds: f64,
    /// Seconds per check, in the order of `checks`.
    pub check_seconds: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub timing: Timing,
}

impl RunManifest {
    pub fn new(config: RunConfig) -> Self {
        RunManifest { schema_version: SCHEMA_VERSION, code_version: env!("CARGO_PKG_VERSION").into(), config, checks: Vec::new(), timing: Timing::default() }
    }

    pub fn push(&mut self, record: CheckRecord, seconds: f64) {
        self.checks.push(record);
        self.timing.check_seconds.push(seconds);
    }

    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    /// Process exit status: the number of failed checks, capped at 125.
    pub fn exit_code(&self) -> i32 {
        self.failed().min(125) as i32
    }

    /// Copy with timing zeroed, which is a pure function of the configuration.
    pub fn without_timing(&self) -> Self {
        RunManifest { timing: Timing::default(), ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

impl std::fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {:>2} {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name)?;
        for m in &self.measurements {
            let op = match m.relation {
                Relation::Below => "<",
                Relation::Above => ">",
            };
            write!(f, "; {} = {:.3e} ({op} {:.1e})", m.name, m.value, m.bound)?;
        }
        if let Some(e) = &self.error {
            write!(f, "; error: {e}")?;
        }
        Ok(())
    }
}
