//! Run configuration: defaults, TOML files, JSON overrides and validation.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

/// The only environment variable read by the tool.
pub const OUT_ENV: &str = "CONFWELD_OUT";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Verify,
    Pipeline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub seed: u64,
    /// Pipeline sample count.
    pub samples: usize,
    /// Fourier modes per sampled field.
    pub modes: usize,
    /// Boundary grid for GMC measures and welding.
    pub grid: usize,
    /// Mode truncation of the symbolic engine.
    pub truncation: u32,
    /// Fields averaged in the GMC mass check.
    pub gmc_samples: usize,
    pub traces: usize,
    pub trace_steps: usize,
    pub local_time_paths: usize,
    /// Multiplies every `value < bound` tolerance; 0 forces failures.
    pub tol_scale: f64,
    pub out: PathBuf,
    /// Check ids or names; empty means all.
    pub checks: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Verify,
            kappa: None,
            gamma: None,
            seed: 2024,
            samples: 500,
            modes: 256,
            grid: 1024,
            truncation: 12,
            gmc_samples: 10_000,
            traces: 50,
            trace_steps: 10_000,
            local_time_paths: 400,
            tol_scale: 1.0,
            out: PathBuf::from("confweld-out"),
            checks: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with an optional TOML file and then an optional JSON object.
    pub fn load(toml_path: Option<&Path>, json_override: Option<&str>) -> Result<Self, CliError> {
        let mut v = serde_json::to_value(RunConfig::default())?;
        if let Some(p) = toml_path {
            let text = std::fs::read_to_string(p)?;
            let t: toml::Value = toml::from_str(&text)?;
            merge(&mut v, serde_json::to_value(t)?);
        }
        if let Some(s) = json_override {
            merge(&mut v, serde_json::from_str(s)?);
        }
        Ok(serde_json::from_value(v)?)
    }

    /// Replaces `out` with the environment override when it is set.
    pub fn with_env_out(mut self) -> Self {
        if let Some(p) = std::env::var_os(OUT_ENV) {
            self.out = PathBuf::from(p);
        }
        self
    }

    /// `gamma`, or `sqrt(kappa)` when only `kappa` is given.
    pub fn coupling(&self) -> Option<f64> {
        self.gamma.or(self.kappa.map(f64::sqrt))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(k) = self.kappa {
            if !(k.is_finite() && k > 0.0) {
                return bad(format!("kappa = {k}"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return bad(format!("gamma = {g}"));
            }
        }
        if let (Some(k), Some(g)) = (self.kappa, self.gamma) {
            if (g * g - k).abs() > 1e-12 * k.max(1.0) {
                return bad(format!("gamma^2 = {} but kappa = {k}", g * g));
            }
        }
        let sizes = [
            ("samples", self.samples),
            ("modes", self.modes),
            ("grid", self.grid),
            ("truncation", self.truncation as usize),
            ("gmc_samples", self.gmc_samples),
            ("traces", self.traces),
            ("trace_steps", self.trace_steps),
            ("local_time_paths", self.local_time_paths),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{name} must be positive"));
        }
        if !(self.tol_scale.is_finite() && self.tol_scale >= 0.0) {
            return bad(format!("tol_scale = {}", self.tol_scale));
        }
        if self.command == Command::Pipeline {
            match self.coupling() {
                None => return bad("pipeline needs kappa or gamma".into()),
                Some(g) if g >= 2.0 => return bad(format!("pipeline needs gamma < 2, got {g}")),
                _ => {}
            }
        }
        Ok(())
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
