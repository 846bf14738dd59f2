//! Seeded random-welding pipeline: two independent boundary fields, their
//! chaos measures, the matching homeomorphism and its welded curve.
//!
//! Sample `i` uses seed `seed + i`; the fields come from streams 0 and 1 and
//! the rotation angle from stream 2.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::SCHEMA_VERSION;
use crate::stats::{ks_uniform, KsResult};
use confweld::curve::CurvePolyline;
use confweld::fields::{gmc_measure, rng_for, sample_field_stream, FieldVariant, Regularization, ZeroMode};
use confweld::welding::{homeo_from_measures, normalized_hausdorff, welding_energies, zipper_weld, CircleHomeo, WeldingTriple};
use confweld::ConfError;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

pub const FIELD_STREAM: u64 = 0;
pub const DUAL_FIELD_STREAM: u64 = 1;
pub const ANGLE_STREAM: u64 = 2;

/// Scalars of one welded sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRow {
    pub seed: u64,
    pub alpha: f64,
    pub mass1: f64,
    pub mass2: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "S1")]
    pub s1: f64,
    pub residual: f64,
    /// Normalised Hausdorff distance from the welded curve to the unit circle.
    pub circle_distance: f64,
    /// Angle of `h(1)` as a fraction of a turn, in `[0, 1)`.
    pub h_one: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub gamma: f64,
    pub rows: Vec<SampleRow>,
    /// Normalised curves, parallel to `rows`.
    pub curves: Vec<CurvePolyline<f64>>,
    pub failures: Vec<SampleFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsSummary {
    pub statistic: f64,
    pub p_value: f64,
}

impl From<KsResult> for KsSummary {
    fn from(r: KsResult) -> Self {
        KsSummary { statistic: r.statistic, p_value: r.p_value }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub schema_version: u32,
    pub code_version: String,
    pub config: RunConfig,
    pub gamma: f64,
    pub requested: usize,
    pub succeeded: usize,
    pub failures: Vec<SampleFailure>,
    pub residual_median: Option<f64>,
    pub max_circle_distance: Option<f64>,
    /// Uniformity of `h(1)` on the circle.
    pub rotation_ks: KsSummary,
}

impl PipelineReport {
    pub fn residual_median(&self) -> Option<f64> {
        median(self.rows.iter().map(|r| r.residual).collect())
    }

    pub fn max_circle_distance(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.circle_distance).reduce(f64::max)
    }

    pub fn rotation_ks(&self) -> KsResult {
        ks_uniform(&self.rows.iter().map(|r| r.h_one).collect::<Vec<_>>())
    }

    pub fn summary(&self, config: &RunConfig) -> PipelineSummary {
        PipelineSummary {
            schema_version: SCHEMA_VERSION,
            code_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            gamma: self.gamma,
            requested: config.samples,
            succeeded: self.rows.len(),
            failures: self.failures.clone(),
            residual_median: self.residual_median(),
            max_circle_distance: self.max_circle_distance(),
            rotation_ks: self.rotation_ks().into(),
        }
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn weld_sample(seed: u64, gamma: f64, config: &RunConfig, circle: &WeldingTriple<f64>) -> Result<(SampleRow, CurvePolyline<f64>), ConfError> {
    let phi = sample_field_stream::<f64>(FieldVariant::NeumannDot, config.modes, seed, FIELD_STREAM, ZeroMode::None)?;
    let phi_star = sample_field_stream::<f64>(FieldVariant::NeumannDot, config.modes, seed, DUAL_FIELD_STREAM, ZeroMode::None)?;
    let alpha = rng_for(seed, ANGLE_STREAM).random::<f64>() * 2.0 * PI;
    let m1 = gmc_measure(&phi, gamma, config.grid, Regularization::Coupled)?;
    let m2 = gmc_measure(&phi_star, gamma, config.grid, Regularization::Coupled)?;
    let h: CircleHomeo<f64> = homeo_from_measures(&m1, &m2, alpha)?;
    let w = zipper_weld(&h, config.grid)?.normalized();
    let e = welding_energies(&w)?;
    let row = SampleRow {
        seed,
        alpha,
        mass1: m1.total_mass(),
        mass2: m2.total_mass(),
        k: e.k,
        s1: e.s1,
        residual: w.residual,
        circle_distance: normalized_hausdorff(&w, circle),
        h_one: h.eval(0.0).rem_euclid(2.0 * PI) / (2.0 * PI),
    };
    Ok((row, w.curve))
}

/// Runs every sample of the configuration; a failed weld is recorded and skipped.
pub fn pipeline_zipper(config: &RunConfig) -> Result<PipelineReport, CliError> {
    let gamma = config.coupling().ok_or_else(|| CliError::Config("pipeline needs kappa or gamma".into()))?;
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(CliError::Config(format!("pipeline needs 0 < gamma < 2, got {gamma}")));
    }
    let circle = zipper_weld(&CircleHomeo::identity(config.grid), config.grid)?;
    let outcomes: Vec<_> = (0..config.samples as u64)
        .into_par_iter()
        .map(|i| {
            let seed = config.seed.wrapping_add(i);
            (seed, weld_sample(seed, gamma, config, &circle))
        })
        .collect();
    let mut report = PipelineReport { gamma, rows: Vec::new(), curves: Vec::new(), failures: Vec::new() };
    for (seed, out) in outcomes {
        match out {
            Ok((row, curve)) => {
                report.rows.push(row);
                report.curves.push(curve);
            }
            Err(e) => {
                log::warn!("sample {seed}: {e}");
                report.failures.push(SampleFailure { seed, error: e.to_string() });
            }
        }
    }
    log::info!("welded {} of {} samples at gamma = {gamma}", report.rows.len(), config.samples);
    Ok(report)
}

/// Writes `scalars.csv`, `curves/curve_<seed>.csv` and `summary.json` under `dir`.
pub fn write_dataset(report: &PipelineReport, config: &RunConfig, dir: &Path) -> Result<PipelineSummary, CliError> {
    std::fs::create_dir_all(dir.join("curves"))?;
    let mut w = csv::Writer::from_path(dir.join("scalars.csv"))?;
    w.write_record(["seed", "alpha", "mass1", "mass2", "K", "S1", "residual"])?;
    for r in &report.rows {
        w.write_record([r.seed.to_string(), fmt(r.alpha), fmt(r.mass1), fmt(r.mass2), fmt(r.k), fmt(r.s1), fmt(r.residual)])?;
    }
    w.flush()?;
    for (r, curve) in report.rows.iter().zip(&report.curves) {
        let mut w = csv::Writer::from_path(dir.join("curves").join(format!("curve_{}.csv", r.seed)))?;
        w.write_record(["index", "re", "im"])?;
        for (i, p) in curve.points.iter().enumerate() {
            w.write_record([i.to_string(), fmt(p.re), fmt(p.im)])?;
        }
        w.flush()?;
    }
    let summary = report.summary(config);
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

/// Shortest round-trip decimal in scientific notation.
fn fmt(x: f64) -> String {
    format!("{x:e}")
}
