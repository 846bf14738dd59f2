//! The verification suite: one check per acceptance criterion.

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::manifest::{CheckRecord, Measurement, RunManifest};
use crate::pipeline::pipeline_zipper;
use confweld::beltrami::{ghost_sum_check, iota_pullback, kernel_diagonal_fit, BeltramiSpec};
use confweld::conformal::{schwarzian, Constants, PowerSeriesMap};
use confweld::curve::sample_closed;
use confweld::fields::{gmc_measure, liouville_variation, sample_field_stream, FieldVariant, FourierField, Regularization, Side, ZeroMode};
use confweld::quadrature::Annulus;
use confweld::sle::{box_dimension, brownian_local_time_pair, loewner_trace, sample_driving, trace_ensemble, LocalTimeOptions};
use confweld::welding::{normalized_hausdorff, riemann_maps_of_curve, tt06_residual, vw_residual, welding_of_interior_map, zipper_weld, Composition, Interpolation, WeldOptions};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::time::{Instant, SystemTime, UNIX_EPOCH};
use virasoro::checks::{adjoint_relations, gram_consistency, level2_det_at, virasoro_relations, witt_relations, RelationReport};
use virasoro::ops::Engine;
use virasoro::Scalar;

#[derive(Default)]
struct Outcome {
    measurements: Vec<Measurement>,
    detail: Vec<String>,
}

type CheckFn = fn(&RunConfig) -> Result<Outcome, CliError>;

pub struct CheckSpec {
    pub id: u32,
    pub name: &'static str,
    /// Wall-clock allowance on one core with optimised builds.
    pub budget_seconds: f64,
    run: CheckFn,
}

pub static CHECKS: [CheckSpec; 14] = [
    CheckSpec { id: 1, name: "witt", budget_seconds: 5.0, run: witt },
    CheckSpec { id: 2, name: "virasoro", budget_seconds: 30.0, run: virasoro_check },
    CheckSpec { id: 3, name: "adjoint", budget_seconds: 30.0, run: adjoint },
    CheckSpec { id: 4, name: "gram", budget_seconds: 60.0, run: gram },
    CheckSpec { id: 5, name: "ghost-kernel", budget_seconds: 5.0, run: ghost_kernel },
    CheckSpec { id: 6, name: "ghost-sum", budget_seconds: 120.0, run: ghost_sum },
    CheckSpec { id: 7, name: "viklund-wang", budget_seconds: 60.0, run: viklund_wang },
    CheckSpec { id: 8, name: "liouville-variation", budget_seconds: 60.0, run: liouville },
    CheckSpec { id: 9, name: "tt06", budget_seconds: 300.0, run: tt06 },
    CheckSpec { id: 10, name: "welding-roundtrip", budget_seconds: 180.0, run: roundtrip },
    CheckSpec { id: 11, name: "gmc-mass", budget_seconds: 120.0, run: gmc_mass },
    CheckSpec { id: 12, name: "sle-dimension", budget_seconds: 600.0, run: sle_dimension },
    CheckSpec { id: 13, name: "local-time", budget_seconds: 600.0, run: local_time },
    CheckSpec { id: 14, name: "pipeline", budget_seconds: 600.0, run: pipeline_sanity },
];

/// Checks named in the configuration, by id or name; all of them when none are named.
pub fn select(config: &RunConfig) -> Result<Vec<&'static CheckSpec>, CliError> {
    if config.checks.is_empty() || config.checks.iter().any(|c| c == "all") {
        return Ok(CHECKS.iter().collect());
    }
    let mut out: Vec<&CheckSpec> = Vec::new();
    for key in &config.checks {
        let spec = CHECKS
            .iter()
            .find(|c| c.name == key || c.id.to_string() == *key)
            .ok_or_else(|| CliError::UnknownCheck(key.clone()))?;
        if !out.iter().any(|c| c.id == spec.id) {
            out.push(spec);
        }
    }
    out.sort_by_key(|c| c.id);
    Ok(out)
}

pub fn run_check(spec: &CheckSpec, config: &RunConfig) -> CheckRecord {
    log::info!("check {} ({})", spec.id, spec.name);
    let (measurements, detail, error) = match (spec.run)(config) {
        Ok(o) => (o.measurements, o.detail, None),
        Err(e) => (Vec::new(), Vec::new(), Some(e.to_string())),
    };
    let passed = error.is_none() && !measurements.is_empty() && measurements.iter().all(|m| m.passed);
    CheckRecord { id: spec.id, name: spec.name.into(), passed, measurements, error, detail }
}

/// Runs the selected checks in order; a failing check is recorded and the suite continues.
pub fn verify_suite(config: &RunConfig) -> Result<RunManifest, CliError> {
    config.validate()?;
    let specs = select(config)?;
    let mut manifest = RunManifest::new(config.clone());
    manifest.timing.started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let start = Instant::now();
    for spec in specs {
        let t = Instant::now();
        let record = run_check(spec, config);
        if !record.passed {
            log::warn!("check {} ({}) failed", spec.id, spec.name);
        }
        manifest.push(record, t.elapsed().as_secs_f64());
    }
    manifest.timing.total_seconds = start.elapsed().as_secs_f64();
    Ok(manifest)
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn relation_outcome(name: &str, r: RelationReport, s: f64) -> Outcome {
    Outcome {
        measurements: vec![Measurement::failures(name, r.failures.len(), s), Measurement::above("relations checked", r.checked as f64, 0.0, 1.0)],
        detail: r.failures.into_iter().take(5).collect(),
    }
}

fn witt(cfg: &RunConfig) -> Result<Outcome, CliError> {
    Ok(relation_outcome("failed Witt relations", witt_relations(&Engine::new(cfg.truncation), 4, 4), cfg.tol_scale))
}

fn virasoro_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    Ok(relation_outcome("failed Virasoro relations", virasoro_relations(&Engine::new(cfg.truncation), 4, 4), cfg.tol_scale))
}

fn adjoint(cfg: &RunConfig) -> Result<Outcome, CliError> {
    Ok(relation_outcome("failed adjoint relations", adjoint_relations(&Engine::new(cfg.truncation), 3, 3, 3), cfg.tol_scale))
}

/// Level-two Kac charges `(1 + r) gamma / 2 + (1 + s) 2 / gamma` and their reflections.
fn level2_roots(g: &Scalar, g_inv: &Scalar) -> Vec<Scalar> {
    let half_g = g * &Scalar::from_frac(1, 2);
    let two_ginv = g_inv * &Scalar::from_int(2);
    let mut out = Vec::new();
    for (r, s) in [(1i64, 1i64), (1, 2), (2, 1)] {
        for sign in [-1i64, 1] {
            out.push(&half_g.scale_int(1 + sign * r) + &two_ginv.scale_int(1 + sign * s));
        }
    }
    out
}

fn gram(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = cfg.tol_scale;
    let mut out = relation_outcome("failed Gram constants", gram_consistency(&Engine::new(cfg.truncation), 4), s);
    let sqrt2 = Scalar::sqrt2();
    let cases = [
        (Scalar::one(), Scalar::one()),
        (sqrt2.clone(), &sqrt2 * &Scalar::from_frac(1, 2)),
        (Scalar::from_frac(2, 3), Scalar::from_frac(3, 2)),
    ];
    let (mut missed, mut spurious) = (0, 0);
    for (g, gi) in cases {
        let q = &(&g * &Scalar::from_frac(1, 2)) + &(&gi * &Scalar::from_int(2));
        for root in level2_roots(&g, &gi) {
            if !level2_det_at(&q, &root).is_zero() {
                missed += 1;
                out.detail.push(format!("determinant nonzero at Q = {q}, alpha = {root}"));
            }
        }
        let off = &q + &(&Scalar::i() * &Scalar::from_frac(1, 10));
        if level2_det_at(&q, &off).is_zero() {
            spurious += 1;
        }
    }
    out.measurements.push(Measurement::failures("Kac roots with nonzero determinant", missed, s));
    out.measurements.push(Measurement::failures("non-roots with zero determinant", spurious, s));
    Ok(out)
}

fn ghost_kernel(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let psi = PowerSeriesMap::interior(&[c(0.1, 0.0)]).with_domain_radius(2.0);
    let (mut ez, mut ezeta, mut ecomb) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..16 {
        let z = C::from_polar(0.2 + 0.02 * k as f64, 0.4 * k as f64);
        let (fz, fzeta) = kernel_diagonal_fit(&psi, z, 0.05, 64)?;
        let (a, sch) = schwarzian(&psi, z)?;
        let pz = -sch * (2.0 / 3.0) + a * a * 0.75;
        let pzeta = -sch * (5.0 / 6.0) - a * a * 1.5;
        ez = ez.max((fz - pz).norm() / pz.norm());
        ezeta = ezeta.max((fzeta - pzeta).norm() / pzeta.norm());
        ecomb = ecomb.max((fz * 2.0 + fzeta + sch * (13.0 / 6.0)).norm() / sch.norm());
    }
    let s = cfg.tol_scale;
    Ok(Outcome {
        measurements: vec![
            Measurement::below("max rel err, z-derivative", ez, 1e-8, s),
            Measurement::below("max rel err, zeta-derivative", ezeta, 1e-8, s),
            Measurement::below("max rel err, -13/6 S combination", ecomb, 1e-8, s),
        ],
        ..Outcome::default()
    })
}

fn ghost_sum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = PowerSeriesMap::exterior(c(1.0, 0.0), c(0.0, 0.0), &[c(0.2, 0.0)]);
    let mu = BeltramiSpec::laurent(2)?.scaled(c(0.3, 0.0));
    let r = ghost_sum_check(&g, &mu, 40)?;
    Ok(Outcome {
        measurements: vec![Measurement::below("|mode sum - Schwarzian pairing|", (r.lhs - r.rhs).norm(), 1e-4, cfg.tol_scale)],
        detail: vec![format!("mode sum {}, pairing {}", r.lhs, r.rhs)],
    })
}

fn harmonic_field(coeffs: &[C]) -> impl Fn(C) -> f64 + Sync + '_ {
    move |w: C| coeffs.iter().rev().fold(c(0.0, 0.0), |p, a| p * w + a).re
}

fn viklund_wang(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fields: [&[C]; 3] = [&[c(0.0, 0.0), c(2.0, 0.0)], &[c(0.3, 0.0), c(0.2, -0.1), c(0.0, 0.05), c(0.04, 0.0), c(-0.02, 0.03)], &[]];
    let curves: [&[C]; 5] = [&[], &[c(0.1, 0.0)], &[c(0.1, 0.1), c(0.0, -0.05)], &[c(0.0, 0.0), c(0.2, 0.0)], &[c(0.0, 0.0), c(0.0, 0.0), c(0.1, 0.0)]];
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for coeffs in curves {
        let w = welding_of_interior_map(&PowerSeriesMap::interior(coeffs), 512)?;
        for field in fields {
            for q in [1.2, 2.0, 2.5] {
                let r = vw_residual(&w, harmonic_field(field), q, 1024)?.residual();
                if r > worst {
                    worst = r;
                    detail = vec![format!("worst case: curve {coeffs:?}, field {field:?}, Q = {q}")];
                }
            }
        }
    }
    Ok(Outcome { measurements: vec![Measurement::below("max |lhs - rhs|", worst, 1e-5, cfg.tol_scale)], detail })
}

fn liouville(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = cfg.tol_scale;
    let field = FourierField::new(FieldVariant::NeumannDot, 0.3, vec![c(0.2, -0.1), c(0.05, 0.08), c(-0.04, 0.0), c(0.01, 0.02)]);
    let mu = iota_pullback(&BeltramiSpec::laurent(2)?);
    let mut worst = 0.0f64;
    for tau in [c(1.0, 0.0), c(0.0, 1.0)] {
        worst = worst.max(liouville_variation(&field, &mu, Side::Interior, tau, 1e-4, 2.0, 1024)?.relative_error());
    }
    let rot = BeltramiSpec::new(Annulus::new(0.2, Some(0.6)), 0.5, |z: C| z / z.conj() * 0.5);
    let v = liouville_variation(&field, &rot, Side::Interior, c(1.0, 0.3), 1e-4, 2.0, 1024)?;
    Ok(Outcome {
        measurements: vec![
            Measurement::below("max rel err, pulled-back Laurent mode", worst, 1e-3, s),
            Measurement::below("|predicted|, rotation generator", v.predicted.abs(), 1e-10, s),
            Measurement::below("|finite difference|, rotation generator", v.finite_difference.abs(), 1e-8, s),
        ],
        ..Outcome::default()
    })
}

fn tt06(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let k = Constants::from_kappa(2.0)?;
    let opts = WeldOptions { modes: 48, tol: 1e-11 };
    let w = welding_of_interior_map(&PowerSeriesMap::interior(&[c(0.1, 0.0)]), 256)?;
    let (mut right, mut left, mut smallest) = (0.0f64, 0.0f64, f64::INFINITY);
    for phase in [0.0, 1.0] {
        let mu = BeltramiSpec::laurent(2)?.scaled(C::from_polar(0.3, phase));
        let r = tt06_residual(&w, &iota_pullback(&mu), Composition::Right, 1e-4, &k, opts)?;
        let l = tt06_residual(&w, &mu, Composition::Left, 1e-4, &k, opts)?;
        right = right.max(r.residual());
        left = left.max(l.residual());
        smallest = smallest.min(r.predicted.norm()).min(l.predicted.norm());
    }
    let s = cfg.tol_scale;
    Ok(Outcome {
        measurements: vec![
            Measurement::below("max residual, right composition", right, 1e-3, s),
            Measurement::below("max residual, left composition", left, 1e-3, s),
            Measurement::above("min |predicted|", smallest, 1e-2, 1.0),
        ],
        ..Outcome::default()
    })
}

fn roundtrip(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = 2048;
    let curves = [vec![c(0.1, 0.0)], vec![c(0.0, 0.15), c(0.05, 0.0)], vec![c(0.1, -0.1), c(0.0, 0.0), c(0.05, 0.0)]];
    let dists: Vec<f64> = curves
        .par_iter()
        .map(|coeffs| -> Result<f64, CliError> {
            let f = PowerSeriesMap::interior(coeffs);
            let curve = sample_closed(n, |t: f64| f.horner(C::from_polar(1.0, t))[0])?;
            let w = riemann_maps_of_curve(&curve, n)?;
            let z = zipper_weld(&w.h.clone().with_interpolation(Interpolation::MonotoneCubic), n)?;
            Ok(normalized_hausdorff(&z, &w))
        })
        .collect::<Result<_, _>>()?;
    let worst = dists.iter().copied().fold(0.0, f64::max);
    Ok(Outcome {
        measurements: vec![Measurement::below("max normalised Hausdorff distance", worst, 1e-2, cfg.tol_scale)],
        detail: vec![format!("per curve: {dists:?}")],
    })
}

fn gmc_mass(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let gamma = 1.0;
    let masses: Vec<f64> = (0..cfg.gmc_samples as u64)
        .into_par_iter()
        .map(|stream| -> Result<f64, CliError> {
            let f = sample_field_stream::<f64>(FieldVariant::NeumannDot, 1024, cfg.seed, stream, ZeroMode::None)?;
            Ok(gmc_measure(&f, gamma, 1024, Regularization::Coupled)?.total_mass())
        })
        .collect::<Result<_, _>>()?;
    let mean = masses.iter().sum::<f64>() / masses.len() as f64;
    let target = 2.0 * PI * 2f64.powf(-gamma * gamma / 4.0);
    Ok(Outcome {
        measurements: vec![Measurement::below("|mean / 2 pi 2^(-1/4) - 1|", (mean / target - 1.0).abs(), 0.05, cfg.tol_scale)],
        detail: vec![format!("mean mass {mean} over {} fields, target {target}", masses.len())],
    })
}

fn log_scales(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| hi * (lo / hi).powf(i as f64 / (n - 1) as f64)).collect()
}

fn sle_dimension(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seeds: Vec<u64> = (0..cfg.traces as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let dt = 1.0 / cfg.trace_steps as f64;
    let scales = log_scales(0.5, 0.01, 8);
    let dims: Vec<f64> = trace_ensemble(2.0, cfg.trace_steps, dt, &seeds)
        .into_iter()
        .map(|r| -> Result<f64, CliError> { Ok(box_dimension(&r?.curve, &scales)?) })
        .collect::<Result<_, _>>()?;
    let mean = dims.iter().sum::<f64>() / dims.len() as f64;
    Ok(Outcome {
        measurements: vec![Measurement::below("|mean box dimension - 1.25|", (mean - 1.25).abs(), 0.15, cfg.tol_scale)],
        detail: vec![format!("mean {mean} over {} traces", dims.len())],
    })
}

fn local_time(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let trace = loewner_trace(&sample_driving(2.0, 4000, 2.5e-4, cfg.seed)?)?.refined(0.005)?;
    let curve = trace.curve;
    let x = curve.points[curve.len() / 2];
    let opts = LocalTimeOptions::<f64> { horizon: 0.1, eps: 0.05, alpha: 1.25, n_mc: cfg.local_time_paths, dt: 2.5e-5, seed: cfg.seed };
    let pair = brownian_local_time_pair(&curve, x, opts)?;
    let positive = pair.coarse.positive_fraction.min(pair.fine.positive_fraction);
    Ok(Outcome {
        measurements: vec![
            Measurement::below("epsilon-stability ratio", pair.stability, 0.25, cfg.tol_scale),
            Measurement::above("min on-curve positivity fraction", positive, 0.95, cfg.tol_scale),
        ],
        detail: vec![format!("coarse {:?}, fine {:?}", pair.coarse, pair.fine)],
    })
}

fn pipeline_sanity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let run = RunConfig { command: Command::Pipeline, gamma: Some(1e-8), kappa: None, ..cfg.clone() };
    let report = pipeline_zipper(&run)?;
    let ks = report.rotation_ks();
    let s = cfg.tol_scale;
    Ok(Outcome {
        measurements: vec![
            Measurement::failures("failed samples", report.failures.len(), s),
            Measurement::below("max Hausdorff distance to the circle", report.max_circle_distance().unwrap_or(f64::INFINITY), 1e-2, s),
            Measurement::above("KS p-value of h(1)", ks.p_value, 0.01, s),
        ],
        detail: vec![format!("{} samples, KS statistic {}", report.rows.len(), ks.statistic)],
    })
}
