use checks::config::RunConfig;
use checks::manifest::{Measurement, Relation, RunManifest, SCHEMA_VERSION};
use checks::suite::{run_check, select, verify_suite, CHECKS};
use checks::CliError;
use std::process::Command;

fn only(ids: &[&str]) -> RunConfig {
    RunConfig { checks: ids.iter().map(|s| s.to_string()).collect(), ..RunConfig::default() }
}

#[test]
fn selection_by_id_and_name() {
    assert_eq!(select(&RunConfig::default()).unwrap().len(), 14);
    assert_eq!(select(&only(&["all"])).unwrap().len(), 14);
    let picked: Vec<u32> = select(&only(&["ghost-sum", "5", "6"])).unwrap().iter().map(|c| c.id).collect();
    assert_eq!(picked, vec![5, 6]);
    assert!(matches!(select(&only(&["nope"])), Err(CliError::UnknownCheck(_))));
    let names: std::collections::HashSet<_> = CHECKS.iter().map(|c| c.name).collect();
    assert_eq!(names.len(), CHECKS.len());
}

#[test]
fn measurement_relations() {
    assert!(Measurement::below("x", 0.5, 1.0, 1.0).passed);
    assert!(!Measurement::below("x", 0.5, 1.0, 0.4).passed);
    assert!(!Measurement::below("x", 0.0, 1.0, 0.0).passed);
    assert!(Measurement::above("p", 0.2, 0.01, 1.0).passed);
    assert!(!Measurement::above("p", 0.2, 0.01, 0.0).passed);
    assert!(Measurement::failures("n", 0, 1.0).passed);
    assert!(!Measurement::failures("n", 1, 1.0).passed);
    assert_eq!(Measurement::failures("n", 0, 1.0).relation, Relation::Below);
}

#[test]
fn zero_tolerance_fails_with_residuals() {
    let m = verify_suite(&RunConfig { tol_scale: 0.0, ..only(&["ghost-kernel", "ghost-sum"]) }).unwrap();
    assert_eq!(m.failed(), 2);
    assert_eq!(m.exit_code(), 2);
    for c in &m.checks {
        assert!(c.error.is_none());
        assert!(c.measurements.iter().all(|x| x.value.is_finite() && !x.passed));
    }
    let line = m.checks[0].to_string();
    assert!(line.starts_with("[FAIL]  5 ghost-kernel"), "{line}");
}

#[test]
fn manifest_is_deterministic_modulo_timing() {
    let cfg = only(&["ghost-kernel", "ghost-sum"]);
    let a = verify_suite(&cfg).unwrap();
    let b = verify_suite(&cfg).unwrap();
    assert_eq!(a.failed(), 0);
    assert_eq!(a.schema_version, SCHEMA_VERSION);
    assert_eq!(a.timing.check_seconds.len(), 2);
    assert_eq!(a.without_timing().to_json().unwrap(), b.without_timing().to_json().unwrap());
    let back: RunManifest = serde_json::from_str(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn exit_code_is_capped() {
    let spec = &CHECKS[4];
    let failing = run_check(spec, &RunConfig { tol_scale: 0.0, ..RunConfig::default() });
    let mut m = RunManifest::new(RunConfig::default());
    for _ in 0..200 {
        m.push(failing.clone(), 0.0);
    }
    assert_eq!(m.exit_code(), 125);
}

#[test]
fn binary_exit_code_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_confweld"))
        .args(["verify", "--check", "ghost-kernel", "--check", "ghost-sum", "--tol-scale", "0"])
        .env("CONFWELD_OUT", dir.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[FAIL]")).count(), 2);
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.failed(), 2);
    assert_eq!(m.config.tol_scale, 0.0);

    let ok = Command::new(env!("CARGO_BIN_EXE_confweld"))
        .args(["verify", "--check", "6"])
        .env("CONFWELD_OUT", dir.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn binary_rejects_bad_configuration() {
    let out = Command::new(env!("CARGO_BIN_EXE_confweld"))
        .args(["pipeline", "--gamma", "1.5", "--kappa", "2"])
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("kappa"));
}
