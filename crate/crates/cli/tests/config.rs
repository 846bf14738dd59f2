use checks::config::{Command, RunConfig};
use checks::CliError;
use std::io::Write;

#[test]
fn defaults_are_valid() {
    let cfg = RunConfig::default();
    cfg.validate().unwrap();
    assert_eq!(cfg.command, Command::Verify);
    assert_eq!(cfg.coupling(), None);
}

#[test]
fn coupling_must_match_kappa() {
    let ok = RunConfig { kappa: Some(2.0), gamma: Some(2f64.sqrt()), ..RunConfig::default() };
    ok.validate().unwrap();
    assert_eq!(RunConfig { gamma: None, ..ok.clone() }.coupling(), Some(2f64.sqrt()));
    let bad = RunConfig { kappa: Some(2.0), gamma: Some(1.5), ..RunConfig::default() };
    assert!(matches!(bad.validate(), Err(CliError::Config(_))));
    assert!(RunConfig { gamma: Some(-1.0), ..RunConfig::default() }.validate().is_err());
}

#[test]
fn sizes_and_tolerance_are_checked() {
    for cfg in [
        RunConfig { samples: 0, ..RunConfig::default() },
        RunConfig { grid: 0, ..RunConfig::default() },
        RunConfig { truncation: 0, ..RunConfig::default() },
        RunConfig { tol_scale: -1.0, ..RunConfig::default() },
        RunConfig { tol_scale: f64::NAN, ..RunConfig::default() },
    ] {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
    RunConfig { tol_scale: 0.0, ..RunConfig::default() }.validate().unwrap();
}

#[test]
fn pipeline_needs_subcritical_coupling() {
    let p = RunConfig { command: Command::Pipeline, ..RunConfig::default() };
    assert!(p.validate().is_err());
    assert!(RunConfig { gamma: Some(2.0), ..p.clone() }.validate().is_err());
    assert!(RunConfig { kappa: Some(4.5), ..p.clone() }.validate().is_err());
    RunConfig { gamma: Some(1.0), ..p }.validate().unwrap();
}

#[test]
fn toml_then_json_override() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "command = \"pipeline\"\ngamma = 0.5\nsamples = 7\nchecks = [\"witt\"]").unwrap();
    let cfg = RunConfig::load(Some(file.path()), Some(r#"{"samples": 9, "seed": 3}"#)).unwrap();
    assert_eq!(cfg.command, Command::Pipeline);
    assert_eq!(cfg.gamma, Some(0.5));
    assert_eq!((cfg.samples, cfg.seed), (9, 3));
    assert_eq!(cfg.checks, vec!["witt".to_string()]);
    assert_eq!(cfg.grid, RunConfig::default().grid);
    let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(matches!(RunConfig::load(None, Some(r#"{"sampels": 9}"#)), Err(CliError::Json(_))));
    assert!(RunConfig::load(None, Some("not json")).is_err());
}
