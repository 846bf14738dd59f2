use checks::config::{Command, RunConfig};
use checks::{pipeline_zipper, verify_suite, write_dataset, CliError};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "confweld", version, about = "Verification suite and random-welding pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Option<Sub>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON object merged over the configuration file.
    #[arg(long = "override", global = true)]
    json_override: Option<String>,
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    modes: Option<usize>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Check id or name, repeatable; `all` runs every check.
    #[arg(long = "check", global = true)]
    checks: Vec<String>,
    #[arg(long = "tol-scale", global = true)]
    tol_scale: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Run the verification checks and write `manifest.json`.
    Verify,
    /// Sample random weldings and write curves, scalars and a summary.
    Pipeline,
}

fn config_from(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), cli.json_override.as_deref())?;
    match cli.command {
        Some(Sub::Verify) => cfg.command = Command::Verify,
        Some(Sub::Pipeline) => cfg.command = Command::Pipeline,
        None => {}
    }
    if cli.kappa.is_some() || cli.gamma.is_some() {
        cfg.kappa = cli.kappa;
        cfg.gamma = cli.gamma;
    }
    cfg.seed = cli.seed.unwrap_or(cfg.seed);
    cfg.samples = cli.samples.unwrap_or(cfg.samples);
    cfg.modes = cli.modes.unwrap_or(cfg.modes);
    cfg.grid = cli.grid.unwrap_or(cfg.grid);
    cfg.tol_scale = cli.tol_scale.unwrap_or(cfg.tol_scale);
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if !cli.checks.is_empty() {
        cfg.checks = cli.checks.clone();
    }
    let cfg = cfg.with_env_out();
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let cfg = config_from(cli)?;
    match cfg.command {
        Command::Verify => {
            let manifest = verify_suite(&cfg)?;
            for c in &manifest.checks {
                println!("{c}");
            }
            let path = cfg.out.join("manifest.json");
            manifest.write(&path)?;
            println!("{} of {} checks failed; manifest at {}", manifest.failed(), manifest.checks.len(), path.display());
            Ok(manifest.exit_code() as u8)
        }
        Command::Pipeline => {
            let report = pipeline_zipper(&cfg)?;
            let summary = write_dataset(&report, &cfg, &cfg.out)?;
            println!(
                "{} of {} samples welded; median residual {:?}; h(1) KS p = {}",
                summary.succeeded, summary.requested, summary.residual_median, summary.rotation_ks.p_value
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(125)
        }
    }
}
