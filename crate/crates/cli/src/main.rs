use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phasecal_cli::{runners, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "phasecal", version, about = "Phase-offset calibration and localization experiments")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Configuration override, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a capture and its ground-truth sidecar.
    Simulate,
    /// Localization bound versus offset spread and array size.
    CrlbSweep,
    /// Ambiguity maps, cuts and PMSR for the ideal and impaired cases.
    Saf,
    /// PMSR versus offset spread over several seeds.
    PmsrSweep,
    /// Calibrate a capture against its truth and localize at each stage.
    CalibrateLocalize {
        #[arg(long)]
        csi: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Print a summary of a capture or truth file.
    Inspect { path: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Inspect { path } = &cli.command {
        print!("{}", runners::run_inspect(path)?);
        return Ok(());
    }
    let mut overrides = cli.overrides;
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(dir) = &cli.out_dir {
        let dir = dir.to_str().ok_or_else(|| CliError::Usage("out-dir must be valid UTF-8".into()))?;
        overrides.push(format!("out_dir={}", toml::Value::String(dir.to_string())));
    }
    let config = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    let files = match &cli.command {
        Command::Simulate => runners::run_simulate(&config)?,
        Command::CrlbSweep => runners::run_crlb_sweep(&config)?,
        Command::Saf => runners::run_saf(&config)?,
        Command::PmsrSweep => runners::run_pmsr_sweep(&config)?,
        Command::CalibrateLocalize { csi, truth } => runners::run_calibrate_localize(&config, csi, truth)?,
        Command::Inspect { .. } => unreachable!("handled above"),
    };
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
