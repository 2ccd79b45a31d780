//! `critcurve <mode> --config <path> [--out <dir>] [--jobs <k>] [--svg]`

mod config;
mod csvio;
mod modes;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sha2::{Digest, Sha256};

use crate::modes::{find_mode, mode_names, RunContext};

#[derive(Parser)]
#[command(
    name = "critcurve",
    version,
    about = "Pseudo-spectral decay and blow-up experiments for a weakly coupled damped wave system"
)]
struct Cli {
    /// Run mode; `list` prints the registered modes
    mode: String,
    /// Configuration document (critcurve-config v1)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for emitted files
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweep cells
    #[arg(long)]
    jobs: Option<usize>,
    /// Also emit phase_diagram.svg (sweep mode)
    #[arg(long)]
    svg: bool,
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();

    if cli.mode == "list" {
        for mode in modes::registry() {
            println!("{:<14} {}", mode.name(), mode.summary());
        }
        return Ok(());
    }

    let Some(mode) = find_mode(&cli.mode) else {
        return Err(format!(
            "unknown mode \"{}\"; available: {}",
            cli.mode,
            mode_names().join(", ")
        ));
    };

    let config_path = cli
        .config
        .ok_or_else(|| "--config <path> is required".to_string())?;
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| format!("cannot read {}: {e}", config_path.display()))?;
    let config_hash = {
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        format!("{:x}", hasher.finalize())
    };
    let config = config::parse_config(&text).map_err(|e| format!("config error: {e}"))?;

    if let Some(declared) = &config.mode {
        if declared != mode.name() {
            return Err(format!(
                "config declares mode \"{declared}\" but \"{}\" was requested",
                mode.name()
            ));
        }
    }

    std::fs::create_dir_all(&cli.out)
        .map_err(|e| format!("cannot create output directory {}: {e}", cli.out.display()))?;

    let jobs = cli.jobs.or(config.jobs).unwrap_or(1).max(1);
    let ctx = RunContext {
        config: &config,
        config_hash: &config_hash,
        out_dir: &cli.out,
        jobs,
        svg: cli.svg,
    };
    let emitted = mode.run(&ctx).map_err(|e| e.to_string())?;
    for path in emitted {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
