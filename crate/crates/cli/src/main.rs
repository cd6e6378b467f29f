use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dgms_cli::app::{execute, Command};
use dgms_cli::config::StudyKind;
use dgms_cli::{CliError, StudyConfig};

/// Discontinuous Galerkin multiscale studies.
#[derive(Parser)]
#[command(name = "dgms", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Configuration file, `key = value` per line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for corrector computation.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Allow global corrector solves above the size budget.
    #[arg(long, global = true)]
    force_budget: bool,

    /// Corrector cache directory.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,

    /// Extra `key=value` settings applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Fine-scale reference solve.
    Reference,
    /// Multiscale solve on the first coarse level.
    Msfem,
    /// Error rates over the coarse levels.
    Convergence,
    /// Errors over the localization constants.
    Localization,
    /// Corrector decay away from its element.
    Decay,
    /// Goal-oriented error bounds.
    Qoi,
    /// Invariant suite.
    Verify,
}

fn configure(cli: &Cli) -> Result<StudyConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set expects key=value, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(c) = &cli.cache {
        cfg.cache = Some(c.clone());
    }
    cfg.force_budget |= cli.force_budget;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Reference => Command::Study(StudyKind::Reference),
        Cmd::Msfem => Command::Study(StudyKind::Msfem),
        Cmd::Convergence => Command::Study(StudyKind::Convergence),
        Cmd::Localization => Command::Study(StudyKind::Localization),
        Cmd::Decay => Command::Study(StudyKind::Decay),
        Cmd::Qoi => Command::Study(StudyKind::Qoi),
        Cmd::Verify => Command::Verify,
    };
    let result = configure(&cli).and_then(|cfg| execute(command, &cfg));
    match result {
        Ok(report) => {
            print!("{}", report.text);
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
