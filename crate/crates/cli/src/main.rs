use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use dunkl_core::config::{CheckName, ConfigError, RunConfig, Section};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(
    name = "dunkl",
    version,
    about = "Dunkl kernels, BMO estimates and commutator checks at desk scale"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML or JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides every sampler seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Treat per-row numerical failures and unsupported checks as errors.
    #[arg(long, global = true)]
    strict: bool,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Group elements and orbits.
    Group,
    /// Ball and orbit-ball volumes.
    Measure,
    /// Heat or Riesz kernel values on a list of pairs.
    Kernel,
    /// BMO oscillation estimates of a symbol over a ball family.
    Bmo,
    /// Commutator norm estimates against the two BMO estimates.
    Commutator,
    /// Run every configured check; exit 0 iff all pass.
    VerifyAll,
    /// Print the resolved configuration as TOML.
    Config,
}

/// Everything a subcommand needs besides the configuration itself.
pub struct RunContext {
    pub out: PathBuf,
    pub base: PathBuf,
    pub strict: bool,
}

fn load(cli: &Cli) -> Result<(RunConfig, PathBuf), ConfigError> {
    let (mut cfg, base) = match &cli.config {
        Some(p) => (
            RunConfig::from_path(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (RunConfig::default(), PathBuf::new()),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.to_string_lossy().into_owned();
    }
    let sections: Vec<Section> = match cli.command {
        Command::Group => vec![Section::Orbits],
        Command::Measure => vec![Section::Measure],
        Command::Kernel => vec![Section::Kernel],
        Command::Bmo => vec![Section::Bmo],
        Command::Commutator => vec![Section::Commutator],
        Command::VerifyAll if cfg.verify.checks.contains(&CheckName::Commutator) => {
            vec![Section::Verify, Section::Commutator]
        }
        Command::VerifyAll => vec![Section::Verify],
        Command::Config => Section::ALL.to_vec(),
    };
    cfg.validate_for(&sections)?;
    Ok((cfg.resolved(), base))
}

fn run(cli: &Cli, cfg: &RunConfig, base: PathBuf) -> Result<bool> {
    if let Some(k) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    let ctx = RunContext {
        out: PathBuf::from(&cfg.out),
        base,
        strict: cli.strict,
    };
    if !matches!(cli.command, Command::Config) {
        std::fs::create_dir_all(&ctx.out).with_context(|| format!("cannot create {}", ctx.out.display()))?;
    }
    match cli.command {
        Command::Group => commands::group(cfg, &ctx),
        Command::Measure => commands::measure(cfg, &ctx),
        Command::Kernel => commands::kernel(cfg, &ctx),
        Command::Bmo => commands::bmo(cfg, &ctx),
        Command::Commutator => commands::commutator(cfg, &ctx),
        Command::VerifyAll => commands::verify_all(cfg, &ctx),
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, base) = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg, base) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
