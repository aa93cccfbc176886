//! `cgfield` — runs the verification suites and writes their reports.
//!
//! Exit status: 0 when every check passes, 1 when any check fails,
//! 2 on configuration errors, 3 on i/o errors.

use cgfield::config::{Command as SuiteCommand, ConfigError, RunConfig};
use cgfield::suites;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cgfield",
    about = "Complex-geometry quantum-field toolkit: gamma algebra, manifold curvature, \
             physical regions, space-time identities and the motion-equation expansion",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,

    /// TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for report.json and sweep/term artifacts
    /// (default: the config's output dir, else `out/`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the randomised checks (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Multiplier applied to every numeric tolerance (overrides the config).
    #[arg(long = "tol-scale", global = true)]
    tol_scale: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum CliCommand {
    /// Exact gamma-matrix identity table (74 checks).
    GammaSelftest,
    /// Connection/curvature/Ricci checks on complex metric fields.
    Manifold,
    /// Physical-region determinant, classification, colour rank.
    Region,
    /// Space-time grid identities (Poisson, wave, Lagrangian, currents).
    Fields,
    /// Motion-equation expansion verification along world-line paths.
    Appendix,
    /// Every suite in order.
    All,
}

impl From<CliCommand> for SuiteCommand {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::GammaSelftest => SuiteCommand::GammaSelftest,
            CliCommand::Manifold => SuiteCommand::Manifold,
            CliCommand::Region => SuiteCommand::Region,
            CliCommand::Fields => SuiteCommand::Fields,
            CliCommand::Appendix => SuiteCommand::Appendix,
            CliCommand::All => SuiteCommand::All,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    let artifacts = suites::run(cli.command.into(), &cfg);
    print!("{}", artifacts.report.render_table());

    let out_dir = cfg
        .output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    match suites::write_artifacts(&artifacts, &out_dir) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("i/o error: {e}");
            return ExitCode::from(3);
        }
    }

    if artifacts.report.has_failures() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    RunConfig::load(cli.config.as_deref())?.with_overrides(cli.seed, cli.tol_scale, cli.out.clone())
}
