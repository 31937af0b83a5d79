mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::RunConfig;

/// Travelling waves and finite-volume runs for the swarmalator hydrodynamics model.
#[derive(Parser)]
#[command(name = "swarmwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a travelling wave in the strip.
    Strip(Common),
    /// Build a rotating wave in the annulus, optionally with a sign map.
    Annulus(Common),
    /// Run the finite-volume solver from a strip wave or a snapshot.
    Simulate(Common),
    /// Tabulate wave existence over a parameter grid.
    Scan(Common),
    /// Verify a stored or freshly built profile.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Named parameter set: nsh, low-noise or large-noise.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(swarmwave::Error),
    /// Checks ran and at least one failed.
    Failed(String),
}

impl From<swarmwave::Error> for CliError {
    fn from(e: swarmwave::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    /// 0 ok, 1 configuration or input, 2 no solution, 3 blow-up,
    /// 4 verification, 5 numerical failure.
    fn exit_code(&self) -> u8 {
        use swarmwave::Error as E;
        match self {
            CliError::Config(_) => 1,
            CliError::Failed(_) => 4,
            CliError::Core(e) => match e {
                E::InvalidParams(_) | E::Domain(_) | E::Potential { .. } | E::Format(_) | E::Io(_) => 1,
                E::NoSolution { .. } => 2,
                E::BlowUp { .. } => 3,
                E::Verification(_) => 4,
                E::NoConvergence { .. } | E::Quadrature { .. } | E::Integration { .. } => 5,
            },
        }
    }

    fn report(&self) -> serde_json::Value {
        use swarmwave::Error as E;
        match self {
            CliError::Config(m) => json!({ "error": "config", "detail": m }),
            CliError::Failed(m) => json!({ "error": "verification", "detail": m }),
            CliError::Core(E::NoSolution { reason, detail }) => {
                json!({ "error": "no-solution", "reason": reason.code(), "detail": detail })
            }
            CliError::Core(E::BlowUp { time, detail }) => json!({ "error": "blow-up", "time": time, "detail": detail }),
            CliError::Core(e) => json!({ "error": "failure", "detail": e.to_string() }),
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(p) = &common.preset {
        config::Preset::parse(p)?;
        cfg.preset = Some(p.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SWARMWAVE_LOG", "warn")).init();
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&RunConfig, &std::path::Path) -> Result<(), CliError>) = match &cli.command {
        Command::Strip(c) => (c, commands::strip),
        Command::Annulus(c) => (c, commands::annulus),
        Command::Simulate(c) => (c, commands::simulate),
        Command::Scan(c) => (c, commands::scan),
        Command::Check(c) => (c, commands::check),
    };
    let result = load(common).and_then(|cfg| {
        std::fs::create_dir_all(&common.out)?;
        run(&cfg, &common.out)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            println!("{}", e.report());
            log::debug!("{e:?}");
            ExitCode::from(e.exit_code())
        }
    }
}
