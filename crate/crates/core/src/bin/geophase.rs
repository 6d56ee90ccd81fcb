use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use geophase_core::commands::{run, Command};
use geophase_core::config::RunConfig;
use geophase_core::Error;

/// Geometric phases under stochastic control noise.
#[derive(Parser, Debug)]
#[command(name = "geophase", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overrides `noise.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for ensemble runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Closed-loop geometric phase without noise.
    Holonomy,
    /// One disturbed trajectory with its adiabatic evolution.
    Evolve,
    /// Monte Carlo ensemble of dressed populations.
    Ensemble,
    /// Moments and characteristic function of the phase noise.
    SdeCheck,
    /// Exact versus adiabatic fidelity over loop durations.
    VerifyAdiabatic,
    /// Plaquette curvature of the sphere fixture.
    Curvature,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Holonomy => Command::Holonomy,
            Sub::Evolve => Command::Evolve,
            Sub::Ensemble => Command::Ensemble,
            Sub::SdeCheck => Command::SdeCheck,
            Sub::VerifyAdiabatic => Command::VerifyAdiabatic,
            Sub::Curvature => Command::Curvature,
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Configuration("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Configuration(e.to_string()))?;
    }
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.noise.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    let out = config.output.dir.clone();
    let report = run(cli.command.into(), &config, &out)?;
    println!("{}", serde_json::to_string_pretty(&report.results).unwrap_or_default());
    eprintln!("wrote {} files to {}", report.outputs.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geophase: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
