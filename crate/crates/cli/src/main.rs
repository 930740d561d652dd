//! `glp`: sample generalised Liouville processes, evaluate their transition
//! laws and run the verification suites.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glp_core::glp::Sampler;

use commands::{DensityKind, DensityQuery, Overrides};
use config::LoadedConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "glp", version, about = "Generalised Liouville process toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample paths and write them as CSV.
    Sample(Common),
    /// Evaluate a transition density or its total mass.
    Density {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = DensityKind::Joint)]
        kind: DensityKind,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: Option<f64>,
        /// State at time s, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        /// Evaluation point(s), comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
        /// Coordinate for the marginal and conditioned kinds, from 1.
        #[arg(long)]
        coord: Option<usize>,
        /// Print the total mass of the law instead.
        #[arg(long)]
        mass: bool,
    },
    /// Run a verification suite; exit 0 if every check passes, 1 otherwise.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        suite: String,
    },
    /// Sample jump times of the counting process (Poisson family).
    Jumps(Common),
    /// Write filter weights along one sampled path (Brownian family).
    Filter(Common),
    /// Validate a config and print it in normalised form.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Master,
    Markov,
    Anticipative,
}

impl From<SamplerArg> for Sampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Master => Sampler::Master,
            SamplerArg::Markov => Sampler::Markov,
            SamplerArg::Anticipative => Sampler::Anticipative,
        }
    }
}

impl Common {
    fn split(self) -> Result<(LoadedConfig, Overrides), CliError> {
        let cfg = LoadedConfig::load(&self.config)?;
        Ok((
            cfg,
            Overrides {
                seed: self.seed,
                paths: self.paths,
                out: self.out,
                sampler: self.sampler.map(Sampler::from),
            },
        ))
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Sample(c) => {
            let (cfg, o) = c.split()?;
            commands::cmd_sample(&cfg, &o)?;
        }
        Command::Density {
            config,
            kind,
            s,
            t,
            x,
            y,
            coord,
            mass,
        } => {
            let cfg = LoadedConfig::load(&config)?;
            let q = DensityQuery {
                kind,
                s,
                t,
                x,
                y,
                coord,
                mass,
            };
            commands::cmd_density(&cfg, &q)?;
        }
        Command::Verify { common, suite } => {
            let (cfg, o) = common.split()?;
            return commands::cmd_verify(&cfg, &suite, &o);
        }
        Command::Jumps(c) => {
            let (cfg, o) = c.split()?;
            commands::cmd_jumps(&cfg, &o)?;
        }
        Command::Filter(c) => {
            let (cfg, o) = c.split()?;
            commands::cmd_filter(&cfg, &o)?;
        }
        Command::Check { config } => print!("{}", LoadedConfig::load(&config)?.config.to_toml()?),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("glp: {e}");
            ExitCode::from(2)
        }
    }
}
