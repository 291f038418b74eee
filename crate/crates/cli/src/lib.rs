//! Command-line driver for `chiral-core`.
//!
//! Exit codes: 0 success, 2 configuration or I/O error, 3 numerical failure,
//! 4 reproduction verdict failed.

pub mod commands;
pub mod config;
pub mod output;
pub mod reproduce;

use std::path::PathBuf;

use chiral_core::dynamics::DynamicsError;
use chiral_core::ensemble::EnsembleError;
use chiral_core::model::{CouplingConvention, ModelError};
use chiral_core::potentials::PotentialError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
            Self::Acceptance(_) => 4,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidConfig(_) | DynamicsError::Model(_) => Self::Config(e.to_string()),
            DynamicsError::Singularity { .. } | DynamicsError::StepUnderflow { .. } => Self::Numerical(e.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::Dynamics(d) => d.into(),
            EnsembleError::Realization { .. } => Self::Numerical(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::NoConvergence { .. } => Self::Numerical(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "chiral", version, about = "Chiral molecule dynamics, spectra and parity-odd potentials")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for environment sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of ensemble realizations.
    #[arg(long = "n", global = true)]
    pub n: Option<usize>,
    /// Number of environment molecules.
    #[arg(long, global = true)]
    pub n_env: Option<usize>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub t_final: Option<f64>,
    /// `hamiltonian` or `paper`.
    #[arg(long, global = true)]
    pub convention: Option<CouplingConvention>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for ensembles; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormalismArg {
    Amplitude,
    Classical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Role {
    /// The central molecule in the mean field of the environment.
    System,
    /// One environment molecule in the field of the central molecule.
    Environment,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one system-plus-environment trajectory.
    Simulate {
        #[arg(long, value_enum)]
        formalism: Option<FormalismArg>,
        /// Which seeded environment draw to use when initial conditions are
        /// not given in the configuration.
        #[arg(long, default_value_t = 0)]
        realization: usize,
    },
    /// Average Z(t) over randomly initialized environments.
    Ensemble {
        /// Time-average window `LO,HI`; defaults to `[0, t_final]`.
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<f64>>,
    },
    /// Compare a degenerate (ε=0) and a biased (ε=50) environment.
    #[command(name = "reproduce-fig3")]
    ReproduceFig3 {
        /// Also sweep initial population, environment size, run length and
        /// coupling convention.
        #[arg(long)]
        sweep: bool,
        #[arg(long, value_delimiter = ',')]
        sweep_z0: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        sweep_n_env: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        sweep_t_final: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        sweep_conventions: Option<Vec<CouplingConvention>>,
        /// Realizations per sweep point; defaults to the main ensemble size.
        #[arg(long)]
        sweep_n: Option<usize>,
    },
    /// Enantiomer energies of a mean-field two-level block.
    Spectrum {
        #[arg(long, value_enum, default_value = "system")]
        role: Role,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, visible_alias = "eps", allow_hyphen_values = true)]
        epsilon: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Environment populations seen by the central molecule.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        env_z: Vec<f64>,
        /// Central population seen by an environment molecule.
        #[arg(long, allow_hyphen_values = true)]
        system_z: Option<f64>,
        /// Tabulate against the coupling: `LO,HI,POINTS`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        scan_lambda: Option<Vec<f64>>,
    },
    /// Tabulate parity-odd potentials.
    Potential {
        #[command(subcommand)]
        kind: PotentialCmd,
    },
    /// Classify an interaction by its parity and time-reversal behaviour.
    Classify {
        #[arg(long, requires = "time_reversal", conflicts_with = "interaction")]
        parity: Option<chiral_core::potentials::Parity>,
        #[arg(long, visible_alias = "time", requires = "parity")]
        time_reversal: Option<chiral_core::potentials::Parity>,
        #[arg(long, value_enum)]
        interaction: Option<InteractionArg>,
    },
    /// Time-averaged Z and its standard error against ensemble size.
    Convergence {
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
        n_list: Vec<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InteractionArg {
    WeakNeutralCurrent,
    AxionExchange,
    MixedVacuumPolarization,
}

#[derive(Debug, Args)]
pub struct RadiusArgs {
    /// Radii in units of 1/m_e.
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    /// Log-spaced grid `LO,HI,POINTS` in units of 1/m_e.
    #[arg(long, value_delimiter = ',')]
    pub r_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct PotentialArgs {
    #[arg(long)]
    pub z_protons: Option<u32>,
    #[arg(long)]
    pub n_neutrons: Option<u32>,
    #[arg(long)]
    pub sin2_theta_w: Option<f64>,
    /// Axion-like particle mass, same units as m_e.
    #[arg(long)]
    pub m_phi: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum PotentialCmd {
    /// The dimensionless loop integral I(r).
    IIntegral {
        #[command(flatten)]
        radii: RadiusArgs,
    },
    /// Long-range part of the mixed vacuum-polarization potential.
    Vacpol {
        #[command(flatten)]
        radii: RadiusArgs,
        #[command(flatten)]
        params: PotentialArgs,
    },
    /// Axion-exchange radial profile.
    Axion {
        #[command(flatten)]
        radii: RadiusArgs,
        #[command(flatten)]
        params: PotentialArgs,
    },
    /// Nuclear weak charge.
    WeakCharge {
        #[command(flatten)]
        params: PotentialArgs,
    },
}

/// Parses `args` and runs the selected command, writing reports to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn std::io::Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    commands::dispatch(cli, stdout)
}
