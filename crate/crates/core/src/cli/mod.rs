//! The `qdetect` command-line tool.
//!
//! Every subcommand reads a flat TOML file (`--config`) and lets flags
//! override individual keys. Tables go to CSV files under `--out`; summaries
//! go to stdout and warnings to stderr.

mod commands;
mod config;
mod io;
mod state_spec;
mod validate;

pub use config::{Grid, Overrides, ProtocolKind, RunConfig};
pub use io::{fmt_f, parse_complex};
pub use state_spec::{StateSpec, AMPLITUDE_NORM_TOLERANCE};
pub use validate::{Thresholds, DEFAULT_THRESHOLDS, TIGHT_THRESHOLDS};

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::darkbright::{bright_basis_all_to_all, decompose, DarkBrightDecomposition};
use crate::protocol::{Dynamics, SpectralPropagator};
use crate::spectral::{generic_eigenbasis, AllToAllModel};
use crate::state::{window_projectors, SiteWindow, StateVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qdetect", version, about = "First detection times of a monitored tight-binding walk")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo of the measurement protocol; writes trajectories.csv,
    /// survival.csv and fdp.csv.
    Simulate(#[command(flatten)] Overrides),
    /// Analytic mean first detection time over an r-grid; writes mfdt_sweep.csv.
    MfdtSweep(#[command(flatten)] Overrides),
    /// Analytic F(t) for one or more rates; writes fdp.csv and fdp_timescales.csv.
    Fdp(#[command(flatten)] Overrides),
    /// Dark/bright decomposition; writes darkstates.csv.
    Darkstates(#[command(flatten)] Overrides),
    /// Roots of the cubic denominator over an r-grid; writes roots.csv.
    Roots(#[command(flatten)] Overrides),
    /// Runs the consistency checks and exits nonzero on any failure.
    Validate(ValidateArgs),
}

#[derive(Debug, clap::Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Use the tight thresholds.
    #[arg(long)]
    pub tight: bool,
    /// Flip the sign of the interference coefficient a₃ in every analytic
    /// prediction; the simulation comparison must then fail.
    #[arg(long, hide = true)]
    pub inject_a3_flip: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, config file or input data.
    Config(String),
    /// A validation or certificate check failed.
    Validation(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::NumericalFault { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Model, window and initial state shared by the subcommands.
pub struct Setup {
    pub window: SiteWindow,
    /// `None` when an explicit Hamiltonian was given.
    pub model: Option<AllToAllModel>,
    pub matrix: Option<DMatrix<Complex64>>,
    pub state: StateVector,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let window = SiteWindow::new(cfg.n, cfg.m)?;
        let (model, matrix) = match &cfg.hamiltonian {
            Some(path) => (None, Some(io::read_matrix(path)?)),
            None => (Some(AllToAllModel::new(cfg.n, cfg.j)?), None),
        };
        let mut setup = Self {
            window,
            model,
            matrix,
            state: StateVector::uniform(cfg.n),
        };
        setup.state = cfg
            .state
            .build(&window, || Ok(setup.decomposition()?.bright_basis().to_vec()))?;
        Ok(setup)
    }

    /// Closed form for the all-to-all model, numerical otherwise.
    pub fn decomposition(&self) -> Result<DarkBrightDecomposition, CliError> {
        match &self.matrix {
            None => Ok(bright_basis_all_to_all(&self.window)),
            Some(h) => self.numerical_decomposition(h),
        }
    }

    pub fn numerical_decomposition(
        &self,
        h: &DMatrix<Complex64>,
    ) -> Result<DarkBrightDecomposition, CliError> {
        let spectrum = generic_eigenbasis(h, None)?;
        Ok(decompose(&spectrum, &window_projectors(&self.window).0)?)
    }

    pub fn dynamics(&self) -> Result<Dynamics, CliError> {
        match (&self.model, &self.matrix) {
            (Some(m), _) => Ok(Dynamics::AllToAll(*m)),
            (None, Some(h)) => Ok(Dynamics::Spectral(SpectralPropagator::from_hamiltonian(h)?)),
            (None, None) => unreachable!("setup always holds a model or a matrix"),
        }
    }

    /// The closed forms only cover the all-to-all model.
    pub fn all_to_all(&self, command: &str) -> Result<AllToAllModel, CliError> {
        self.model.ok_or_else(|| {
            CliError::Config(format!("`{command}` needs the all-to-all model; drop --hamiltonian"))
        })
    }
}

/// Sizes the global rayon pool from `QDETECT_THREADS`. Results do not depend
/// on it.
fn configure_threads() {
    if let Some(n) = crate::protocol::threads_from_env() {
        // fails only if the pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("qdetect: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    let prepare = |o: &Overrides| -> Result<RunConfig, CliError> {
        let cfg = RunConfig::resolve(o)?;
        std::fs::create_dir_all(&cfg.out)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cfg.out.display())))?;
        Ok(cfg)
    };
    match command {
        Command::Simulate(o) => commands::simulate(&prepare(o)?),
        Command::MfdtSweep(o) => commands::mfdt_sweep(&prepare(o)?),
        Command::Fdp(o) => commands::fdp(&prepare(o)?),
        Command::Darkstates(o) => commands::darkstates(&prepare(o)?),
        Command::Roots(o) => commands::roots(&prepare(o)?),
        Command::Validate(v) => {
            let cfg = RunConfig::resolve(&v.common)?;
            let thresholds = if v.tight { TIGHT_THRESHOLDS } else { DEFAULT_THRESHOLDS };
            validate::run(&cfg, &thresholds, v.inject_a3_flip)
        }
    }
}
