//! Command-line front end for the `psimoyal` library.
//!
//! Exit codes: 0 success, 1 invalid input or flags, 2 file I/O or format
//! errors, 3 numeric failures and exceeded tolerances.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod suite;

pub use config::{Hbar2, NumericArgs, PhysArgs, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] psimoyal::Error),
    #[error("invalid input: {0}")]
    Usage(String),
    #[error("tolerance exceeded: {0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use psimoyal::Error as E;
        match self {
            Self::Usage(_) => 1,
            Self::Tolerance(_) => 3,
            Self::Core(e) => match e {
                E::Validation(_) | E::Plan(_) => 1,
                E::Format(_) | E::Io(_) => 2,
                E::Numeric(_) => 3,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Core(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "psimoyal", version, about = "Rank-4 Wigner functions, Moyal residuals and Vlasov fluxes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the oscillator ground state on an (x, v) grid.
    GenHo(GenHoArgs),
    /// Generalized Wigner transform of a complex (x, v) field.
    Wigner(WignerArgs),
    /// Mass-weighted integral over one kinematic axis.
    Marginal(MarginalArgs),
    /// Residual of the transport equations on a stored field.
    Residual(ResidualArgs),
    /// Conditional mean fluxes with their support mask.
    Fluxes(FluxesArgs),
    /// Slice a real field to CSV.
    ExportCsv(ExportCsvArgs),
    /// Check the second-rank von Neumann evolution of a mode set.
    Vonneumann(VonNeumannArgs),
    /// Run a built-in validation suite.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct GenHoArgs {
    #[command(flatten)]
    pub phys: PhysArgs,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 64)]
    pub nx: usize,
    #[arg(long, default_value_t = 64)]
    pub nv: usize,
    #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
    pub xmin: f64,
    #[arg(long, default_value_t = 8.0, allow_hyphen_values = true)]
    pub xmax: f64,
    #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
    pub vmin: f64,
    #[arg(long, default_value_t = 8.0, allow_hyphen_values = true)]
    pub vmax: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rank {
    #[value(name = "4")]
    Four,
    #[value(name = "3")]
    Three,
    #[value(name = "24")]
    TwoFour,
}

#[derive(Debug, Args)]
pub struct WignerArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub rank: Rank,
    #[command(flatten)]
    pub phys: PhysArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarginalAxis {
    Vdot,
    Vddot,
}

#[derive(Debug, Args)]
pub struct MarginalArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub axis: MarginalAxis,
    /// Mass weighting the integral.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResidualMode {
    PsiMoyal,
    Vlasov12,
    Vlasov123,
    Vlasov124,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    /// Fourth-rank field; `vlasov12` also takes a field on (x, v).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Polynomial potential file (`a b coeff` per line).
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ResidualMode,
    /// Print grid and argmax details besides the summary line.
    #[arg(long)]
    pub report: bool,
    /// Exit 3 when max|residual|/peak exceeds this.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write the residual field.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub phys: PhysArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FluxSelector {
    #[value(name = "123")]
    R123,
    #[value(name = "124")]
    R124,
    #[value(name = "12")]
    R12,
}

#[derive(Debug, Args)]
pub struct FluxesArgs {
    /// Fourth-rank field.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub which: FluxSelector,
    /// Potential for the `124` acceleration flux; defaults to the
    /// oscillator potential of the given constants.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub phys: PhysArgs,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Part {
    Re,
    Im,
    Abs2,
}

#[derive(Debug, Args)]
pub struct ExportCsvArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Pinned axes, e.g. `x=0,v=0`.
    #[arg(long, default_value = "")]
    pub slice: String,
    /// Component exported from a complex field.
    #[arg(long, value_enum, default_value_t = Part::Re)]
    pub part: Part,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VonNeumannArgs {
    /// Mode file (`ReE ImE Rec Imc` per line).
    #[arg(long)]
    pub modes: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub hbar2: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    /// Exit 3 when the commutator residual exceeds this.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    Ho,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteName,
    #[command(flatten)]
    pub phys: PhysArgs,
    /// Seed of the random sample points.
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

/// Parses `args` (including the program name) and runs the command,
/// writing normal output to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_entry() -> ExitCode {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code)
}
