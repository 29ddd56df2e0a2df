//! Run configuration shared by the subcommands.

use std::fmt;
use std::str::FromStr;

use clap::Args;
use psimoyal::{PhysParams, StencilScheme};

use crate::CliError;

/// `hbar2` either derived from the oscillator rule `hbar * omega^2` or given.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Hbar2 {
    #[default]
    Auto,
    Value(f64),
}

impl FromStr for Hbar2 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Self::Value(v)),
            _ => Err(format!("expected \"auto\" or a positive number, got {s:?}")),
        }
    }
}

impl fmt::Display for Hbar2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Physical constants.
#[derive(Debug, Clone, Copy, Args)]
pub struct PhysArgs {
    /// Mass.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    /// First Planck-type constant.
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    /// Oscillator frequency.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Second-rank constant, or `auto` for hbar * omega^2.
    #[arg(long, default_value = "auto")]
    pub hbar2: Hbar2,
}

impl Default for PhysArgs {
    fn default() -> Self {
        Self { m: 1.0, hbar: 1.0, omega: 1.0, hbar2: Hbar2::Auto }
    }
}

impl PhysArgs {
    pub fn params(&self) -> Result<PhysParams<f64>, CliError> {
        let p = PhysParams::new(self.m, self.hbar, self.omega)?;
        Ok(match self.hbar2 {
            Hbar2::Auto => p,
            Hbar2::Value(v) => p.with_hbar2(v)?,
        })
    }
}

/// Stencil and mask settings.
#[derive(Debug, Clone, Copy, Args)]
pub struct NumericArgs {
    /// Accuracy order of the central stencils (2, 4 or 6).
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Flux mask threshold relative to the peak density.
    #[arg(long, default_value_t = psimoyal::vlasov::DEFAULT_MASK_THRESHOLD)]
    pub mask_threshold: f64,
}

impl Default for NumericArgs {
    fn default() -> Self {
        Self { order: 4, mask_threshold: psimoyal::vlasov::DEFAULT_MASK_THRESHOLD }
    }
}

impl NumericArgs {
    pub fn scheme(&self) -> Result<StencilScheme<f64>, CliError> {
        Ok(StencilScheme::new(self.order)?)
    }
}

/// Everything a run needs besides file paths.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunConfig {
    pub phys: PhysArgs,
    pub numeric: NumericArgs,
}
