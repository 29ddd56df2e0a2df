//! Generalized Wigner functions of rank four, the Psi-Moyal transport
//! operator, Vlasov-chain fluxes and the second-rank von Neumann evolution,
//! with the phase-space harmonic oscillator as a closed-form reference.
//!
//! Numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below fix the default `f64` width.

pub mod error;
pub mod fields;
pub mod io;
pub mod moyal;
pub mod oracle;
pub mod potential;
pub mod scalar;
pub mod vlasov;
pub mod vonneumann;
pub mod wigner;

pub use error::{Error, Result};
pub use fields::{AxisGrid, AxisKind, ComplexField, Field, RealField, StencilScheme};
pub use oracle::{HoOracle, PhysParams};
pub use potential::PolynomialPotential;
pub use scalar::Scalar;
pub use vlasov::{FluxField, FluxKind};
pub use vonneumann::{DensityMatrix, ModeSet};

pub type AxisGrid64 = AxisGrid<f64>;
pub type RealField64 = RealField<f64>;
pub type ComplexField64 = ComplexField<f64>;
pub type StencilScheme64 = StencilScheme<f64>;
pub type PhysParams64 = PhysParams<f64>;
pub type HoOracle64 = HoOracle<f64>;
pub type PolynomialPotential64 = PolynomialPotential<f64>;
pub type FluxField64 = FluxField<f64>;
pub type ModeSet64 = ModeSet<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
