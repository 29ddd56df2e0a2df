//! Uniform-grid axes and fields, central stencils, quadrature and
//! pointwise derivatives.

mod axis;
mod field;
mod point;
mod stencil;

pub use axis::{AxisGrid, AxisKind};
pub use field::{sample_complex, sample_real, ComplexField, Element, Field, RealField, MAX_RANK};
pub use point::{derivative_at, Jet, PointJet};
pub use stencil::{
    central_stencil, integrate_axis, mixed_derivative, partial_derivative, Stencil, StencilScheme,
    MAX_POWER,
};
