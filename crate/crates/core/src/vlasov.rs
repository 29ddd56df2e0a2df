//! Vlasov-chain layer: mean fluxes as conditional moments, their series
//! closures for polynomial potentials, divergence-form residuals of the
//! chain equations, and dissipation diagnostics.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{validation, Error, Result};
use crate::fields::{
    central_stencil, derivative_at, integrate_axis, Jet, PointJet, partial_derivative,
    sample_real, AxisGrid, AxisKind, RealField, StencilScheme,
};
use crate::moyal::{check_canonical, CANONICAL};
use crate::oracle::PhysParams;
use crate::potential::PolynomialPotential;
use crate::scalar::{factorial, lit, Scalar};

/// Default mask threshold relative to the peak of the denominator density.
pub const DEFAULT_MASK_THRESHOLD: f64 = 1e-8;

/// Which conditional mean a [`FluxField`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FluxKind {
    /// `<vdot>` given `(x, v)`.
    Vel12,
    /// `<vdot>` given `(x, v, vddot)`.
    Vel124,
    /// `<vddot>` given `(x, v, vdot)`.
    Accel123,
    /// `<vddot>` given `(x, v, vddot)`.
    Accel124,
    /// `<vddot>` given the full fourth-rank point.
    Accel1234,
}

impl FluxKind {
    pub const ALL: [FluxKind; 5] =
        [Self::Vel12, Self::Vel124, Self::Accel123, Self::Accel124, Self::Accel1234];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Vel12 => "12-vel",
            Self::Vel124 => "124-vel",
            Self::Accel123 => "123-accel",
            Self::Accel124 => "124-accel",
            Self::Accel1234 => "1234-accel",
        }
    }
}

impl fmt::Display for FluxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FluxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown flux selector {s:?}")))
    }
}

/// A mean flux sampled on a grid, defined only where the density it is
/// conditioned on is at least `threshold` times its peak. Values outside the
/// mask are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField<T> {
    kind: FluxKind,
    values: RealField<T>,
    mask: Vec<bool>,
    threshold: T,
}

impl<T: Scalar> FluxField<T> {
    pub fn new(kind: FluxKind, values: RealField<T>, mask: Vec<bool>, threshold: T) -> Result<Self> {
        if mask.len() != values.len() {
            return validation("mask length does not match flux grid");
        }
        Ok(Self { kind, values, mask, threshold })
    }

    pub fn kind(&self) -> FluxKind {
        self.kind
    }

    pub fn values(&self) -> &RealField<T> {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }

    /// Fraction of grid points outside the support mask.
    pub fn masked_fraction(&self) -> f64 {
        let out = self.mask.iter().filter(|&&m| !m).count();
        out as f64 / self.mask.len() as f64
    }

    /// Largest `|flux - reference|` over the support mask.
    pub fn max_error_against(&self, reference: impl Fn(&[T]) -> T + Sync) -> T {
        (0..self.values.len())
            .into_par_iter()
            .filter(|&i| self.mask[i])
            .map(|i| (self.values.data()[i] - reference(&self.values.coords_of(i))).abs())
            .reduce(T::zero, T::max)
    }

    pub fn mask_field(&self) -> RealField<T> {
        let data = self.mask.iter().map(|&m| if m { T::one() } else { T::zero() }).collect();
        RealField::from_parts(self.values.axes().to_vec(), data)
    }
}

/// Conditional mean flux of a fourth-rank field by moment ratios over the
/// traced axes. The `vddot` means conditioned on `vddot` itself need the
/// potential; see [`mean_accel_flux_124`] and [`vlasov_moyal_accel_flux`].
pub fn mean_flux_from_w4<T: Scalar>(
    w4: &RealField<T>,
    which: FluxKind,
    params: &PhysParams<T>,
    mask_threshold: T,
) -> Result<FluxField<T>> {
    check_canonical(w4)?;
    let m = params.m();
    let (traced, moment): (&[AxisKind], AxisKind) = match which {
        FluxKind::Accel123 => (&[AxisKind::Vddot], AxisKind::Vddot),
        FluxKind::Vel124 => (&[AxisKind::Vdot], AxisKind::Vdot),
        FluxKind::Vel12 => (&[AxisKind::Vddot, AxisKind::Vdot], AxisKind::Vdot),
        FluxKind::Accel124 | FluxKind::Accel1234 => {
            return validation(format!(
                "{which} is not a moment of the fourth-rank field; it needs a potential"
            ))
        }
    };
    let mut num = times_coordinate(w4, moment)?;
    let mut den = w4.clone();
    for &axis in traced {
        num = integrate_axis(&num, axis, m)?;
        den = integrate_axis(&den, axis, m)?;
    }
    Ok(ratio(which, &num, &den, mask_threshold))
}

/// `<vddot>` given `(x, v, vddot)` as `m * integral <vddot>_1234 f dvdot`
/// over the marginal, with the fourth-rank flux from the series.
pub fn mean_accel_flux_124<T: Scalar>(
    w4: &RealField<T>,
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
    mask_threshold: T,
) -> Result<FluxField<T>> {
    check_canonical(w4)?;
    // f <vddot>_1234 is the series numerator itself; no division needed.
    let weighted = series_numerator(w4, u, &accel_series(u, params), AxisKind::Vddot, scheme)?;
    let num = integrate_axis(&weighted, AxisKind::Vdot, params.m())?;
    let den = integrate_axis(w4, AxisKind::Vdot, params.m())?;
    Ok(ratio(FluxKind::Accel124, &num, &den, mask_threshold))
}

/// Series acceleration flux
/// `(1/m) sum_l (-1)^l (hbar2/2m)^(2l) / (2l+1)! U_x^(2l+1) (d^(2l)f/dvddot^(2l)) / f`
/// on a field over `(x, v, vdot, vddot)` or `(x, v, vddot)`.
pub fn vlasov_moyal_accel_flux<T: Scalar>(
    f: &RealField<T>,
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
    mask_threshold: T,
) -> Result<FluxField<T>> {
    let kind = match f.axis_kinds().as_slice() {
        [AxisKind::X, AxisKind::V, AxisKind::Vdot, AxisKind::Vddot] => FluxKind::Accel1234,
        [AxisKind::X, AxisKind::V, AxisKind::Vddot] => FluxKind::Accel124,
        other => return validation(format!("acceleration flux needs (x, v, [vdot,] vddot), got {other:?}")),
    };
    let numer = series_numerator(f, u, &accel_series(u, params), AxisKind::Vddot, scheme)?;
    positive_ratio(kind, f, &numer, mask_threshold)
}

/// Series velocity flux
/// `sum_l (-1)^(l+1) (hbar2/2m)^(2l) / (m (2l+1)!) U1^(2l+1) (d^(2l)f/dv^(2l)) / f`
/// on a field over `(x, v)`.
pub fn vlasov_moyal_velocity_flux<T: Scalar>(
    f12: &RealField<T>,
    u1: &PolynomialPotential<T>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
    mask_threshold: T,
) -> Result<FluxField<T>> {
    if f12.axis_kinds() != [AxisKind::X, AxisKind::V] {
        return validation("velocity flux needs a field on (x, v)");
    }
    if !u1.is_velocity_independent() {
        return validation("velocity flux needs a velocity-independent potential");
    }
    let numer = series_numerator(f12, u1, &velocity_series(u1, params), AxisKind::V, scheme)?;
    positive_ratio(FluxKind::Vel12, f12, &numer, mask_threshold)
}

/// `(l, coefficient)` pairs of the acceleration series, including `l = 0`.
pub fn accel_series<T: Scalar>(u: &PolynomialPotential<T>, params: &PhysParams<T>) -> Vec<(u32, T)> {
    let m = params.m();
    let a = params.hbar2() / (lit::<T>(2.0) * m);
    (0..=u.degree().saturating_sub(1) / 2)
        .filter(|&l| u.has_derivative(2 * l + 1, 0))
        .map(|l| {
            let sign = if l % 2 == 0 { T::one() } else { -T::one() };
            let c = sign * a.powi(2 * l as i32) / (m * factorial::<T>(2 * l as usize + 1));
            (l, c)
        })
        .collect()
}

/// `(l, coefficient)` pairs of the velocity series, including `l = 0`.
pub fn velocity_series<T: Scalar>(
    u1: &PolynomialPotential<T>,
    params: &PhysParams<T>,
) -> Vec<(u32, T)> {
    accel_series(u1, params).into_iter().map(|(l, c)| (l, -c)).collect()
}

/// Series acceleration flux at one point from a callable density;
/// `vddot_axis` is the position of `vddot` among the coordinates.
pub fn accel_flux_at<T, F>(
    f: &F,
    point: &[T],
    vddot_axis: usize,
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
) -> Result<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + ?Sized,
{
    series_at(f, point, vddot_axis, u, &accel_series(u, params), scheme)
}

/// Series velocity flux at one point of `(x, v)` from a callable density.
pub fn velocity_flux_at<T, F>(
    f: &F,
    point: &[T],
    u1: &PolynomialPotential<T>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
) -> Result<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + ?Sized,
{
    if !u1.is_velocity_independent() {
        return validation("velocity flux needs a velocity-independent potential");
    }
    series_at(f, point, 1, u1, &velocity_series(u1, params), scheme)
}

fn series_at<T, F>(
    f: &F,
    point: &[T],
    axis: usize,
    u: &PolynomialPotential<T>,
    series: &[(u32, T)],
    scheme: &StencilScheme<T>,
) -> Result<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + ?Sized,
{
    series_from_jet(&PointJet::new(f, point, *scheme)?, point, axis, u, series)
}

fn series_from_jet<T: Scalar>(
    jet: &impl Jet<T>,
    point: &[T],
    axis: usize,
    u: &PolynomialPotential<T>,
    series: &[(u32, T)],
) -> Result<T> {
    if axis >= point.len() {
        return validation(format!("axis {axis} out of range for a point of {} coordinates", point.len()));
    }
    let mut orders = vec![0; point.len()];
    let value = jet.derivative(&orders)?;
    if value.is_nan() || value <= T::zero() {
        return Err(Error::Numeric(format!("density is not positive at {point:?}")));
    }
    let mut acc = T::zero();
    for &(l, c) in series {
        let du = u.derivative(2 * l + 1, 0, point[0], point[1]);
        orders[axis] = 2 * l as usize;
        acc += c * du * jet.derivative(&orders)?;
    }
    Ok(acc / value)
}

/// Series acceleration flux at `point` from a jet of the density, e.g. one
/// with exact derivatives.
pub fn accel_flux_from_jet<T: Scalar>(
    jet: &impl Jet<T>,
    point: &[T],
    vddot_axis: usize,
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
) -> Result<T> {
    series_from_jet(jet, point, vddot_axis, u, &accel_series(u, params))
}

/// Series velocity flux at a point of `(x, v)` from a jet of the density.
pub fn velocity_flux_from_jet<T: Scalar>(
    jet: &impl Jet<T>,
    point: &[T],
    u1: &PolynomialPotential<T>,
    params: &PhysParams<T>,
) -> Result<T> {
    if !u1.is_velocity_independent() {
        return validation("velocity flux needs a velocity-independent potential");
    }
    series_from_jet(jet, point, 1, u1, &velocity_series(u1, params))
}

/// `sum_l c_l U_x^(2l+1)(x, v) d^(2l) f / d(axis)^(2l)` on the grid of `f`.
fn series_numerator<T: Scalar>(
    f: &RealField<T>,
    u: &PolynomialPotential<T>,
    series: &[(u32, T)],
    axis: AxisKind,
    scheme: &StencilScheme<T>,
) -> Result<RealField<T>> {
    let mut out = RealField::zeros(f.axes().to_vec())?;
    for &(l, c) in series {
        let d = if l == 0 { f.clone() } else { partial_derivative(f, axis, 2 * l as usize, scheme)? };
        out.accumulate(&d, |p| c * u.derivative(2 * l + 1, 0, p[0], p[1]))?;
    }
    Ok(out)
}

fn positive_ratio<T: Scalar>(
    kind: FluxKind,
    f: &RealField<T>,
    numer: &RealField<T>,
    mask_threshold: T,
) -> Result<FluxField<T>> {
    let cut = mask_threshold * f.peak_abs();
    let mask: Vec<bool> = f.data().iter().map(|v| v.abs() >= cut && cut > T::zero()).collect();
    if let Some(i) = (0..f.len()).find(|&i| mask[i] && f.data()[i] <= T::zero()) {
        return Err(Error::Numeric(format!(
            "density {:e} is not positive at {:?} inside the mask",
            f.data()[i],
            f.coords_of(i)
        )));
    }
    let data = (0..f.len())
        .map(|i| if mask[i] { numer.data()[i] / f.data()[i] } else { T::zero() })
        .collect();
    FluxField::new(kind, RealField::new(f.axes().to_vec(), data)?, mask, mask_threshold)
}

fn ratio<T: Scalar>(
    kind: FluxKind,
    num: &RealField<T>,
    den: &RealField<T>,
    mask_threshold: T,
) -> FluxField<T> {
    let cut = mask_threshold * den.peak_abs();
    let mask: Vec<bool> = den.data().iter().map(|d| d.abs() >= cut && cut > T::zero()).collect();
    let data = (0..den.len())
        .map(|i| if mask[i] { num.data()[i] / den.data()[i] } else { T::zero() })
        .collect();
    FluxField { kind, values: RealField::from_parts(den.axes().to_vec(), data), mask, threshold: mask_threshold }
}

/// `field * coordinate(axis)` pointwise.
fn times_coordinate<T: Scalar>(field: &RealField<T>, axis: AxisKind) -> Result<RealField<T>> {
    let k = field.axis_position(axis)?;
    let grid = *field.axis(k);
    let stride = field.strides()[k];
    let n = grid.len();
    let data = field
        .data()
        .par_iter()
        .enumerate()
        .map(|(i, &w)| w * grid.coord((i / stride) % n))
        .collect();
    Ok(RealField::from_parts(field.axes().to_vec(), data))
}

/// Equations of the chain, by the rank of the density they govern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlasovEquation {
    /// Fourth-rank density on `(x, v, vdot, vddot)` closed by `<vddot>`.
    Chain4,
    /// Density on `(x, v, vdot)` with mean `<vddot>` and the series source.
    W123,
    /// Density on `(x, v, vddot)` with means `<vdot>` and `<vddot>`.
    W124,
    /// Density on `(x, v)` with mean `<vdot>`.
    W12,
}

impl VlasovEquation {
    pub fn axes(self) -> &'static [AxisKind] {
        match self {
            Self::Chain4 => &CANONICAL,
            Self::W123 => &[AxisKind::X, AxisKind::V, AxisKind::Vdot],
            Self::W124 => &[AxisKind::X, AxisKind::V, AxisKind::Vddot],
            Self::W12 => &[AxisKind::X, AxisKind::V],
        }
    }

    /// Flux carried along each axis, in axis order.
    fn carriers(self) -> Vec<Carrier> {
        use Carrier::*;
        match self {
            Self::Chain4 => vec![Coordinate(1), Coordinate(2), Coordinate(3), MeanAccel],
            Self::W123 => vec![Coordinate(1), Coordinate(2), MeanAccel],
            Self::W124 => vec![Coordinate(1), MeanVel, MeanAccel],
            Self::W12 => vec![Coordinate(1), MeanVel],
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Carrier {
    Coordinate(usize),
    MeanVel,
    MeanAccel,
}

/// A mean flux given either on the density's grid or as a function of the
/// density's coordinates.
#[derive(Clone, Copy)]
pub enum Flux<'a, T> {
    Field(&'a RealField<T>),
    Function(&'a (dyn Fn(&[T]) -> T + Sync)),
}

impl<T> fmt::Debug for Flux<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Field(_) => f.write_str("Flux::Field"),
            Self::Function(_) => f.write_str("Flux::Function"),
        }
    }
}

/// Mean fluxes closing an equation; which ones are needed depends on the
/// equation.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanFluxes<'a, T> {
    pub vdot: Option<Flux<'a, T>>,
    pub vddot: Option<Flux<'a, T>>,
}

impl<'a, T: Scalar> MeanFluxes<'a, T> {
    fn get(&self, c: Carrier) -> Result<Option<Flux<'a, T>>> {
        match c {
            Carrier::Coordinate(_) => Ok(None),
            Carrier::MeanVel => self
                .vdot
                .map(Some)
                .ok_or_else(|| Error::Validation("equation needs a <vdot> flux".into())),
            Carrier::MeanAccel => self
                .vddot
                .map(Some)
                .ok_or_else(|| Error::Validation("equation needs a <vddot> flux".into())),
        }
    }
}

/// Divergence-form residual on the density's grid. The `W123` source term
/// needs `u`; `dt_term` adds a time derivative.
pub fn vlasov_residual<T: Scalar>(
    eq: VlasovEquation,
    w: &RealField<T>,
    fluxes: &MeanFluxes<'_, T>,
    u: Option<&PolynomialPotential<T>>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
    dt_term: Option<&RealField<T>>,
) -> Result<RealField<T>> {
    if w.axis_kinds() != eq.axes() {
        return validation(format!(
            "{eq:?} needs a density on {:?}, got {:?}",
            eq.axes(),
            w.axis_kinds()
        ));
    }
    let mut out = match dt_term {
        Some(dt) if dt.same_grid(w) => dt.clone(),
        Some(_) => return validation("time-derivative field lives on a different grid"),
        None => RealField::zeros(w.axes().to_vec())?,
    };
    for (k, carrier) in eq.carriers().into_iter().enumerate() {
        let axis = eq.axes()[k];
        let product = match fluxes.get(carrier)? {
            None => {
                let Carrier::Coordinate(j) = carrier else { unreachable!() };
                let grid = *w.axis(j);
                let stride = w.strides()[j];
                let data =
                    w.data().iter().enumerate().map(|(i, &v)| v * grid.coord((i / stride) % grid.len())).collect();
                RealField::from_parts(w.axes().to_vec(), data)
            }
            Some(Flux::Field(f)) => {
                if !f.same_grid(w) {
                    return validation("flux field lives on a different grid than the density");
                }
                w.mul(f)?
            }
            Some(Flux::Function(g)) => w.mul(&sample_real(g, w.axes().to_vec())?)?,
        };
        let d = partial_derivative(&product, axis, 1, scheme)?;
        out.accumulate(&d, |_| T::one())?;
    }
    if eq == VlasovEquation::W123 {
        let u = u.ok_or_else(|| Error::Validation("the 1,2,3 equation needs the potential".into()))?;
        for (l, c) in source_series(u, params) {
            let p = 2 * l as usize + 1;
            let d = partial_derivative(w, AxisKind::Vdot, p, scheme)?;
            out.accumulate(&d, |q| -c * u.derivative(0, p as u32, q[0], q[1]))?;
        }
    }
    Ok(out)
}

/// Divergence-form residual at one point of a callable density, with
/// callable fluxes.
#[allow(clippy::too_many_arguments)]
pub fn vlasov_residual_at<T, F>(
    eq: VlasovEquation,
    w: &F,
    point: &[T],
    fluxes: &MeanFluxes<'_, T>,
    u: Option<&PolynomialPotential<T>>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
) -> Result<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    let rank = eq.axes().len();
    if point.len() != rank {
        return validation(format!("{eq:?} needs a point of {rank} coordinates"));
    }
    let mut acc = T::zero();
    for (k, carrier) in eq.carriers().into_iter().enumerate() {
        let mut orders = vec![0; rank];
        orders[k] = 1;
        acc += match fluxes.get(carrier)? {
            None => {
                let Carrier::Coordinate(j) = carrier else { unreachable!() };
                derivative_at(&|c: &[T]| w(c) * c[j], point, &orders, scheme)?
            }
            Some(Flux::Function(g)) => derivative_at(&|c: &[T]| w(c) * g(c), point, &orders, scheme)?,
            Some(Flux::Field(_)) => {
                return validation("pointwise residuals need fluxes given as functions")
            }
        };
    }
    if eq == VlasovEquation::W123 {
        let u = u.ok_or_else(|| Error::Validation("the 1,2,3 equation needs the potential".into()))?;
        for (l, c) in source_series(u, params) {
            let p = 2 * l as usize + 1;
            let du = u.derivative(0, p as u32, point[0], point[1]);
            acc -= c * du * derivative_at(w, point, &[0, 0, p], scheme)?;
        }
    }
    Ok(acc)
}

/// `(l, coefficient)` of the `1,2,3` source series
/// `sum_l (-1)^l (hbar2/2m)^(2l) / (m (2l+1)!) U_v^(2l+1) d^(2l+1)W/dvdot^(2l+1)`.
pub fn source_series<T: Scalar>(u: &PolynomialPotential<T>, params: &PhysParams<T>) -> Vec<(u32, T)> {
    let m = params.m();
    let a = params.hbar2() / (lit::<T>(2.0) * m);
    (0..=u.degree().saturating_sub(1) / 2)
        .filter(|&l| u.has_derivative(0, 2 * l + 1))
        .map(|l| {
            let sign = if l % 2 == 0 { T::one() } else { -T::one() };
            (l, sign * a.powi(2 * l as i32) / (m * factorial::<T>(2 * l as usize + 1)))
        })
        .collect()
}

/// Discrepancy between the fourth-rank chain equation closed by the series
/// acceleration flux and the second Moyal equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport<T> {
    pub max_abs: T,
    /// Largest sum of absolute term magnitudes over the compared points.
    pub scale: T,
    pub relative: T,
    pub compared_points: usize,
}

/// Assembles both sides on the grid of `f4` with the same discretization:
/// the `vddot` divergence of `f <vddot>` on one side, first-derivative
/// stencils applied to the even-order series derivatives on the other. Only
/// points whose `vddot` stencil stays inside the flux mask are compared.
pub fn theorem2_equivalence<T: Scalar>(
    u1: &PolynomialPotential<T>,
    f4: &RealField<T>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
    mask_threshold: T,
) -> Result<EquivalenceReport<T>> {
    check_canonical(f4)?;
    if !u1.is_velocity_independent() {
        return validation("the equivalence needs a velocity-independent potential");
    }
    let flux = vlasov_moyal_accel_flux(f4, u1, params, scheme, mask_threshold)?;

    // Divergence side.
    let fluxes = MeanFluxes { vdot: None, vddot: Some(Flux::Field(flux.values())) };
    let div = vlasov_residual(VlasovEquation::Chain4, f4, &fluxes, None, params, scheme, None)?;

    // Series side: transport with U_x/m, minus the l >= 1 series.
    let mut series = RealField::zeros(f4.axes().to_vec())?;
    let mut magnitude = RealField::zeros(f4.axes().to_vec())?;
    let m = params.m();
    for (k, axis) in CANONICAL.iter().enumerate() {
        let d = partial_derivative(f4, *axis, 1, scheme)?;
        let coef = |c: &[T]| match k {
            3 => u1.derivative(1, 0, c[0], c[1]) / m,
            _ => c[k + 1],
        };
        series.accumulate(&d, coef)?;
        magnitude.accumulate(&d.map(|v| v.abs()), |c| coef(c).abs())?;
    }
    for (l, c) in accel_series(u1, params).into_iter().filter(|&(l, _)| l >= 1) {
        let even = partial_derivative(f4, AxisKind::Vddot, 2 * l as usize, scheme)?;
        let d = partial_derivative(&even, AxisKind::Vddot, 1, scheme)?;
        series.accumulate(&d, |q| c * u1.derivative(2 * l + 1, 0, q[0], q[1]))?;
        magnitude.accumulate(&d.map(|v| v.abs()), |q| (c * u1.derivative(2 * l + 1, 0, q[0], q[1])).abs())?;
    }

    let k = 3;
    let n = f4.axis(k).len();
    let stride = f4.strides()[k];
    let r = central_stencil(1, scheme.order())?.radius() as isize;
    let inside = |i: usize| {
        let pos = ((i / stride) % n) as isize;
        (-r..=r).all(|o| {
            let q = pos + o;
            q >= 0 && (q as usize) < n && flux.mask()[(i as isize + o * stride as isize) as usize]
        })
    };
    let (max_abs, scale, count) = (0..f4.len())
        .into_par_iter()
        .filter(|&i| inside(i))
        .map(|i| ((div.data()[i] - series.data()[i]).abs(), magnitude.data()[i], 1usize))
        .reduce(
            || (T::zero(), T::zero(), 0),
            |a, b| (a.0.max(b.0), a.1.max(b.1), a.2 + b.2),
        );
    let relative = if scale > T::zero() { max_abs / scale } else { max_abs };
    Ok(EquivalenceReport { max_abs, scale, relative, compared_points: count })
}

/// Dissipation sources and entropy-transport residuals of the `1,2` and
/// `1,2,4` densities, evaluated at interior points.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport<T> {
    /// `d<vdot>_12/dv` on `(x, v)`.
    pub q2_12: RealField<T>,
    /// `d<vdot>_124/dv` on `(x, v, vddot)`.
    pub q2_124: RealField<T>,
    /// `d<vddot>_124/dvddot` on `(x, v, vddot)`.
    pub q4_124: RealField<T>,
    /// `pi_12 S + Q2_12` with `S = ln W12`.
    pub entropy_residual_12: RealField<T>,
    /// `pi_124 S + Q2_124 + Q4_124` with `S = ln W124`.
    pub entropy_residual_124: RealField<T>,
    /// Points whose stencils stay inside the grid and the positive region.
    pub interior_12: Vec<bool>,
    pub interior_124: Vec<bool>,
}

impl<T: Scalar> DissipationReport<T> {
    /// Largest `|Q|` over the interior points of all three sources.
    pub fn max_source(&self) -> T {
        max_on(&self.q2_12, &self.interior_12)
            .max(max_on(&self.q2_124, &self.interior_124))
            .max(max_on(&self.q4_124, &self.interior_124))
    }

    /// Largest entropy-transport residual over the interior points.
    pub fn max_entropy_residual(&self) -> T {
        max_on(&self.entropy_residual_12, &self.interior_12)
            .max(max_on(&self.entropy_residual_124, &self.interior_124))
    }
}

/// Densities and fluxes a [`DissipationReport`] is built from.
#[derive(Debug, Clone, Copy)]
pub struct DissipationInputs<'a, T> {
    pub w12: &'a RealField<T>,
    pub vel12: &'a RealField<T>,
    pub w124: &'a RealField<T>,
    pub vel124: &'a RealField<T>,
    pub accel124: &'a RealField<T>,
}

pub fn dissipation_report<T: Scalar>(
    inputs: &DissipationInputs<'_, T>,
    scheme: &StencilScheme<T>,
) -> Result<DissipationReport<T>> {
    let DissipationInputs { w12, vel12, w124, vel124, accel124 } = *inputs;
    if w12.axis_kinds() != VlasovEquation::W12.axes() || w124.axis_kinds() != VlasovEquation::W124.axes() {
        return validation("dissipation needs W12 on (x, v) and W124 on (x, v, vddot)");
    }
    for (w, f) in [(w12, vel12), (w124, vel124), (w124, accel124)] {
        if !w.same_grid(f) {
            return validation("flux field lives on a different grid than its density");
        }
    }
    let q2_12 = partial_derivative(vel12, AxisKind::V, 1, scheme)?;
    let q2_124 = partial_derivative(vel124, AxisKind::V, 1, scheme)?;
    let q4_124 = partial_derivative(accel124, AxisKind::Vddot, 1, scheme)?;

    let radius = central_stencil(1, scheme.order())?.radius();
    let (s12, pos12) = log_density(w12);
    let (s124, pos124) = log_density(w124);
    let interior_12 = interior(w12, &pos12, &[AxisKind::X, AxisKind::V], radius);
    let interior_124 = interior(w124, &pos124, VlasovEquation::W124.axes(), radius);

    let mut r12 = q2_12.clone();
    r12.accumulate(&partial_derivative(&s12, AxisKind::X, 1, scheme)?, |c| c[1])?;
    r12.accumulate(&partial_derivative(&s12, AxisKind::V, 1, scheme)?.mul(vel12)?, |_| T::one())?;

    let mut r124 = q2_124.add_scaled(&q4_124, T::one())?;
    r124.accumulate(&partial_derivative(&s124, AxisKind::X, 1, scheme)?, |c| c[1])?;
    r124.accumulate(&partial_derivative(&s124, AxisKind::V, 1, scheme)?.mul(vel124)?, |_| T::one())?;
    r124.accumulate(&partial_derivative(&s124, AxisKind::Vddot, 1, scheme)?.mul(accel124)?, |_| T::one())?;

    Ok(DissipationReport {
        q2_12,
        q2_124,
        q4_124,
        entropy_residual_12: r12,
        entropy_residual_124: r124,
        interior_12,
        interior_124,
    })
}

/// `ln w` where `w > 0`, zero elsewhere, with the positivity mask.
fn log_density<T: Scalar>(w: &RealField<T>) -> (RealField<T>, Vec<bool>) {
    let pos: Vec<bool> = w.data().iter().map(|&v| v > T::min_positive_value()).collect();
    let data = w.data().iter().zip(&pos).map(|(&v, &p)| if p { v.ln() } else { T::zero() }).collect();
    (RealField::from_parts(w.axes().to_vec(), data), pos)
}

/// Points whose radius-`r` stencil along each listed axis stays inside the
/// grid and inside `mask`.
fn interior<T: Scalar>(f: &RealField<T>, mask: &[bool], axes: &[AxisKind], r: usize) -> Vec<bool> {
    let shape = f.shape();
    let strides = f.strides();
    let positions: Vec<usize> = axes.iter().filter_map(|a| f.axis_position(*a).ok()).collect();
    (0..f.len())
        .map(|i| {
            positions.iter().all(|&k| {
                let pos = (i / strides[k]) % shape[k];
                pos >= r
                    && pos + r < shape[k]
                    && (0..=2 * r).all(|o| mask[i + o * strides[k] - r * strides[k]])
            })
        })
        .collect()
}

fn max_on<T: Scalar>(f: &RealField<T>, mask: &[bool]) -> T {
    f.data()
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold(T::zero(), |a, (&v, _)| a.max(v.abs()))
}

/// `m * integral f <vddot> dvddot`, the first-moment reduction of a
/// fourth-rank acceleration flux onto `(x, v, vdot)`.
pub fn vddot_moment_of_flux<T: Scalar>(
    f4: &RealField<T>,
    flux: &FluxField<T>,
    params: &PhysParams<T>,
) -> Result<RealField<T>> {
    check_canonical(f4)?;
    integrate_axis(&f4.mul(flux.values())?, AxisKind::Vddot, params.m())
}

/// Samples a flux function on the axes of `like`.
pub fn sample_flux<T: Scalar>(
    like: &[AxisGrid<T>],
    f: impl Fn(&[T]) -> T + Sync,
) -> Result<RealField<T>> {
    sample_real(f, like.to_vec())
}
