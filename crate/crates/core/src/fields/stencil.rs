//! Central finite-difference stencils and the grid operators built on them.

use rayon::prelude::*;

use super::axis::AxisKind;
use super::field::{strides_of, RealField};
use crate::error::{validation, Result};
use crate::scalar::{lit, Scalar};

/// Highest derivative power with a stencil.
pub const MAX_POWER: usize = 6;

/// Accuracy order of a central stencil (2, 4 or 6) and an optional step
/// that replaces the axis spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilScheme<T> {
    order: usize,
    h: Option<T>,
}

impl<T: Scalar> StencilScheme<T> {
    pub fn new(order: usize) -> Result<Self> {
        if !matches!(order, 2 | 4 | 6) {
            return validation(format!("stencil order must be 2, 4 or 6, got {order}"));
        }
        Ok(Self { order, h: None })
    }

    /// Scheme with an explicit step, required for pointwise evaluation.
    pub fn with_step(order: usize, h: T) -> Result<Self> {
        if !(h > T::zero() && h.is_finite()) {
            return validation(format!("stencil step must be positive, got {h}"));
        }
        Ok(Self { h: Some(h), ..Self::new(order)? })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn step(&self) -> Option<T> {
        self.h
    }
}

/// Offsets and weights of a central stencil for `d^power/dx^power` on unit
/// spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub power: usize,
    pub offsets: Vec<isize>,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn radius(&self) -> usize {
        self.offsets.len() / 2
    }

    fn weights_as<T: Scalar>(&self) -> Vec<T> {
        self.weights.iter().map(|&w| lit(w)).collect()
    }
}

/// Central stencil of the given accuracy order for the `power`-th derivative.
pub fn central_stencil(power: usize, order: usize) -> Result<Stencil> {
    if power == 0 || power > MAX_POWER {
        return validation(format!("derivative power must be 1..={MAX_POWER}, got {power}"));
    }
    if !matches!(order, 2 | 4 | 6) {
        return validation(format!("stencil order must be 2, 4 or 6, got {order}"));
    }
    let points = 2 * power.div_ceil(2) - 1 + order;
    let radius = (points / 2) as isize;
    let offsets: Vec<isize> = (-radius..=radius).collect();
    let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let mut weights = fornberg(&nodes, power);
    // Central weights are exactly (anti)symmetric; remove roundoff asymmetry.
    let sign = if power.is_multiple_of(2) { 1.0 } else { -1.0 };
    let r = radius as usize;
    for k in 1..=r {
        let avg = 0.5 * (weights[r + k] + sign * weights[r - k]);
        weights[r + k] = avg;
        weights[r - k] = sign * avg;
    }
    if power % 2 == 1 {
        weights[r] = 0.0;
    }
    Ok(Stencil { power, offsets, weights })
}

/// Fornberg's recursion for finite-difference weights at `z = 0`.
fn fornberg(nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Central finite-difference approximation of `d^power/d(axis)^power`.
///
/// Samples outside the grid are treated as zero, so boundary points use the
/// same stencil as interior points.
pub fn partial_derivative<T: Scalar>(
    field: &RealField<T>,
    axis: AxisKind,
    power: usize,
    scheme: &StencilScheme<T>,
) -> Result<RealField<T>> {
    let k = field.axis_position(axis)?;
    let stencil = central_stencil(power, scheme.order())?;
    let n = field.axis(k).len();
    if n < scheme.order() + power {
        return validation(format!(
            "axis {axis} has {n} points; order-{} stencil for power {power} needs {}",
            scheme.order(),
            scheme.order() + power
        ));
    }
    let h = scheme.step().unwrap_or_else(|| field.axis(k).step());
    let scale = T::one() / h.powi(power as i32);
    let weights: Vec<T> = stencil.weights_as();
    let stride = strides_of(&field.shape())[k];
    let data = field.data();
    let out: Vec<T> = (0..field.len())
        .into_par_iter()
        .map(|flat| {
            let pos = ((flat / stride) % n) as isize;
            let mut acc = T::zero();
            for (&off, &w) in stencil.offsets.iter().zip(&weights) {
                let q = pos + off;
                if w != T::zero() && q >= 0 && (q as usize) < n {
                    let idx = (flat as isize + off * stride as isize) as usize;
                    acc += w * data[idx];
                }
            }
            acc * scale
        })
        .collect();
    Ok(RealField::from_parts(field.axes().to_vec(), out))
}

/// Applies `partial_derivative` once per axis with a nonzero power.
pub fn mixed_derivative<T: Scalar>(
    field: &RealField<T>,
    powers: &[(AxisKind, usize)],
    scheme: &StencilScheme<T>,
) -> Result<RealField<T>> {
    let mut out = field.clone();
    for &(axis, p) in powers.iter().filter(|(_, p)| *p > 0) {
        out = partial_derivative(&out, axis, p, scheme)?;
    }
    Ok(out)
}

/// Step-weighted Riemann sum over one axis, multiplied by `weight`.
///
/// The result has one axis fewer; integrating a rank-1 field gives a rank-0
/// field holding the scalar.
pub fn integrate_axis<T: Scalar>(
    field: &RealField<T>,
    axis: AxisKind,
    weight: T,
) -> Result<RealField<T>> {
    let k = field.axis_position(axis)?;
    let shape = field.shape();
    let n = shape[k];
    let inner: usize = shape[k + 1..].iter().product();
    let outer: usize = shape[..k].iter().product();
    let factor = weight * field.axis(k).step();
    let data = field.data();
    let out: Vec<T> = (0..outer * inner)
        .into_par_iter()
        .map(|j| {
            let (o, i) = (j / inner, j % inner);
            let base = o * n * inner + i;
            let mut acc = T::zero();
            for s in 0..n {
                acc += data[base + s * inner];
            }
            acc * factor
        })
        .collect();
    let axes = field
        .axes()
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, a)| *a)
        .collect();
    Ok(RealField::from_parts(axes, out))
}
