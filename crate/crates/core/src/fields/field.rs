use num_complex::Complex;
use rayon::prelude::*;

use super::axis::{AxisGrid, AxisKind};
use crate::error::{validation, Error, Result};
use crate::scalar::Scalar;

/// Value type a [`Field`] can hold.
pub trait Element<T>: Copy + Send + Sync + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn is_finite(&self) -> bool;
}

impl<T: Scalar> Element<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn is_finite(&self) -> bool {
        num_traits::Float::is_finite(*self)
    }
}

impl<T: Scalar> Element<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Dense field sampled on a tensor grid of 1 to 4 uniform axes, stored
/// row-major with the last axis fastest.
///
/// A rank-0 field (one value, no axes) only appears as the result of
/// integrating out the last remaining axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T, E> {
    axes: Vec<AxisGrid<T>>,
    data: Vec<E>,
}

pub type RealField<T> = Field<T, T>;
pub type ComplexField<T> = Field<T, Complex<T>>;

pub const MAX_RANK: usize = 4;

impl<T: Scalar, E: Element<T>> Field<T, E> {
    pub fn new(axes: Vec<AxisGrid<T>>, data: Vec<E>) -> Result<Self> {
        check_axes(&axes)?;
        let expected: usize = axes.iter().map(AxisGrid::len).product();
        if data.len() != expected {
            return validation(format!(
                "data length {} does not match grid size {expected}",
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value at flat index {pos}")));
        }
        Ok(Self { axes, data })
    }

    pub fn zeros(axes: Vec<AxisGrid<T>>) -> Result<Self> {
        check_axes(&axes)?;
        let len = axes.iter().map(AxisGrid::len).product();
        Ok(Self { axes, data: vec![E::zero(); len] })
    }

    /// Wraps already-validated parts; used by kernels that build output
    /// from finite inputs.
    pub(crate) fn from_parts(axes: Vec<AxisGrid<T>>, data: Vec<E>) -> Self {
        debug_assert_eq!(data.len(), axes.iter().map(AxisGrid::len).product::<usize>());
        Self { axes, data }
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisGrid<T>] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &AxisGrid<T> {
        &self.axes[k]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(AxisGrid::len).collect()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn into_data(self) -> Vec<E> {
        self.data
    }

    /// Position of the axis with the given role.
    pub fn axis_position(&self, kind: AxisKind) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.kind() == kind)
            .ok_or_else(|| Error::Validation(format!("field has no {kind} axis")))
    }

    pub fn has_axis(&self, kind: AxisKind) -> bool {
        self.axes.iter().any(|a| a.kind() == kind)
    }

    pub fn axis_kinds(&self) -> Vec<AxisKind> {
        self.axes.iter().map(AxisGrid::kind).collect()
    }

    /// Row-major strides, in elements.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape())
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(self.strides())
            .map(|(i, s)| i * s)
            .sum()
    }

    pub fn get(&self, index: &[usize]) -> E {
        self.data[self.flat_index(index)]
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.rank()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = flat % axis.len();
            flat /= axis.len();
        }
        out
    }

    /// Grid coordinates of a flat index.
    pub fn coords_of(&self, flat: usize) -> Vec<T> {
        self.unravel(flat)
            .into_iter()
            .zip(&self.axes)
            .map(|(i, a)| a.coord(i))
            .collect()
    }

    /// Value of a rank-0 field.
    pub fn scalar(&self) -> Option<E> {
        (self.rank() == 0).then(|| self.data[0])
    }

    pub fn same_grid<F: Element<T>>(&self, other: &Field<T, F>) -> bool {
        self.axes == other.axes
    }

    pub fn map<F: Element<T>>(&self, f: impl Fn(E) -> F + Sync + Send) -> Field<T, F> {
        Field {
            axes: self.axes.clone(),
            data: self.data.par_iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T: Scalar> RealField<T> {
    /// Largest absolute value.
    pub fn peak_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: T) -> Self {
        self.map(|v| v * factor)
    }

    /// Pointwise `self + factor * other` on an identical grid.
    pub fn add_scaled(&self, other: &Self, factor: T) -> Result<Self> {
        if !self.same_grid(other) {
            return validation("fields live on different grids");
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + factor * b)
            .collect();
        Ok(Self::from_parts(self.axes.clone(), data))
    }

    /// Pointwise product on an identical grid.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return validation("fields live on different grids");
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).collect();
        Ok(Self::from_parts(self.axes.clone(), data))
    }

    /// `self += weight(coords) * src` pointwise on an identical grid.
    pub fn accumulate(&mut self, src: &Self, weight: impl Fn(&[T]) -> T + Sync) -> Result<()> {
        if !self.same_grid(src) {
            return validation("fields live on different grids");
        }
        let shape = self.shape();
        let strides = strides_of(&shape);
        let axes = &self.axes;
        self.data
            .par_iter_mut()
            .zip(src.data.par_iter())
            .enumerate()
            .for_each_init(
                || vec![T::zero(); axes.len()],
                |coords, (flat, (dst, &s))| {
                    for (k, a) in axes.iter().enumerate() {
                        coords[k] = a.coord((flat / strides[k]) % shape[k]);
                    }
                    *dst += weight(coords) * s;
                },
            );
        Ok(())
    }

    /// Largest absolute pointwise difference on an identical grid.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if !self.same_grid(other) {
            return validation("fields live on different grids");
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

fn check_axes<T: Scalar>(axes: &[AxisGrid<T>]) -> Result<()> {
    if axes.is_empty() || axes.len() > MAX_RANK {
        return validation(format!("field rank must be 1..={MAX_RANK}, got {}", axes.len()));
    }
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.kind() == a.kind()) {
            return validation(format!("axis {} appears twice", a.kind()));
        }
    }
    Ok(())
}

fn sample<T, E, F>(f: F, axes: Vec<AxisGrid<T>>) -> Result<Field<T, E>>
where
    T: Scalar,
    E: Element<T>,
    F: Fn(&[T]) -> E + Sync,
{
    check_axes(&axes)?;
    let shape: Vec<usize> = axes.iter().map(AxisGrid::len).collect();
    let strides = strides_of(&shape);
    let len: usize = shape.iter().product();
    let data: Vec<E> = (0..len)
        .into_par_iter()
        .map_init(
            || vec![T::zero(); axes.len()],
            |coords, flat| {
                for (k, a) in axes.iter().enumerate() {
                    coords[k] = a.coord((flat / strides[k]) % shape[k]);
                }
                f(coords)
            },
        )
        .collect();
    Field::new(axes, data)
}

/// Samples a real function of the axis coordinates.
pub fn sample_real<T, F>(f: F, axes: Vec<AxisGrid<T>>) -> Result<RealField<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    sample(f, axes)
}

/// Samples a complex function of the axis coordinates.
pub fn sample_complex<T, F>(f: F, axes: Vec<AxisGrid<T>>) -> Result<ComplexField<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Complex<T> + Sync,
{
    sample(f, axes)
}
