//! Derivatives of callables at single points, for refinement beyond what a
//! stored grid can resolve.

use super::stencil::{central_stencil, Stencil, StencilScheme};
use crate::error::{validation, Result};
use crate::scalar::{lit, Scalar};

/// Source of mixed partial derivatives at one base point.
///
/// `orders[k]` is the derivative power along the k-th coordinate; all zeros
/// asks for the value itself.
pub trait Jet<T> {
    fn derivative(&self, orders: &[usize]) -> Result<T>;
}

/// Tensor-product central difference of `f` at `point`.
pub fn derivative_at<T, F>(
    f: &F,
    point: &[T],
    orders: &[usize],
    scheme: &StencilScheme<T>,
) -> Result<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + ?Sized,
{
    if orders.len() != point.len() {
        return validation(format!(
            "derivative orders have length {}, point has {} coordinates",
            orders.len(),
            point.len()
        ));
    }
    let active: Vec<(usize, Stencil)> = orders
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0)
        .map(|(k, &p)| central_stencil(p, scheme.order()).map(|s| (k, s)))
        .collect::<Result<_>>()?;
    if active.is_empty() {
        return Ok(f(point));
    }
    let h = match scheme.step() {
        Some(h) => h,
        None => return validation("pointwise derivatives need an explicit stencil step"),
    };
    let total_power: usize = active.iter().map(|(_, s)| s.power).sum();
    let scale = T::one() / h.powi(total_power as i32);

    // Odometer over the stencil product, innermost axis last.
    let mut cursor = vec![0usize; active.len()];
    let mut shifted = point.to_vec();
    let mut acc = T::zero();
    loop {
        let mut weight = T::one();
        for ((k, s), &c) in active.iter().zip(&cursor) {
            weight *= lit::<T>(s.weights[c]);
            shifted[*k] = point[*k] + lit::<T>(s.offsets[c] as f64) * h;
        }
        if weight != T::zero() {
            acc += weight * f(&shifted);
        }
        let mut d = active.len();
        loop {
            if d == 0 {
                return Ok(acc * scale);
            }
            d -= 1;
            cursor[d] += 1;
            if cursor[d] < active[d].1.offsets.len() {
                break;
            }
            cursor[d] = 0;
        }
    }
}

/// [`Jet`] that differentiates a callable with stencils of a fixed step.
pub struct PointJet<'a, T, F: ?Sized> {
    f: &'a F,
    point: Vec<T>,
    scheme: StencilScheme<T>,
}

impl<'a, T: Scalar, F: Fn(&[T]) -> T + ?Sized> PointJet<'a, T, F> {
    pub fn new(f: &'a F, point: &[T], scheme: StencilScheme<T>) -> Result<Self> {
        if scheme.step().is_none() {
            return validation("pointwise derivatives need an explicit stencil step");
        }
        Ok(Self { f, point: point.to_vec(), scheme })
    }

    pub fn point(&self) -> &[T] {
        &self.point
    }
}

impl<T: Scalar, F: Fn(&[T]) -> T + ?Sized> Jet<T> for PointJet<'_, T, F> {
    fn derivative(&self, orders: &[usize]) -> Result<T> {
        derivative_at(self.f, &self.point, orders, &self.scheme)
    }
}
