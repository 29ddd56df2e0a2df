use std::fmt;
use std::str::FromStr;

use crate::error::{validation, Error, Result};
use crate::scalar::{count, Scalar};

/// Role of a grid axis. Field axes follow the canonical order
/// `x, v, vdot, vddot`; `s1`/`s2` label the half-shift axes of the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisKind {
    X,
    V,
    Vdot,
    Vddot,
    S1,
    S2,
}

impl AxisKind {
    pub const ALL: [AxisKind; 6] = [
        AxisKind::X,
        AxisKind::V,
        AxisKind::Vdot,
        AxisKind::Vddot,
        AxisKind::S1,
        AxisKind::S2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AxisKind::X => "x",
            AxisKind::V => "v",
            AxisKind::Vdot => "vdot",
            AxisKind::Vddot => "vddot",
            AxisKind::S1 => "s1",
            AxisKind::S2 => "s2",
        }
    }
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AxisKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown axis label {s:?}")))
    }
}

/// Uniform, endpoint-exclusive axis: sample `i` sits at `min + i * step`
/// with `step = (max - min) / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisGrid<T> {
    kind: AxisKind,
    n: usize,
    min: T,
    max: T,
    step: T,
}

impl<T: Scalar> AxisGrid<T> {
    pub fn new(kind: AxisKind, min: T, max: T, n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return validation(format!(
                "axis {kind}: point count must be even and at least 4, got {n}"
            ));
        }
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return validation(format!("axis {kind}: need finite min < max, got [{min}, {max})"));
        }
        let step = (max - min) / count::<T>(n);
        Ok(Self { kind, n, min, max, step })
    }

    /// Builds an axis from a label string such as `"vdot"`.
    pub fn named(name: &str, min: T, max: T, n: usize) -> Result<Self> {
        Self::new(name.parse()?, min, max, n)
    }

    /// Axis of `n` points with spacing `step`, whose sample `n/2` sits at zero.
    pub fn centered(kind: AxisKind, step: T, n: usize) -> Result<Self> {
        let half = count::<T>(n / 2) * step;
        Self::new(kind, -half, half, n)
    }

    pub fn kind(&self) -> AxisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn min(&self) -> T {
        self.min
    }

    pub fn max(&self) -> T {
        self.max
    }

    pub fn step(&self) -> T {
        self.step
    }

    #[inline]
    pub fn coord(&self, i: usize) -> T {
        self.min + count::<T>(i) * self.step
    }

    pub fn coords(&self) -> Vec<T> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Same samples under a different label.
    pub fn relabel(&self, kind: AxisKind) -> Self {
        Self { kind, ..*self }
    }

    /// Index of the grid node nearest to `value`; exact midpoints go to the
    /// lower node. Values outside the axis clamp to the end nodes.
    pub fn nearest_index(&self, value: T) -> usize {
        let r = (value - self.min) / self.step;
        let idx = (r - lit_half::<T>()).ceil();
        if idx <= T::zero() {
            0
        } else {
            idx.to_usize().unwrap_or(usize::MAX).min(self.n - 1)
        }
    }
}

fn lit_half<T: Scalar>() -> T {
    T::one() / (T::one() + T::one())
}
