//! Polynomial potentials `U(x, v) = sum c_ab x^a v^b` with exact derivatives.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{validation, Error, Result};
use crate::scalar::{falling, Scalar};

/// One `coeff * x^x_power * v^v_power` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial<T> {
    pub x_power: u32,
    pub v_power: u32,
    pub coeff: T,
}

/// Finite sum of monomials in position and velocity. Terms are kept sorted
/// by `(x_power, v_power)` with duplicates merged and zeros dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialPotential<T> {
    terms: Vec<Monomial<T>>,
}

impl<T: Scalar> PolynomialPotential<T> {
    pub fn new(terms: impl IntoIterator<Item = (u32, u32, T)>) -> Result<Self> {
        let mut merged: BTreeMap<(u32, u32), T> = BTreeMap::new();
        for (a, b, c) in terms {
            if !c.is_finite() {
                return validation(format!("coefficient of x^{a} v^{b} is not finite"));
            }
            *merged.entry((a, b)).or_insert_with(T::zero) += c;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != T::zero())
            .map(|((x_power, v_power), coeff)| Monomial { x_power, v_power, coeff })
            .collect();
        Ok(Self { terms })
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[Monomial<T>] {
        &self.terms
    }

    /// Total degree `max(a + b)`; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.x_power + t.v_power).max().unwrap_or(0)
    }

    pub fn is_velocity_independent(&self) -> bool {
        self.terms.iter().all(|t| t.v_power == 0)
    }

    pub fn eval(&self, x: T, v: T) -> T {
        self.derivative(0, 0, x, v)
    }

    /// Exact `d^dx/dx^dx d^dv/dv^dv U` at `(x, v)`.
    pub fn derivative(&self, dx: u32, dv: u32, x: T, v: T) -> T {
        self.terms
            .iter()
            .filter(|t| t.x_power >= dx && t.v_power >= dv)
            .fold(T::zero(), |acc, t| {
                acc + t.coeff
                    * falling::<T>(t.x_power, dx)
                    * falling::<T>(t.v_power, dv)
                    * x.powi((t.x_power - dx) as i32)
                    * v.powi((t.v_power - dv) as i32)
            })
    }

    /// Whether `d^dx/dx d^dv/dv U` is not identically zero.
    pub fn has_derivative(&self, dx: u32, dv: u32) -> bool {
        self.terms.iter().any(|t| t.x_power >= dx && t.v_power >= dv)
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::new(self.terms.iter().map(|t| (t.x_power, t.v_power, t.coeff * factor)))
            .expect("scaling finite coefficients")
    }

    /// Parses the line format `<a> <b> <coeff>`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Format(format!("potential line {}: {what}: {raw:?}", lineno + 1));
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad("expected `<a> <b> <coeff>`"));
            }
            let a: u32 = parts[0].parse().map_err(|_| bad("bad x power"))?;
            let b: u32 = parts[1].parse().map_err(|_| bad("bad v power"))?;
            let c: f64 = parts[2].parse().map_err(|_| bad("bad coefficient"))?;
            let c = T::from_f64(c).filter(|c| c.is_finite()).ok_or_else(|| bad("coefficient not finite"))?;
            terms.push((a, b, c));
        }
        Self::new(terms)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# a b coeff  (coeff * x^a * v^b)\n");
        for t in &self.terms {
            let c = t.coeff.to_f64().unwrap_or(f64::NAN);
            let _ = writeln!(out, "{} {} {:e}", t.x_power, t.v_power, c);
        }
        out
    }
}
