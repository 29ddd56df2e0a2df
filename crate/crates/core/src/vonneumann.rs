//! Mode-space density matrix `rho_kn = conj(C_n) C_k` of a superposition of
//! eigenmodes with possibly complex energies, and its evolution law
//! `d rho/dt = (i/hbar2) (rho conj(H) - H rho)` with diagonal `H`.

use num_complex::Complex;

use crate::error::{validation, Error, Result};
use crate::scalar::{lit, Scalar};

/// Eigenvalues `E_n`, coefficients `c_n` and the constant `hbar2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet<T> {
    energies: Vec<Complex<T>>,
    coeffs: Vec<Complex<T>>,
    hbar2: T,
}

impl<T: Scalar> ModeSet<T> {
    pub fn new(energies: Vec<Complex<T>>, coeffs: Vec<Complex<T>>, hbar2: T) -> Result<Self> {
        if energies.is_empty() || energies.len() != coeffs.len() {
            return validation(format!(
                "need equally many energies and coefficients (at least one), got {} and {}",
                energies.len(),
                coeffs.len()
            ));
        }
        if !(hbar2 > T::zero() && hbar2.is_finite()) {
            return validation(format!("hbar2 must be positive, got {hbar2}"));
        }
        if energies.iter().chain(&coeffs).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return validation("mode data must be finite");
        }
        Ok(Self { energies, coeffs, hbar2 })
    }

    /// Parses lines `ReE ImE Rec Imc`; `#` starts a comment.
    pub fn parse(text: &str, hbar2: T) -> Result<Self> {
        let mut energies = Vec::new();
        let mut coeffs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<T> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().ok().and_then(T::from_f64).ok_or_else(|| {
                        Error::Format(format!("line {}: bad number {tok:?}", no + 1))
                    })
                })
                .collect::<Result<_>>()?;
            let [er, ei, cr, ci] = vals[..] else {
                return Err(Error::Format(format!(
                    "line {}: expected 4 numbers, got {}",
                    no + 1,
                    vals.len()
                )));
            };
            energies.push(Complex::new(er, ei));
            coeffs.push(Complex::new(cr, ci));
        }
        if energies.is_empty() {
            return Err(Error::Format("mode file has no modes".into()));
        }
        Self::new(energies, coeffs, hbar2)
    }

    pub fn to_text(&self) -> String {
        self.energies
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| format!("{:e} {:e} {:e} {:e}\n", e.re, e.im, c.re, c.im))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[Complex<T>] {
        &self.energies
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn hbar2(&self) -> T {
        self.hbar2
    }
}

/// Dense square complex matrix stamped with the time it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    n: usize,
    entries: Vec<Complex<T>>,
    t: T,
}

impl<T: Scalar> DensityMatrix<T> {
    pub fn from_entries(n: usize, entries: Vec<Complex<T>>, t: T) -> Result<Self> {
        if entries.len() != n * n {
            return validation(format!("{n}x{n} matrix needs {} entries", n * n));
        }
        Ok(Self { n, entries, t })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> T {
        self.t
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn get(&self, k: usize, n: usize) -> Complex<T> {
        self.entries[k * self.n + n]
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).map(|k| self.get(k, k)).fold(zero(), |a, b| a + b)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = vec![zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    out[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Self { n, entries: out, t: self.t }
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// `max |rho_kn - conj(rho_nk)|`.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for k in 0..self.n {
            for n in 0..self.n {
                worst = worst.max((self.get(k, n) - self.get(n, k).conj()).norm());
            }
        }
        worst
    }

    /// `max |rho^2 - tr(rho) rho|`, zero for a rank-one projector shape.
    pub fn projector_defect(&self) -> T {
        let sq = self.matmul(self);
        let tr = self.trace();
        sq.entries
            .iter()
            .zip(&self.entries)
            .fold(T::zero(), |m, (a, b)| m.max((a - tr * b).norm()))
    }
}

fn zero<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// `C_n(t) = c_n exp(-i E_n t / hbar2)`.
pub fn coefficients_at<T: Scalar>(modes: &ModeSet<T>, t: T) -> Vec<Complex<T>> {
    let minus_i = Complex::new(T::zero(), -T::one());
    modes
        .energies
        .iter()
        .zip(&modes.coeffs)
        .map(|(&e, &c)| c * (minus_i * e * (t / modes.hbar2)).exp())
        .collect()
}

/// `rho_kn = conj(C_n(t)) C_k(t)`.
pub fn density_matrix_at<T: Scalar>(modes: &ModeSet<T>, t: T) -> DensityMatrix<T> {
    let c = coefficients_at(modes, t);
    let n = c.len();
    let entries = (0..n * n).map(|i| c[i % n].conj() * c[i / n]).collect();
    DensityMatrix { n, entries, t }
}

/// Closed-form `d rho_kn/dt = (i/hbar2) (conj(E_n) - E_k) rho_kn`.
pub fn rho_time_derivative<T: Scalar>(modes: &ModeSet<T>, t: T) -> DensityMatrix<T> {
    let rho = density_matrix_at(modes, t);
    let n = rho.n;
    let i_h = Complex::new(T::zero(), T::one() / modes.hbar2);
    let e = &modes.energies;
    let entries = (0..n * n)
        .map(|idx| {
            let (k, j) = (idx / n, idx % n);
            i_h * (e[j].conj() - e[k]) * rho.entries[idx]
        })
        .collect();
    DensityMatrix { n, entries, t }
}

/// `(i/hbar2) (rho conj(H) - H rho)` with `H = diag(E)`, as full matrix
/// products.
pub fn commutator_rhs<T: Scalar>(modes: &ModeSet<T>, rho: &DensityMatrix<T>) -> DensityMatrix<T> {
    let n = rho.n;
    let mut h = vec![zero(); n * n];
    let mut hbar = vec![zero(); n * n];
    for (k, e) in modes.energies.iter().enumerate() {
        h[k * n + k] = *e;
        hbar[k * n + k] = e.conj();
    }
    let h = DensityMatrix { n, entries: h, t: rho.t };
    let hbar = DensityMatrix { n, entries: hbar, t: rho.t };
    let a = rho.matmul(&hbar);
    let b = h.matmul(rho);
    let i_h = Complex::new(T::zero(), T::one() / modes.hbar2);
    let entries = a.entries.iter().zip(&b.entries).map(|(x, y)| i_h * (x - y)).collect();
    DensityMatrix { n, entries, t: rho.t }
}

/// `max |closed-form derivative - commutator form|`.
pub fn von_neumann_residual<T: Scalar>(modes: &ModeSet<T>, t: T) -> T {
    let rho = density_matrix_at(modes, t);
    rho_time_derivative(modes, t).max_abs_diff(&commutator_rhs(modes, &rho))
}

/// Centered difference of the density matrix with step `dt` against the
/// closed-form derivative, relative to the derivative's largest entry.
pub fn finite_difference_residual<T: Scalar>(modes: &ModeSet<T>, t: T, dt: T) -> Result<T> {
    if dt.is_nan() || dt <= T::zero() {
        return validation("time step must be positive");
    }
    let plus = density_matrix_at(modes, t + dt);
    let minus = density_matrix_at(modes, t - dt);
    let two_dt = lit::<T>(2.0) * dt;
    let fd: Vec<Complex<T>> =
        plus.entries.iter().zip(&minus.entries).map(|(a, b)| (a - b) / two_dt).collect();
    let exact = rho_time_derivative(modes, t);
    let fd = DensityMatrix { n: exact.n, entries: fd, t };
    let diff = fd.max_abs_diff(&exact);
    let scale = exact.max_abs();
    Ok(if scale > T::zero() { diff / scale } else { diff })
}

/// `sum_n |c_n|^2 exp(2 Im(E_n) t / hbar2)`, the trace of `rho(t)`.
pub fn trace_closed_form<T: Scalar>(modes: &ModeSet<T>, t: T) -> T {
    let two = lit::<T>(2.0);
    modes
        .energies
        .iter()
        .zip(&modes.coeffs)
        .map(|(e, c)| c.norm_sqr() * (two * e.im * t / modes.hbar2).exp())
        .fold(T::zero(), |a, b| a + b)
}
