//! Generalized Wigner transforms of a sampled phase-space wave function and
//! the marginal reductions between ranks.
//!
//! Shifts are sampled at `s = 2 k step` so that `x +- s/2` lands on grid
//! nodes; samples outside the grid count as zero. The conjugate momenta are
//! reported as velocities `vdot = pdot / m`, `vddot = pddot / m` on axes fixed
//! by DFT conjugacy.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::{integrate_axis, AxisGrid, AxisKind, ComplexField, RealField};
use crate::oracle::PhysParams;
use crate::scalar::{count, lit, Scalar};

/// Largest accepted ratio of the dropped imaginary part to the peak, for
/// `f64`. Narrower scalars use `1e6` machine epsilons instead, whichever is
/// larger (see [`imag_tolerance`]).
pub const IMAG_TOLERANCE: f64 = 1e-10;

/// Imaginary-residue bound for the scalar type in use.
pub fn imag_tolerance<T: Scalar>() -> T {
    lit::<T>(IMAG_TOLERANCE).max(lit::<T>(1e6) * T::epsilon())
}

/// Grids involved in a transform of a wave function sampled on `(x, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformPlan<T> {
    x: AxisGrid<T>,
    v: AxisGrid<T>,
    s1: AxisGrid<T>,
    s2: AxisGrid<T>,
    vdot: AxisGrid<T>,
    vddot: AxisGrid<T>,
    hbar2: T,
    m: T,
}

impl<T: Scalar> TransformPlan<T> {
    pub fn new(x: AxisGrid<T>, v: AxisGrid<T>, params: &PhysParams<T>) -> Result<Self> {
        for a in [&x, &v] {
            if !a.len().is_power_of_two() {
                return Err(Error::Plan(format!(
                    "axis {} has {} points; the transform needs a power of two",
                    a.kind(),
                    a.len()
                )));
            }
        }
        let two = lit::<T>(2.0);
        let (hbar2, m) = (params.hbar2(), params.m());
        let dual = |a: &AxisGrid<T>| T::PI() * hbar2 / (count::<T>(a.len()) * a.step());
        Ok(Self {
            s1: AxisGrid::centered(AxisKind::S1, two * x.step(), x.len())?,
            s2: AxisGrid::centered(AxisKind::S2, two * v.step(), v.len())?,
            vddot: AxisGrid::centered(AxisKind::Vddot, dual(&x) / m, x.len())?,
            vdot: AxisGrid::centered(AxisKind::Vdot, dual(&v) / m, v.len())?,
            x,
            v,
            hbar2,
            m,
        })
    }

    /// Plan for a rank-2 field on `(x, v)`.
    pub fn for_field(psi: &ComplexField<T>, params: &PhysParams<T>) -> Result<Self> {
        if psi.rank() != 2
            || psi.axis(0).kind() != AxisKind::X
            || psi.axis(1).kind() != AxisKind::V
        {
            return Err(Error::Validation(format!(
                "wave function must be rank 2 on (x, v), got axes {:?}",
                psi.axis_kinds()
            )));
        }
        Self::new(*psi.axis(0), *psi.axis(1), params)
    }

    pub fn x(&self) -> &AxisGrid<T> {
        &self.x
    }

    pub fn v(&self) -> &AxisGrid<T> {
        &self.v
    }

    pub fn s1(&self) -> &AxisGrid<T> {
        &self.s1
    }

    pub fn s2(&self) -> &AxisGrid<T> {
        &self.s2
    }

    /// Velocity axis conjugate to `s2`.
    pub fn vdot(&self) -> &AxisGrid<T> {
        &self.vdot
    }

    /// Velocity axis conjugate to `s1`.
    pub fn vddot(&self) -> &AxisGrid<T> {
        &self.vddot
    }

    pub fn hbar2(&self) -> T {
        self.hbar2
    }

    pub fn m(&self) -> T {
        self.m
    }

    /// Output axes of the fourth-rank transform.
    pub fn rank4_axes(&self) -> Vec<AxisGrid<T>> {
        vec![self.x, self.v, self.vdot, self.vddot]
    }
}

/// Sign of the exponent in one of the transform kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSign {
    Plus,
    Minus,
}

/// Fourth-rank Wigner function on `(x, v, vdot, vddot)`.
pub fn wigner4<T: Scalar>(psi: &ComplexField<T>, params: &PhysParams<T>) -> Result<RealField<T>> {
    wigner4_with_signs(psi, params, KernelSign::Plus, KernelSign::Minus)
}

/// [`wigner4`] with explicit kernel signs for the `s1` and `s2` shifts; the
/// physical convention is `(Plus, Minus)`.
pub fn wigner4_with_signs<T: Scalar>(
    psi: &ComplexField<T>,
    params: &PhysParams<T>,
    s1_sign: KernelSign,
    s2_sign: KernelSign,
) -> Result<RealField<T>> {
    let plan = TransformPlan::for_field(psi, params)?;
    let (nx, nv) = (plan.x.len(), plan.v.len());
    let two_pi_h = lit::<T>(2.0) * T::PI() * plan.hbar2;
    let pref = lit::<T>(4.0) * plan.x.step() * plan.v.step() / (two_pi_h * two_pi_h);

    let mut planner = FftPlanner::<T>::new();
    let fft_k = planner.plan_fft(nx, direction(s1_sign));
    let fft_l = planner.plan_fft(nv, direction(s2_sign));
    let data = psi.data();
    let block = nx * nv;
    let mut out = vec![T::zero(); nx * nv * block];

    let imag_peak = out
        .par_chunks_mut(block)
        .enumerate()
        .map_init(
            || Scratch::new(nx, nv, &fft_k, &fft_l),
            |scr, (ij, chunk)| {
                let (i, j) = (ij / nv, ij % nv);
                // K[k][l] with k, l stored in FFT order (negative shifts wrapped).
                for ks in 0..nx {
                    let k = signed(ks, nx);
                    for ls in 0..nv {
                        let l = signed(ls, nv);
                        scr.buf[ks * nv + ls] = shifted_product(data, nx, nv, i, j, k, l);
                    }
                }
                for row in scr.buf.chunks_exact_mut(nv) {
                    fft_l.process_with_scratch(row, &mut scr.fft_scratch);
                }
                for ls in 0..nv {
                    for ks in 0..nx {
                        scr.col[ks] = scr.buf[ks * nv + ls];
                    }
                    fft_k.process_with_scratch(&mut scr.col, &mut scr.fft_scratch);
                    for ks in 0..nx {
                        scr.buf[ks * nv + ls] = scr.col[ks];
                    }
                }
                // Output block is [vdot][vddot]; dual index a maps to a + n/2.
                let mut imag = T::zero();
                for ks in 0..nx {
                    let a = centered_slot(ks, nx);
                    for ls in 0..nv {
                        let b = centered_slot(ls, nv);
                        let z = scr.buf[ks * nv + ls] * pref;
                        chunk[b * nx + a] = z.re;
                        imag = imag.max(z.im.abs());
                    }
                }
                imag
            },
        )
        .reduce(T::zero, T::max);

    finish(plan.rank4_axes(), out, imag_peak)
}

/// Third-rank Wigner function on `(x, v, vdot)` from the single `s2` shift.
pub fn wigner3<T: Scalar>(psi: &ComplexField<T>, params: &PhysParams<T>) -> Result<RealField<T>> {
    let plan = TransformPlan::for_field(psi, params)?;
    let pref = lit::<T>(2.0) * plan.v.step() / (lit::<T>(2.0) * T::PI() * plan.hbar2);
    let axes = vec![plan.x, plan.v, plan.vdot];
    single_shift(psi, &plan, Shift::V, rustfft::FftDirection::Forward, pref, axes)
}

/// Third-rank Wigner function on `(x, v, vddot)` from the single `s1` shift.
pub fn wigner24<T: Scalar>(psi: &ComplexField<T>, params: &PhysParams<T>) -> Result<RealField<T>> {
    let plan = TransformPlan::for_field(psi, params)?;
    let pref = lit::<T>(2.0) * plan.x.step() / (lit::<T>(2.0) * T::PI() * plan.hbar2);
    let axes = vec![plan.x, plan.v, plan.vddot];
    single_shift(psi, &plan, Shift::X, rustfft::FftDirection::Inverse, pref, axes)
}

/// `m * integral dvddot` of a fourth-rank field.
pub fn wigner4_marginal_to_3<T: Scalar>(
    w4: &RealField<T>,
    params: &PhysParams<T>,
) -> Result<RealField<T>> {
    check_kinds(w4, &[AxisKind::X, AxisKind::V, AxisKind::Vdot, AxisKind::Vddot])?;
    integrate_axis(w4, AxisKind::Vddot, params.m())
}

/// `m * integral dvdot` of a fourth-rank field.
pub fn wigner4_marginal_to_24<T: Scalar>(
    w4: &RealField<T>,
    params: &PhysParams<T>,
) -> Result<RealField<T>> {
    check_kinds(w4, &[AxisKind::X, AxisKind::V, AxisKind::Vdot, AxisKind::Vddot])?;
    integrate_axis(w4, AxisKind::Vdot, params.m())
}

/// `m`-weighted integral of a third-rank field over its `vdot` or `vddot`
/// axis, giving a field on `(x, v)`.
pub fn marginal_to_2<T: Scalar>(w3: &RealField<T>, params: &PhysParams<T>) -> Result<RealField<T>> {
    let kinds = w3.axis_kinds();
    let axis = match kinds.as_slice() {
        [AxisKind::X, AxisKind::V, k @ (AxisKind::Vdot | AxisKind::Vddot)] => *k,
        _ => {
            return Err(Error::Validation(format!(
                "expected a rank-3 field on (x, v, vdot|vddot), got {kinds:?}"
            )))
        }
    };
    integrate_axis(w3, axis, params.m())
}

/// `|psi|^2` as a real field on the same grid.
pub fn density<T: Scalar>(psi: &ComplexField<T>) -> RealField<T> {
    psi.map(|z| z.norm_sqr())
}

fn check_kinds<T: Scalar>(f: &RealField<T>, expect: &[AxisKind]) -> Result<()> {
    if f.axis_kinds() != expect {
        return Err(Error::Validation(format!(
            "expected axes {expect:?}, got {:?}",
            f.axis_kinds()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Shift {
    X,
    V,
}

fn single_shift<T: Scalar>(
    psi: &ComplexField<T>,
    plan: &TransformPlan<T>,
    shift: Shift,
    dir: rustfft::FftDirection,
    pref: T,
    axes: Vec<AxisGrid<T>>,
) -> Result<RealField<T>> {
    let (nx, nv) = (plan.x.len(), plan.v.len());
    let n = match shift {
        Shift::X => nx,
        Shift::V => nv,
    };
    let fft = FftPlanner::<T>::new().plan_fft(n, dir);
    let data = psi.data();
    let mut out = vec![T::zero(); nx * nv * n];
    let imag_peak = out
        .par_chunks_mut(n)
        .enumerate()
        .map_init(
            || {
                let zero = Complex::new(T::zero(), T::zero());
                (vec![zero; n], vec![zero; fft.get_inplace_scratch_len()])
            },
            |(buf, scratch), (ij, chunk)| {
                let (i, j) = (ij / nv, ij % nv);
                for (s, slot) in buf.iter_mut().enumerate() {
                    let k = signed(s, n);
                    *slot = match shift {
                        Shift::X => shifted_product(data, nx, nv, i, j, k, 0),
                        Shift::V => shifted_product(data, nx, nv, i, j, 0, k),
                    };
                }
                fft.process_with_scratch(buf, scratch);
                let mut imag = T::zero();
                for (s, z) in buf.iter().enumerate() {
                    let z = *z * pref;
                    chunk[centered_slot(s, n)] = z.re;
                    imag = imag.max(z.im.abs());
                }
                imag
            },
        )
        .reduce(T::zero, T::max);
    finish(axes, out, imag_peak)
}

fn finish<T: Scalar>(axes: Vec<AxisGrid<T>>, out: Vec<T>, imag_peak: T) -> Result<RealField<T>> {
    let field = RealField::new(axes, out)?;
    let peak = field.peak_abs();
    if imag_peak > imag_tolerance::<T>() * peak {
        return Err(Error::Numeric(format!(
            "transform has imaginary part {imag_peak:e} against peak {peak:e}"
        )));
    }
    Ok(field)
}

struct Scratch<T> {
    buf: Vec<Complex<T>>,
    col: Vec<Complex<T>>,
    fft_scratch: Vec<Complex<T>>,
}

impl<T: Scalar> Scratch<T> {
    fn new(nx: usize, nv: usize, a: &Arc<dyn Fft<T>>, b: &Arc<dyn Fft<T>>) -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        let len = a.get_inplace_scratch_len().max(b.get_inplace_scratch_len());
        Self { buf: vec![zero; nx * nv], col: vec![zero; nx], fft_scratch: vec![zero; len] }
    }
}

fn direction(sign: KernelSign) -> rustfft::FftDirection {
    match sign {
        KernelSign::Plus => rustfft::FftDirection::Inverse,
        KernelSign::Minus => rustfft::FftDirection::Forward,
    }
}

/// Shift index in FFT storage order mapped to `[-n/2, n/2)`.
#[inline]
fn signed(s: usize, n: usize) -> isize {
    if s < n / 2 {
        s as isize
    } else {
        s as isize - n as isize
    }
}

/// Position of FFT output bin `q` on the centered dual axis.
#[inline]
fn centered_slot(q: usize, n: usize) -> usize {
    (q + n / 2) % n
}

/// `conj(psi[i-k, j-l]) * psi[i+k, j+l]`, zero when either node is off-grid.
#[inline]
fn shifted_product<T: Scalar>(
    data: &[Complex<T>],
    nx: usize,
    nv: usize,
    i: usize,
    j: usize,
    k: isize,
    l: isize,
) -> Complex<T> {
    let (i, j) = (i as isize, j as isize);
    let inside = |a: isize, b: isize| a >= 0 && (a as usize) < nx && b >= 0 && (b as usize) < nv;
    if !inside(i - k, j - l) || !inside(i + k, j + l) {
        return Complex::new(T::zero(), T::zero());
    }
    let lo = data[(i - k) as usize * nv + (j - l) as usize];
    let hi = data[(i + k) as usize * nv + (j + l) as usize];
    lo.conj() * hi
}
