//! Closed-form ground state of the phase-space harmonic oscillator: the
//! wave function, its generalized Wigner functions and mean fluxes.
//!
//! Every numerical route in the crate is checked against these.

use num_complex::Complex;

use crate::error::{validation, Error, Result};
use crate::fields::Jet;
use crate::potential::PolynomialPotential;
use crate::scalar::{lit, Scalar};
use crate::vlasov::FluxKind;

/// Physical constants: mass `m`, Planck-type constants `hbar` and `hbar2`,
/// oscillator frequency `omega`, and `omega2` which only sets the energy
/// `E12 = hbar2 * omega2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams<T> {
    m: T,
    hbar: T,
    hbar2: T,
    omega: T,
    omega2: T,
}

impl<T: Scalar> PhysParams<T> {
    /// Parameters with `hbar2 = hbar * omega^2` and `omega2 = omega`.
    pub fn new(m: T, hbar: T, omega: T) -> Result<Self> {
        for (name, val) in [("m", m), ("hbar", hbar), ("omega", omega)] {
            if !(val > T::zero() && val.is_finite()) {
                return validation(format!("{name} must be positive and finite, got {val}"));
            }
        }
        Ok(Self { m, hbar, hbar2: hbar * omega * omega, omega, omega2: omega })
    }

    /// `m = hbar = omega = 1`, hence `hbar2 = 1`.
    pub fn unit() -> Self {
        Self::new(T::one(), T::one(), T::one()).expect("unit parameters")
    }

    pub fn with_hbar2(self, hbar2: T) -> Result<Self> {
        if !(hbar2 > T::zero() && hbar2.is_finite()) {
            return validation(format!("hbar2 must be positive and finite, got {hbar2}"));
        }
        Ok(Self { hbar2, ..self })
    }

    pub fn with_omega2(self, omega2: T) -> Result<Self> {
        if !omega2.is_finite() {
            return validation("omega2 must be finite");
        }
        Ok(Self { omega2, ..self })
    }

    pub fn m(&self) -> T {
        self.m
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    pub fn hbar2(&self) -> T {
        self.hbar2
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn omega2(&self) -> T {
        self.omega2
    }

    pub fn e12(&self) -> T {
        self.hbar2 * self.omega2 / lit(2.0)
    }

    /// `hbar2 == hbar * omega^2` up to a few ulps.
    pub fn is_ho_consistent(&self) -> bool {
        let expect = self.hbar * self.omega * self.omega;
        (self.hbar2 - expect).abs() <= lit::<T>(8.0) * T::epsilon() * expect
    }
}

/// Exact oscillator quantities for HO-consistent parameters.
#[derive(Debug, Clone, Copy)]
pub struct HoOracle<T> {
    p: PhysParams<T>,
}

impl<T: Scalar> HoOracle<T> {
    pub fn new(p: PhysParams<T>) -> Result<Self> {
        if !p.is_ho_consistent() {
            return validation(format!(
                "oscillator closed forms need hbar2 = hbar*omega^2 ({}), got {}",
                p.hbar * p.omega * p.omega,
                p.hbar2
            ));
        }
        Ok(Self { p })
    }

    pub fn params(&self) -> &PhysParams<T> {
        &self.p
    }

    /// `m / (hbar omega)`, the common exponent scale.
    fn k(&self) -> T {
        self.p.m / (self.p.hbar * self.p.omega)
    }

    /// Phase-space wave function of the oscillator ground state.
    pub fn psi12(&self, x: T, v: T, t: T) -> Complex<T> {
        let PhysParams { m, hbar, hbar2, omega, .. } = self.p;
        let half = lit::<T>(0.5);
        let amp = (m / (T::PI() * hbar)).sqrt();
        let re = -(half * m * v * v + half * m * omega * omega * x * x) / (hbar * omega);
        let im = -(m * omega * omega * x * v / hbar2 + self.p.e12() * t / hbar2);
        Complex::from_polar(amp * re.exp(), im)
    }

    /// Second-rank potential the wave function solves.
    pub fn potential_u12(&self, x: T, v: T) -> T {
        self.u12_polynomial().eval(x, v)
    }

    /// `U12` as coefficients `{c00, c02, c20}`.
    pub fn u12_polynomial(&self) -> PolynomialPotential<T> {
        u12_for(&self.p)
    }

    /// First-rank oscillator potential `m omega^2 x^2 / 2`.
    pub fn u1_polynomial(&self) -> PolynomialPotential<T> {
        PolynomialPotential::new([(2, 0, lit::<T>(0.5) * self.p.m * self.p.omega * self.p.omega)])
            .expect("finite coefficient")
    }

    pub fn gamma(&self, x: T, v: T, vdot: T, vddot: T) -> GammaForm<T> {
        gamma_form(x, v, vdot, vddot, self.p.omega)
    }

    pub fn w1234(&self, x: T, v: T, vdot: T, vddot: T) -> T {
        let g = gamma_form(x, v, vdot, vddot, self.p.omega).value;
        let pref = T::one() / (T::PI() * self.p.hbar2).powi(2);
        pref * (-self.k() * g).exp()
    }

    pub fn w123(&self, x: T, v: T, vdot: T) -> T {
        let PhysParams { m, hbar, omega, .. } = self.p;
        let q = (omega * omega * x + vdot) / omega;
        let pref = (m / (T::PI() * hbar * omega).powi(3)).sqrt();
        pref * (-self.k() * (v * v + omega * omega * x * x + q * q)).exp()
    }

    pub fn w124(&self, x: T, v: T, vddot: T) -> T {
        let PhysParams { m, hbar2, omega, .. } = self.p;
        let q = (vddot - omega * omega * v) / (omega * omega);
        let pref = (m * omega / (T::PI() * hbar2).powi(3)).sqrt();
        pref * (-self.k() * (v * v + omega * omega * x * x + q * q)).exp()
    }

    pub fn w12(&self, x: T, v: T) -> T {
        let PhysParams { m, hbar, omega, .. } = self.p;
        m / (T::PI() * hbar) * (-self.k() * (v * v + omega * omega * x * x)).exp()
    }

    /// Closed-form mean fluxes. The fourth-rank and `1,2,4` acceleration
    /// fluxes coincide for this state.
    pub fn mean_flux(&self, which: FluxKind, x: T, v: T) -> T {
        let w2 = self.p.omega * self.p.omega;
        match which {
            FluxKind::Accel123 => w2 * v,
            FluxKind::Accel124 | FluxKind::Accel1234 => -w2 * w2 * x,
            FluxKind::Vel124 | FluxKind::Vel12 => -w2 * x,
        }
    }

    /// Value and exact first derivatives of the fourth-rank Wigner function
    /// at `point = [x, v, vdot, vddot]`.
    pub fn w1234_jet(&self, point: [T; 4]) -> GammaJet<T> {
        let [x, v, vd, vdd] = point;
        GammaJet {
            value: self.w1234(x, v, vd, vdd),
            scale: -self.k(),
            gamma: self.gamma(x, v, vd, vdd),
        }
    }
}

/// Oscillator potential in `x, v` for the given constants.
pub(crate) fn u12_for<T: Scalar>(p: &PhysParams<T>) -> PolynomialPotential<T> {
    let PhysParams { m, hbar, hbar2, omega, .. } = *p;
    let w2 = omega * omega;
    let c00 = p.e12() - hbar2 * hbar2 / (lit::<T>(2.0) * hbar * omega);
    let c02 = m * w2 * (T::one() + hbar2 * hbar2 / (lit::<T>(2.0) * hbar * hbar * w2 * w2));
    let c20 = -lit::<T>(0.5) * m * w2 * w2;
    PolynomialPotential::new([(0, 0, c00), (0, 2, c02), (2, 0, c20)]).expect("finite coefficients")
}

/// Exponent form `gamma` of the fourth-rank oscillator Wigner function and
/// its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaForm<T> {
    pub value: T,
    pub dx: T,
    pub dv: T,
    pub dvdot: T,
    pub dvddot: T,
}

impl<T: Scalar> GammaForm<T> {
    pub fn gradient(&self) -> [T; 4] {
        [self.dx, self.dv, self.dvdot, self.dvddot]
    }
}

pub fn gamma_form<T: Scalar>(x: T, v: T, vdot: T, vddot: T, omega: T) -> GammaForm<T> {
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let w2 = omega * omega;
    let w4 = w2 * w2;
    let a = w2 * v - vddot;
    let b = w2 * x + vdot;
    GammaForm {
        value: v * v + w2 * x * x + a * a / w4 + b * b / w2,
        dx: four * w2 * x + two * vdot,
        dv: four * v - two * vddot / w2,
        dvdot: two * x + two * vdot / w2,
        dvddot: -two * v / w2 + two * vddot / w4,
    }
}

/// Transport operator of the oscillator applied to `gamma`; identically zero.
pub fn check_identity_b8<T: Scalar>(x: T, v: T, vdot: T, vddot: T, omega: T) -> T {
    let g = gamma_form(x, v, vdot, vddot, omega);
    let w2 = omega * omega;
    v * g.dx + vdot * g.dv + (vddot - lit::<T>(3.0) * w2 * v) * g.dvdot - w2 * w2 * x * g.dvddot
}

/// Value and exact first derivatives of `C exp(scale * gamma)`.
#[derive(Debug, Clone, Copy)]
pub struct GammaJet<T> {
    value: T,
    scale: T,
    gamma: GammaForm<T>,
}

impl<T: Scalar> Jet<T> for GammaJet<T> {
    fn derivative(&self, orders: &[usize]) -> Result<T> {
        if orders.len() != 4 {
            return validation("oscillator jet is rank 4");
        }
        match orders.iter().sum::<usize>() {
            0 => Ok(self.value),
            1 => {
                let k = orders.iter().position(|&o| o == 1).unwrap_or(0);
                Ok(self.scale * self.value * self.gamma.gradient()[k])
            }
            _ => Err(Error::Validation(
                "oscillator jet only carries first derivatives".into(),
            )),
        }
    }
}

/// Radiated power `N = v dU1/dx` of a stationary first-rank potential and
/// the acceleration flux `(1/m) dN/dx` it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiationPower<T> {
    pub power: T,
    pub accel: T,
}

pub fn radiation_power<T: Scalar>(
    x: T,
    v: T,
    m: T,
    u1: &PolynomialPotential<T>,
) -> Result<RadiationPower<T>> {
    if !u1.is_velocity_independent() {
        return validation("radiation power needs a velocity-independent potential");
    }
    Ok(RadiationPower {
        power: v * u1.derivative(1, 0, x, v),
        accel: v * u1.derivative(2, 0, x, v) / m,
    })
}
