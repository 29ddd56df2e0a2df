//! Brute-force series oracles and polynomial test densities.
//!
//! Every sum here enumerates the full double index range of the series
//! directly, with its own factorials and its own polynomial calculus, so it
//! shares nothing with the library's term tables beyond the inputs.

#![allow(dead_code)]

use psimoyal::fields::Jet;
use psimoyal::PolynomialPotential;
use rand::rngs::StdRng;
use rand::Rng;

/// Largest `l` enumerated; terms beyond the potential's degree are zero.
pub const L_BRUTE: u32 = 8;

fn fact(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `d^k/dz^k z^e` coefficient.
fn falling(e: u32, k: u32) -> f64 {
    if k > e {
        0.0
    } else {
        (0..k).map(|j| f64::from(e - j)).product()
    }
}

/// Multivariate polynomial `sum c * prod z_k^e_k` with exact derivatives.
#[derive(Debug, Clone)]
pub struct Poly<const N: usize> {
    pub terms: Vec<(f64, [u32; N])>,
}

impl<const N: usize> Poly<N> {
    pub fn derivative(&self, orders: &[usize], z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| {
                let mut v = *c;
                for k in 0..N {
                    let o = orders[k] as u32;
                    v *= falling(e[k], o);
                    if v == 0.0 {
                        return 0.0;
                    }
                    v *= z[k].powi((e[k] - o) as i32);
                }
                v
            })
            .sum()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.derivative(&[0; N], z)
    }

    /// Random polynomial with exponents up to `max_deg` per variable and a
    /// constant large enough to keep it positive on `[-1, 1]^N`.
    pub fn random_positive(rng: &mut StdRng, count: usize, max_deg: u32) -> Self {
        let mut terms: Vec<(f64, [u32; N])> = (0..count)
            .map(|_| (rng.gen_range(-1.0..1.0), std::array::from_fn(|_| rng.gen_range(0..=max_deg))))
            .collect();
        let bound: f64 = terms.iter().map(|(c, _)| c.abs()).sum();
        terms.push((bound + 1.0, [0; N]));
        Self { terms }
    }
}

/// Exact jet of a polynomial at a point.
pub struct PolyJet<'a, const N: usize> {
    pub poly: &'a Poly<N>,
    pub point: [f64; N],
}

impl<const N: usize> Jet<f64> for PolyJet<'_, N> {
    fn derivative(&self, orders: &[usize]) -> psimoyal::Result<f64> {
        Ok(self.poly.derivative(orders, &self.point))
    }
}

/// Potential given as raw `(a, b, c)` triples, differentiated here.
#[derive(Debug, Clone)]
pub struct RawPotential(pub Vec<(u32, u32, f64)>);

impl RawPotential {
    pub fn derivative(&self, dx: u32, dv: u32, x: f64, v: f64) -> f64 {
        self.0
            .iter()
            .map(|&(a, b, c)| {
                let k = falling(a, dx) * falling(b, dv);
                if k == 0.0 {
                    0.0
                } else {
                    c * k * x.powi((a - dx) as i32) * v.powi((b - dv) as i32)
                }
            })
            .sum()
    }

    pub fn to_library(&self) -> PolynomialPotential<f64> {
        PolynomialPotential::new(self.0.iter().copied()).expect("finite coefficients")
    }

    pub fn random(rng: &mut StdRng, count: usize, max_deg: u32, velocity: bool) -> Self {
        Self(
            (0..count)
                .map(|_| {
                    let a = rng.gen_range(0..=max_deg);
                    let b = if velocity { rng.gen_range(0..=max_deg - a) } else { 0 };
                    (a, b, rng.gen_range(-1.0..1.0))
                })
                .collect(),
        )
    }
}

/// Value of a series and the sum of its absolute terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sum {
    pub value: f64,
    pub scale: f64,
}

impl Sum {
    fn add(&mut self, t: f64) {
        self.value += t;
        self.scale += t.abs();
    }

    /// `|value - other| / scale` (absolute when the scale is zero).
    pub fn relative_to(&self, other: f64) -> f64 {
        let d = (self.value - other).abs();
        if self.scale > 0.0 {
            d / self.scale
        } else {
            d
        }
    }
}

/// Right-hand side of the momentum-form Psi-Moyal equation, all `l >= 0`,
/// for `W` given in velocity variables. Momentum derivatives are velocity
/// derivatives over `m`, both on `U(r, p/m)` and on `W`.
pub fn psi_moyal_momentum_rhs(u: &RawPotential, w: &Poly<4>, z: [f64; 4], m: f64, hbar2: f64) -> Sum {
    let mut s = Sum::default();
    for l in 0..=L_BRUTE {
        for n in 0..=2 * l + 1 {
            let k = 2 * l + 1 - n;
            let sign = if (n + l) % 2 == 0 { 1.0 } else { -1.0 };
            let coef = sign * (hbar2 / 2.0).powi(2 * l as i32) * m.powi(k as i32)
                / (fact(n) * fact(k));
            // U_p derivative: d_r^n d_p^k U(r, p/m) = m^-k d_x^n d_v^k U.
            let du = u.derivative(n, k, z[0], z[1]) / m.powi(k as i32);
            // W derivative: d_pddot^n d_pdot^k W = m^-(n+k) d_vddot^n d_vdot^k W.
            let dw = w.derivative(&[0, 0, k as usize, n as usize], &z) / m.powi((n + k) as i32);
            s.add(coef * du * dw);
        }
    }
    s
}

/// `v W_x + vdot W_v + vddot W_vdot`, the free part of the transport.
pub fn free_streaming(w: &Poly<4>, z: [f64; 4]) -> f64 {
    z[1] * w.derivative(&[1, 0, 0, 0], &z)
        + z[2] * w.derivative(&[0, 1, 0, 0], &z)
        + z[3] * w.derivative(&[0, 0, 1, 0], &z)
}

/// Velocity-form series, `l >= 1` only.
pub fn second_moyal_general(u: &RawPotential, w: &Poly<4>, z: [f64; 4], m: f64, hbar2: f64) -> Sum {
    let mut s = Sum::default();
    for l in 1..=L_BRUTE {
        for n in 0..=2 * l + 1 {
            let k = 2 * l + 1 - n;
            let sign = if (n + l) % 2 == 0 { 1.0 } else { -1.0 };
            let coef = sign * (hbar2 / (2.0 * m)).powi(2 * l as i32) / (m * fact(n) * fact(k));
            let du = u.derivative(n, k, z[0], z[1]);
            let dw = w.derivative(&[0, 0, k as usize, n as usize], &z);
            s.add(coef * du * dw);
        }
    }
    s
}

/// Single-sum form for a velocity-independent potential, `l >= 1`.
pub fn second_moyal_single(u1: &RawPotential, w: &Poly<4>, z: [f64; 4], m: f64, hbar2: f64) -> Sum {
    let mut s = Sum::default();
    for l in 1..=L_BRUTE {
        let p = 2 * l + 1;
        let sign = if (l + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * (hbar2 / (2.0 * m)).powi(2 * l as i32) / (m * fact(p));
        s.add(coef * u1.derivative(p, 0, z[0], z[1]) * w.derivative(&[0, 0, 0, p as usize], &z));
    }
    s
}

/// Acceleration flux series of a density on any axes, differentiating
/// along `axis`; `z[0]`, `z[1]` are `x`, `v`.
pub fn accel_flux<const N: usize>(u: &RawPotential, f: &Poly<N>, z: &[f64; N], axis: usize, m: f64, hbar2: f64) -> Sum {
    let mut s = Sum::default();
    let f0 = f.eval(z);
    for l in 0..=L_BRUTE {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * (hbar2 / (2.0 * m)).powi(2 * l as i32) / (m * fact(2 * l + 1));
        let mut orders = [0usize; N];
        orders[axis] = 2 * l as usize;
        s.add(coef * u.derivative(2 * l + 1, 0, z[0], z[1]) * f.derivative(&orders, z) / f0);
    }
    s
}

/// Velocity flux series on `(x, v)`.
pub fn velocity_flux(u1: &RawPotential, f: &Poly<2>, z: &[f64; 2], m: f64, hbar2: f64) -> Sum {
    let mut s = Sum::default();
    let f0 = f.eval(z);
    for l in 0..=L_BRUTE {
        let sign = if (l + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * (hbar2 / (2.0 * m)).powi(2 * l as i32) / (m * fact(2 * l + 1));
        s.add(coef * u1.derivative(2 * l + 1, 0, z[0], z[1]) * f.derivative(&[0, 2 * l as usize], z) / f0);
    }
    s
}
