//! The Psi-Moyal operator on fourth-rank fields: the transport part
//!
//! `v dW/dx + vdot dW/dv + (vddot - U_v/m) dW/dvdot + (U_x/m) dW/dvddot`
//!
//! and the odd-order series coupling derivatives of a polynomial potential
//! to derivatives of `W`. Position derivatives of `U` pair with `vddot`
//! derivatives of `W`, velocity derivatives of `U` with `vdot` derivatives.
//!
//! Derivatives of `U` are exact; derivatives of `W` come either from stored
//! grids (stencils over the samples) or from a [`Jet`] at a single point.

use crate::error::{validation, Result};
use crate::fields::{mixed_derivative, AxisKind, Jet, RealField, StencilScheme};
use crate::oracle::PhysParams;
use crate::potential::PolynomialPotential;
use crate::scalar::{factorial, lit, Scalar};

/// One term `coeff * d^u_dx_x d^u_dv_v U * d^w_dvdot_vdot d^w_dvddot_vddot W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoyalTerm<T> {
    pub l: u32,
    pub n: u32,
    pub coeff: T,
    pub u_dx: u32,
    pub u_dv: u32,
    pub w_dvdot: usize,
    pub w_dvddot: usize,
}

impl<T> MoyalTerm<T> {
    /// Derivative orders on the canonical `(x, v, vdot, vddot)` axes.
    pub fn w_orders(&self) -> [usize; 4] {
        [0, 0, self.w_dvdot, self.w_dvddot]
    }
}

/// Nonvanishing `l >= 1` terms of the series for a given potential, in
/// `(l, n)` lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct MoyalTermTable<T> {
    terms: Vec<MoyalTerm<T>>,
    l_max: u32,
}

impl<T> MoyalTermTable<T> {
    pub fn terms(&self) -> &[MoyalTerm<T>] {
        &self.terms
    }

    /// Highest `l` a polynomial of this degree can reach.
    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Coefficient `(-1)^(n+l) (hbar2/2m)^(2l) / (n! (2l-n+1)!) / m`.
pub fn term_coefficient<T: Scalar>(l: u32, n: u32, params: &PhysParams<T>) -> T {
    let m = params.m();
    let a = params.hbar2() / (lit::<T>(2.0) * m);
    let sign = if (n + l).is_multiple_of(2) { T::one() } else { -T::one() };
    let k = (2 * l + 1 - n) as usize;
    sign * a.powi(2 * l as i32) / (factorial::<T>(n as usize) * factorial::<T>(k) * m)
}

pub fn build_term_table<T: Scalar>(
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
) -> MoyalTermTable<T> {
    let deg = u.degree();
    let l_max = deg.saturating_sub(1) / 2;
    let mut terms = Vec::new();
    for l in 1..=l_max {
        for n in 0..=2 * l + 1 {
            let (u_dx, u_dv) = (n, 2 * l + 1 - n);
            if !u.has_derivative(u_dx, u_dv) {
                continue;
            }
            terms.push(MoyalTerm {
                l,
                n,
                coeff: term_coefficient(l, n, params),
                u_dx,
                u_dv,
                w_dvdot: u_dv as usize,
                w_dvddot: u_dx as usize,
            });
        }
    }
    MoyalTermTable { terms, l_max }
}

/// Series right-hand side at `point = [x, v, vdot, vddot]`.
pub fn moyal_rhs_at<T: Scalar>(
    jet: &impl Jet<T>,
    point: &[T; 4],
    table: &MoyalTermTable<T>,
    u: &PolynomialPotential<T>,
) -> Result<T> {
    let (x, v) = (point[0], point[1]);
    let mut acc = T::zero();
    for t in &table.terms {
        acc += t.coeff * u.derivative(t.u_dx, t.u_dv, x, v) * jet.derivative(&t.w_orders())?;
    }
    Ok(acc)
}

/// Transport operator at a point, plus `dt` (the time derivative of `W`,
/// zero for stationary states).
pub fn transport_lhs_at<T: Scalar>(
    jet: &impl Jet<T>,
    point: &[T; 4],
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
    dt: T,
) -> Result<T> {
    let coeffs = transport_coefficients(point, u, params);
    let mut acc = dt;
    for (k, c) in coeffs.iter().enumerate() {
        let mut orders = [0; 4];
        orders[k] = 1;
        acc += *c * jet.derivative(&orders)?;
    }
    Ok(acc)
}

/// Transport minus series at a point, for a stationary state.
pub fn psi_moyal_residual_at<T: Scalar>(
    jet: &impl Jet<T>,
    point: &[T; 4],
    table: &MoyalTermTable<T>,
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
) -> Result<T> {
    Ok(transport_lhs_at(jet, point, u, params, T::zero())? - moyal_rhs_at(jet, point, table, u)?)
}

/// Series of the second Moyal equation for a velocity-independent
/// potential: `sum_(l>=1) (-1)^(l+1) (hbar2/2m)^(2l) / (m (2l+1)!) U^(2l+1) d^(2l+1)W/dvddot^(2l+1)`.
pub fn second_moyal_rhs_at<T: Scalar>(
    jet: &impl Jet<T>,
    point: &[T; 4],
    u1: &PolynomialPotential<T>,
    params: &PhysParams<T>,
) -> Result<T> {
    if !u1.is_velocity_independent() {
        return validation("second Moyal series needs a velocity-independent potential");
    }
    let m = params.m();
    let a = params.hbar2() / (lit::<T>(2.0) * m);
    let mut acc = T::zero();
    for l in 1..=u1.degree().saturating_sub(1) / 2 {
        let p = 2 * l + 1;
        let sign = if l % 2 == 1 { T::one() } else { -T::one() };
        let c = sign * a.powi(2 * l as i32) / (m * factorial::<T>(p as usize));
        let du = u1.derivative(p, 0, point[0], point[1]);
        acc += c * du * jet.derivative(&[0, 0, 0, p as usize])?;
    }
    Ok(acc)
}

/// Coefficients of the four first derivatives in the transport operator.
pub fn transport_coefficients<T: Scalar>(
    point: &[T],
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
) -> [T; 4] {
    let (x, v) = (point[0], point[1]);
    let m = params.m();
    [
        v,
        point[2],
        point[3] - u.derivative(0, 1, x, v) / m,
        u.derivative(1, 0, x, v) / m,
    ]
}

/// Series right-hand side on a stored fourth-rank grid.
pub fn moyal_rhs<T: Scalar>(
    w4: &RealField<T>,
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
) -> Result<RealField<T>> {
    check_canonical(w4)?;
    let table = build_term_table(u, params);
    let mut out = RealField::zeros(w4.axes().to_vec())?;
    for t in table.terms() {
        let d = mixed_derivative(
            w4,
            &[(AxisKind::Vdot, t.w_dvdot), (AxisKind::Vddot, t.w_dvddot)],
            scheme,
        )?;
        out.accumulate(&d, |c| t.coeff * u.derivative(t.u_dx, t.u_dv, c[0], c[1]))?;
    }
    Ok(out)
}

/// Transport operator on a stored fourth-rank grid; `dt_term` is added
/// when given.
pub fn transport_lhs<T: Scalar>(
    w4: &RealField<T>,
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
    dt_term: Option<&RealField<T>>,
) -> Result<RealField<T>> {
    check_canonical(w4)?;
    let mut out = match dt_term {
        Some(dt) if dt.same_grid(w4) => dt.clone(),
        Some(_) => return validation("time-derivative field lives on a different grid"),
        None => RealField::zeros(w4.axes().to_vec())?,
    };
    for (k, axis) in CANONICAL.iter().enumerate() {
        let d = mixed_derivative(w4, &[(*axis, 1)], scheme)?;
        out.accumulate(&d, |c| transport_coefficients(c, u, params)[k])?;
    }
    Ok(out)
}

/// `transport_lhs - moyal_rhs` for a stationary state on a stored grid.
pub fn psi_moyal_residual<T: Scalar>(
    w4: &RealField<T>,
    u: &PolynomialPotential<T>,
    params: &PhysParams<T>,
    scheme: &StencilScheme<T>,
) -> Result<RealField<T>> {
    let lhs = transport_lhs(w4, u, params, scheme, None)?;
    let rhs = moyal_rhs(w4, u, params, scheme)?;
    lhs.add_scaled(&rhs, -T::one())
}

pub(crate) const CANONICAL: [AxisKind; 4] =
    [AxisKind::X, AxisKind::V, AxisKind::Vdot, AxisKind::Vddot];

pub(crate) fn check_canonical<T: Scalar>(w4: &RealField<T>) -> Result<()> {
    if w4.axis_kinds() != CANONICAL {
        return validation(format!(
            "expected a field on (x, v, vdot, vddot), got {:?}",
            w4.axis_kinds()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sample_real, AxisGrid, PointJet};
    use crate::oracle::HoOracle;

    fn unit() -> PhysParams<f64> {
        PhysParams::unit()
    }

    #[test]
    fn quadratic_table_is_empty() {
        let o = HoOracle::new(unit()).unwrap();
        let t = build_term_table(&o.u12_polynomial(), &unit());
        assert!(t.is_empty());
        assert_eq!(t.l_max(), 0);
    }

    #[test]
    fn quartic_single_term() {
        let u = PolynomialPotential::new([(4, 0, 1.0)]).unwrap();
        let t = build_term_table(&u, &unit());
        assert_eq!(t.len(), 1);
        let term = t.terms()[0];
        assert_eq!((term.l, term.n, term.w_dvddot, term.w_dvdot), (1, 3, 3, 0));
        // coeff * d^3(x^4) = x
        assert!((term.coeff * 24.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_quartic_two_terms() {
        let u = PolynomialPotential::new([(2, 2, 1.0)]).unwrap();
        let t = build_term_table(&u, &unit());
        let ns: Vec<u32> = t.terms().iter().map(|t| t.n).collect();
        assert_eq!(ns, vec![1, 2]);
    }

    #[test]
    fn never_emits_l0_and_scales_with_hbar2() {
        let u = PolynomialPotential::new([(5, 0, 1.0), (1, 4, 2.0), (3, 0, 1.0)]).unwrap();
        let p = unit();
        let t = build_term_table(&u, &p);
        assert!(t.terms().iter().all(|t| t.l >= 1));
        let q = p.with_hbar2(2.0).unwrap();
        let t2 = build_term_table(&u, &q);
        for (a, b) in t.terms().iter().zip(t2.terms()) {
            let factor = 4f64.powi(a.l as i32);
            assert!((b.coeff - factor * a.coeff).abs() < 1e-15 * b.coeff.abs().max(1.0));
        }
    }

    #[test]
    fn constant_field_zero_potential() {
        let axes: Vec<_> = ["x", "v", "vdot", "vddot"]
            .iter()
            .map(|k| AxisGrid::named(k, -1.0, 1.0, 8).unwrap())
            .collect();
        let f = |_: &[f64]| 3.0;
        let scheme = StencilScheme::with_step(4, 0.01).unwrap();
        let p = [0.1, 0.2, 0.3, 0.4];
        let jet = PointJet::new(&f, &p, scheme).unwrap();
        let u = PolynomialPotential::zero();
        let t = build_term_table(&u, &unit());
        assert_eq!(psi_moyal_residual_at(&jet, &p, &t, &u, &unit()).unwrap(), 0.0);
        let w = sample_real(f, axes).unwrap();
        let r = transport_lhs(&w, &u, &unit(), &StencilScheme::new(2).unwrap(), None).unwrap();
        // interior points see no boundary
        assert_eq!(r.get(&[4, 4, 4, 4]), 0.0);
    }

    #[test]
    fn ho_exact_jet_residual_vanishes() {
        let o = HoOracle::new(unit()).unwrap();
        let u = o.u12_polynomial();
        let t = build_term_table(&u, &unit());
        for p in [[0.3, -0.7, 1.2, 0.4], [1.5, 0.2, -0.9, -2.0]] {
            let r = psi_moyal_residual_at(&o.w1234_jet(p), &p, &t, &u, &unit()).unwrap();
            assert!(r.abs() < 1e-14, "{r}");
        }
    }

    #[test]
    fn ho_stencil_jet_residual_small() {
        let o = HoOracle::new(unit()).unwrap();
        let u = o.u12_polynomial();
        let t = build_term_table(&u, &unit());
        let f = |c: &[f64]| o.w1234(c[0], c[1], c[2], c[3]);
        let p = [0.3, -0.7, 1.2, 0.4];
        let jet = PointJet::new(&f, &p, StencilScheme::with_step(4, 0.01).unwrap()).unwrap();
        let r = psi_moyal_residual_at(&jet, &p, &t, &u, &unit()).unwrap();
        assert!(r.abs() < 1e-8, "{r}");
    }

    #[test]
    fn velocity_independent_matches_single_sum() {
        let u = PolynomialPotential::new([(4, 0, 0.25), (3, 0, -1.0), (5, 0, 0.1)]).unwrap();
        let p = PhysParams::new(1.3, 0.9, 1.1).unwrap();
        let g = |c: &[f64]| (-(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + 0.5 * c[3] * c[3])).exp();
        let point = [0.2, -0.4, 0.3, 0.7];
        let jet = PointJet::new(&g, &point, StencilScheme::with_step(4, 0.05).unwrap()).unwrap();
        let t = build_term_table(&u, &p);
        let a = moyal_rhs_at(&jet, &point, &t, &u).unwrap();
        let b = second_moyal_rhs_at(&jet, &point, &u, &p).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
    }
}
