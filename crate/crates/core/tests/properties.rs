use num_complex::Complex;
use proptest::prelude::*;
use psimoyal::fields::{integrate_axis, partial_derivative, sample_complex, sample_real, PointJet};
use psimoyal::io::{decode_field, encode_field, FieldData};
use psimoyal::moyal::{build_term_table, moyal_rhs_at};
use psimoyal::oracle::check_identity_b8;
use psimoyal::vonneumann::von_neumann_residual;
use psimoyal::*;

fn axis(kind: AxisKind, half: f64, n: usize) -> AxisGrid64 {
    AxisGrid::new(kind, -half, half, n).unwrap()
}

fn xv_field(values: &[f64]) -> RealField64 {
    RealField::new(vec![axis(AxisKind::X, 2.0, 8), axis(AxisKind::V, 3.0, 8)], values.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_is_linear(
        a in prop::collection::vec(-1.0f64..1.0, 64),
        b in prop::collection::vec(-1.0f64..1.0, 64),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        power in 1usize..4,
    ) {
        let (fa, fb) = (xv_field(&a), xv_field(&b));
        let scheme = StencilScheme::new(4).unwrap();
        let combo = fa.scaled(alpha).add_scaled(&fb, beta).unwrap();
        let lhs = partial_derivative(&combo, AxisKind::V, power, &scheme).unwrap();
        let rhs = partial_derivative(&fa, AxisKind::V, power, &scheme).unwrap().scaled(alpha)
            .add_scaled(&partial_derivative(&fb, AxisKind::V, power, &scheme).unwrap(), beta).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-11 * (1.0 + lhs.peak_abs()));
    }

    #[test]
    fn integration_order_commutes(a in prop::collection::vec(-1.0f64..1.0, 64), m in 0.1f64..5.0) {
        let f = xv_field(&a);
        let xv = integrate_axis(&integrate_axis(&f, AxisKind::X, m).unwrap(), AxisKind::V, m).unwrap();
        let vx = integrate_axis(&integrate_axis(&f, AxisKind::V, m).unwrap(), AxisKind::X, m).unwrap();
        let (p, q) = (xv.scalar().unwrap(), vx.scalar().unwrap());
        prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
    }

    #[test]
    fn quadratic_form_identity(
        x in -10.0f64..10.0, v in -10.0f64..10.0, a in -10.0f64..10.0, b in -10.0f64..10.0,
        omega in 0.5f64..2.0,
    ) {
        let scale = (1.0 + x.abs() + v.abs() + a.abs() + b.abs()).powi(2) * omega.powi(6).max(1.0);
        prop_assert!(check_identity_b8(x, v, a, b, omega).abs() <= 1e-13 * scale);
    }

    #[test]
    fn von_neumann_identity(
        modes in prop::collection::vec((-3.0f64..3.0, -0.3f64..0.3, -1.0f64..1.0, -1.0f64..1.0), 1..10),
        t in -2.0f64..2.0,
        hbar2 in 0.2f64..3.0,
    ) {
        let energies = modes.iter().map(|m| Complex::new(m.0, m.1)).collect();
        let coeffs = modes.iter().map(|m| Complex::new(m.2, m.3)).collect();
        let set = ModeSet::new(energies, coeffs, hbar2).unwrap();
        let rho = vonneumann::density_matrix_at(&set, t);
        let scale = rho.max_abs() * 6.0 / hbar2;
        prop_assert!(von_neumann_residual(&set, t) <= 1e-13 * (1.0 + scale));
        prop_assert!((rho.trace().re - vonneumann::trace_closed_form(&set, t)).abs() <= 1e-12 * (1.0 + rho.trace().re));
    }

    #[test]
    fn field_file_round_trip(
        shape in prop::collection::vec(2usize..5, 1..4),
        lo in -100.0f64..0.0,
        span in 0.1f64..50.0,
        seed in any::<u64>(),
        complex in any::<bool>(),
    ) {
        let axes: Vec<AxisGrid64> = shape.iter().enumerate()
            .map(|(k, &n)| AxisGrid::new(AxisKind::ALL[k], lo, lo + span * (k + 1) as f64, 2 * n).unwrap())
            .collect();
        let len: usize = axes.iter().map(|a| a.len()).product();
        // Arbitrary finite bit patterns, including subnormals and -0.0.
        let mut state = seed;
        let mut next = || {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            let v = f64::from_bits(state);
            if v.is_finite() { v } else { -0.0 }
        };
        let data = if complex {
            FieldData::Complex(ComplexField::new(axes, (0..len).map(|_| Complex::new(next(), next())).collect()).unwrap())
        } else {
            FieldData::Real(RealField::new(axes, (0..len).map(|_| next()).collect()).unwrap())
        };
        let bytes = encode_field(&data).unwrap();
        let back = decode_field::<f64>(&bytes).unwrap();
        prop_assert_eq!(encode_field(&back).unwrap(), bytes);
    }

    #[test]
    fn term_table_counts_nonzero_pairings(
        monos in prop::collection::vec((0u32..8, 0u32..8, 0.5f64..2.0), 1..8),
    ) {
        let u = PolynomialPotential::new(monos.iter().copied()).unwrap();
        let p = PhysParams::unit();
        // Count (l, n) pairs some monomial survives, straight from the exponents.
        let deg = monos.iter().map(|m| m.0 + m.1).max().unwrap();
        let mut expect = 0;
        for l in 1..=deg {
            for n in 0..=2 * l + 1 {
                if monos.iter().any(|&(a, b, _)| a >= n && b >= 2 * l + 1 - n) {
                    expect += 1;
                }
            }
        }
        prop_assert_eq!(build_term_table(&u, &p).len(), expect);
    }

    #[test]
    fn moyal_series_is_linear_in_the_potential(
        m1 in prop::collection::vec((0u32..6, 0u32..6, -1.0f64..1.0), 1..5),
        m2 in prop::collection::vec((0u32..6, 0u32..6, -1.0f64..1.0), 1..5),
        pt in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let p = PhysParams::unit();
        let (u1, u2) = (PolynomialPotential::new(m1.clone()).unwrap(), PolynomialPotential::new(m2.clone()).unwrap());
        let sum = PolynomialPotential::new(m1.into_iter().chain(m2)).unwrap();
        let f = |c: &[f64]| (-(c[0] * c[0] + 0.5 * c[1] * c[1] + c[2] * c[2] + 0.7 * c[3] * c[3])).exp();
        let jet = PointJet::new(&f, &pt, StencilScheme::with_step(4, 0.1).unwrap()).unwrap();
        let rhs = |u: &PolynomialPotential64| moyal_rhs_at(&jet, &pt, &build_term_table(u, &p), u).unwrap();
        let (a, b, s) = (rhs(&u1), rhs(&u2), rhs(&sum));
        prop_assert!((s - a - b).abs() <= 1e-9 * (1.0 + a.abs() + b.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Shifting the state by whole grid steps shifts the transform in x and v.
    #[test]
    fn transform_is_translation_covariant(dx in -3isize..=3, dv in -3isize..=3) {
        let p = PhysParams::unit();
        let axes = vec![axis(AxisKind::X, 8.0, 32), axis(AxisKind::V, 8.0, 32)];
        let h = axes[0].step();
        let state = |a: f64, b: f64| move |c: &[f64]| {
            let (x, v) = (c[0] - a, c[1] - b);
            Complex::new((-(x * x + 1.3 * v * v)).exp(), 0.0) * Complex::from_polar(1.0, 0.4 * x * v)
        };
        let w0 = wigner::wigner4(&sample_complex(state(0.0, 0.0), axes.clone()).unwrap(), &p).unwrap();
        let w1 = wigner::wigner4(&sample_complex(state(dx as f64 * h, dv as f64 * h), axes).unwrap(), &p).unwrap();
        let shape = w0.shape();
        let mut worst = 0.0f64;
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                let (si, sj) = (i as isize - dx, j as isize - dv);
                if si < 0 || sj < 0 || si >= shape[0] as isize || sj >= shape[1] as isize {
                    continue;
                }
                for a in 0..shape[2] {
                    for b in 0..shape[3] {
                        let d = w1.get(&[i, j, a, b]) - w0.get(&[si as usize, sj as usize, a, b]);
                        worst = worst.max(d.abs());
                    }
                }
            }
        }
        prop_assert!(worst <= 1e-12 * w0.peak_abs(), "worst {worst:e}");
    }
}

#[test]
fn jet_and_stencil_fluxes_agree() {
    let p = PhysParams::new(1.3, 1.0, 1.0).unwrap().with_hbar2(0.8).unwrap();
    let u = PolynomialPotential::new([(3, 0, 0.4), (4, 1, -0.2), (5, 0, 0.1)]).unwrap();
    let u1 = PolynomialPotential::new([(3, 0, 0.4), (5, 0, 0.1)]).unwrap();
    let f = |c: &[f64]| (-(c[0] * c[0] + c[1] * c[1] + 0.5 * (c[2] - 0.2).powi(2))).exp();
    let scheme = StencilScheme::with_step(6, 0.02).unwrap();
    for pt in [[0.1, -0.3, 0.2], [0.5, 0.4, -0.6], [-0.7, 0.2, 0.9]] {
        // Exact jet of the Gaussian along the last axis via Hermite values.
        struct Exact<'a>(&'a dyn Fn(&[f64]) -> f64, [f64; 3]);
        impl psimoyal::fields::Jet<f64> for Exact<'_> {
            fn derivative(&self, orders: &[usize]) -> psimoyal::Result<f64> {
                let z = self.1;
                let y = z[2] - 0.2;
                let base = (self.0)(&z);
                // d^k/dy^k exp(-y^2/2) = (-1)^k He_k(y) exp(-y^2/2).
                let he = |k: usize| match k {
                    0 => 1.0,
                    2 => y * y - 1.0,
                    4 => y.powi(4) - 6.0 * y * y + 3.0,
                    _ => unreachable!(),
                };
                assert!(orders[..2].iter().all(|&o| o == 0));
                Ok(he(orders[2]) * base)
            }
        }
        let exact = vlasov::accel_flux_from_jet(&Exact(&f, pt), &pt, 2, &u, &p).unwrap();
        let stencil = vlasov::accel_flux_at(&f, &pt, 2, &u, &p, &scheme).unwrap();
        assert!((exact - stencil).abs() <= 1e-8 * (1.0 + exact.abs()), "{exact} vs {stencil}");

        let g = |c: &[f64]| (-(c[0] * c[0] + 0.5 * (c[1] - 0.2).powi(2))).exp();
        let z2 = [pt[0], pt[1]];
        let stencil = vlasov::velocity_flux_at(&g, &z2, &u1, &p, &scheme).unwrap();
        let y = z2[1] - 0.2;
        let d2 = y * y - 1.0;
        let d4 = y.powi(4) - 6.0 * y * y + 3.0;
        let a = p.hbar2() / (2.0 * p.m());
        let m = p.m();
        let x = z2[0];
        let expect = -(1.2 * x * x + 0.5 * x.powi(4)) / m + a * a / (6.0 * m) * (2.4 + 6.0 * x * x) * d2
            - a.powi(4) / (120.0 * m) * 12.0 * d4;
        assert!((stencil - expect).abs() <= 1e-8, "{stencil} vs {expect}");
        assert!(vlasov::velocity_flux_from_jet(&Exact(&g, [pt[0], pt[1], pt[1]]), &z2, &u, &p).is_err());
    }
}

#[test]
fn sampled_fields_match_their_functions() {
    let axes = vec![axis(AxisKind::X, 1.0, 4), axis(AxisKind::V, 1.0, 6)];
    let f = sample_real(|c| c[0] * 10.0 + c[1], axes).unwrap();
    let idx = [3, 5];
    let c = f.coords_of(f.flat_index(&idx));
    assert_eq!(f.get(&idx), c[0] * 10.0 + c[1]);
}
