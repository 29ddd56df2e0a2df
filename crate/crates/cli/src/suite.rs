//! The oscillator validation suite behind `check --suite ho`.
//!
//! Every criterion compares a computed quantity with the oscillator's
//! closed forms or with an identity that must vanish, at a fixed tolerance.
//! The functions are public so the integration tests can run them one by
//! one.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex;
use psimoyal::fields::{sample_complex, sample_real, AxisGrid, AxisKind, PointJet};
use psimoyal::moyal::{build_term_table, psi_moyal_residual_at};
use psimoyal::oracle::{check_identity_b8, radiation_power};
use psimoyal::vlasov::{self, DissipationInputs, Flux, MeanFluxes, VlasovEquation, DEFAULT_MASK_THRESHOLD};
use psimoyal::{vonneumann, wigner};
use psimoyal::{
    ComplexField, FluxKind, HoOracle, ModeSet, PhysParams, PolynomialPotential, RealField, StencilScheme,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::CliError;

type P = PhysParams<f64>;
type Checked = Result<(bool, String), psimoyal::Error>;

/// Result of one criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {tag} {}: {} [{:.2}s]", self.id, self.name, self.detail, self.seconds)
    }
}

fn timed(id: u8, name: &'static str, body: impl FnOnce() -> Checked) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn oracle(p: &P) -> Result<HoOracle<f64>, psimoyal::Error> {
    HoOracle::new(*p)
}

fn uniform_points<const N: usize>(rng: &mut StdRng, count: usize, half: f64) -> Vec<[f64; N]> {
    (0..count).map(|_| std::array::from_fn(|_| rng.gen_range(-half..half))).collect()
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |a, v| if v.is_nan() { f64::NAN } else { a.max(v.abs()) })
}

/// Ground state and its fourth-rank transform on the reference grid:
/// 64 points per axis on `[-8, 8)`.
pub struct HoFields {
    pub psi: ComplexField<f64>,
    pub w4: RealField<f64>,
    /// Wall time of sampling plus transform.
    pub seconds: f64,
}

pub fn ho_fields(p: &P) -> Result<HoFields, psimoyal::Error> {
    let start = Instant::now();
    let o = oracle(p)?;
    let x = AxisGrid::new(AxisKind::X, -8.0, 8.0, 64)?;
    let v = AxisGrid::new(AxisKind::V, -8.0, 8.0, 64)?;
    let psi = sample_complex(|c| o.psi12(c[0], c[1], 0.0), vec![x, v])?;
    let w4 = wigner::wigner4(&psi, p)?;
    Ok(HoFields { psi, w4, seconds: start.elapsed().as_secs_f64() })
}

/// Largest deviation of a fourth-rank grid from the closed form.
pub fn w4_error(w4: &RealField<f64>, p: &P) -> Result<f64, psimoyal::Error> {
    let o = oracle(p)?;
    let mut coords = [0.0; 4];
    let mut worst = 0.0f64;
    let shape = w4.shape();
    let strides = w4.strides();
    for (i, &w) in w4.data().iter().enumerate() {
        for k in 0..4 {
            coords[k] = w4.axis(k).coord((i / strides[k]) % shape[k]);
        }
        worst = worst.max((w - o.w1234(coords[0], coords[1], coords[2], coords[3])).abs());
    }
    Ok(worst)
}

pub fn transform_fidelity(fields: &Result<HoFields, psimoyal::Error>, p: &P) -> Outcome {
    timed(1, "transform fidelity", || {
        let f = fields.as_ref().map_err(|e| psimoyal::Error::Numeric(e.to_string()))?;
        let err = w4_error(&f.w4, p)?;
        let peak = f.w4.peak_abs();
        let expect = 1.0 / (std::f64::consts::PI * p.hbar2()).powi(2);
        let ok = err <= 1e-6 && (peak - expect).abs() <= 1e-6 && f.seconds <= 60.0;
        Ok((ok, format!("max|err|={err:.3e} (<=1e-6), peak={peak:.7} vs {expect:.7}, transform {:.2}s (<=60s)", f.seconds)))
    })
}

pub fn marginal_tower(fields: &Result<HoFields, psimoyal::Error>, p: &P) -> Outcome {
    timed(2, "marginal tower", || {
        let f = fields.as_ref().map_err(|e| psimoyal::Error::Numeric(e.to_string()))?;
        let w3 = wigner::wigner3(&f.psi, p)?;
        let w24 = wigner::wigner24(&f.psi, p)?;
        let m3 = wigner::wigner4_marginal_to_3(&f.w4, p)?;
        let m24 = wigner::wigner4_marginal_to_24(&f.w4, p)?;
        let e3 = m3.max_abs_diff(&w3)?;
        let e24 = m24.max_abs_diff(&w24)?;
        let rho = wigner::density(&f.psi);
        let c3 = wigner::marginal_to_2(&w3, p)?.max_abs_diff(&rho)?;
        let c24 = wigner::marginal_to_2(&w24, p)?.max_abs_diff(&rho)?;
        let total = psimoyal::fields::integrate_axis(
            &psimoyal::fields::integrate_axis(&rho, AxisKind::X, 1.0)?,
            AxisKind::V,
            1.0,
        )?
        .scalar()
        .unwrap_or(f64::NAN);
        let ok = e3 <= 1e-8 && e24 <= 1e-8 && c3 <= 1e-8 && c24 <= 1e-8 && (total - 1.0).abs() <= 1e-9;
        Ok((
            ok,
            format!(
                "w123 {e3:.2e}, w124 {e24:.2e}, |psi|^2 via 123 {c3:.2e} via 124 {c24:.2e} (<=1e-8); norm-1={:.2e} (<=1e-9)",
                total - 1.0
            ),
        ))
    })
}

pub fn psi_moyal_identity(p: &P, seed: u64) -> Outcome {
    timed(3, "psi-moyal identity", || {
        let o = oracle(p)?;
        let u = o.u12_polynomial();
        let table = build_term_table(&u, p);
        let mut rng = StdRng::seed_from_u64(seed);

        let exact = max_abs(
            uniform_points::<4>(&mut rng, 10_000, 5.0)
                .iter()
                .map(|pt| psi_moyal_residual_at(&o.w1234_jet(*pt), pt, &table, &u, p))
                .collect::<Result<Vec<_>, _>>()?,
        );

        let f = |c: &[f64]| o.w1234(c[0], c[1], c[2], c[3]);
        let near = uniform_points::<4>(&mut rng, 1_000, 2.0);
        let stencil_max = |h: f64, pts: &[[f64; 4]]| -> Result<f64, psimoyal::Error> {
            let scheme = StencilScheme::with_step(4, h)?;
            let mut worst = 0.0f64;
            for pt in pts {
                let jet = PointJet::new(&f, pt, scheme)?;
                worst = worst.max(psi_moyal_residual_at(&jet, pt, &table, &u, p)?.abs());
            }
            Ok(worst)
        };
        let stencil = stencil_max(0.01, &near)?;
        let errs = [stencil_max(0.04, &near[..200])?, stencil_max(0.02, &near[..200])?, stencil_max(0.01, &near[..200])?];
        let order = (errs[0] / errs[1]).log2().min((errs[1] / errs[2]).log2());

        // Same state, potential of the doubled frequency.
        let wrong = oracle(&PhysParams::new(p.m(), p.hbar(), 2.0 * p.omega())?)?.u12_polynomial();
        let wrong_table = build_term_table(&wrong, p);
        let control = max_abs(
            near.iter()
                .map(|pt| psi_moyal_residual_at(&o.w1234_jet(*pt), pt, &wrong_table, &wrong, p))
                .collect::<Result<Vec<_>, _>>()?,
        );
        let peak = o.w1234(0.0, 0.0, 0.0, 0.0);

        let ok = exact <= 1e-12 && stencil <= 1e-8 && order >= 3.5 && control > 1e-2 * peak;
        Ok((
            ok,
            format!(
                "exact {exact:.2e} (<=1e-12), stencil h=0.01 {stencil:.2e} (<=1e-8), order {order:.2} (>=3.5), control {:.2e}*peak (>1e-2)",
                control / peak
            ),
        ))
    })
}

pub fn gamma_identity(p: &P, seed: u64) -> Outcome {
    timed(4, "quadratic-form identity", || {
        let mut rng = StdRng::seed_from_u64(seed ^ 0x4);
        let worst = max_abs(
            uniform_points::<4>(&mut rng, 10_000, 5.0)
                .iter()
                .map(|&[x, v, a, b]| check_identity_b8(x, v, a, b, p.omega())),
        );
        Ok((worst <= 1e-11, format!("max {worst:.2e} (<=1e-11)")))
    })
}

/// Closed-form fourth-rank field on a grid wide enough for the moments:
/// 32 points on `[-6, 6)` for x and v, 64 on `[-12, 12)` for vdot and vddot.
pub fn analytic_w4(p: &P) -> Result<RealField<f64>, psimoyal::Error> {
    let o = oracle(p)?;
    let axes = vec![
        AxisGrid::new(AxisKind::X, -6.0, 6.0, 32)?,
        AxisGrid::new(AxisKind::V, -6.0, 6.0, 32)?,
        AxisGrid::new(AxisKind::Vdot, -12.0, 12.0, 64)?,
        AxisGrid::new(AxisKind::Vddot, -12.0, 12.0, 64)?,
    ];
    sample_real(|c| o.w1234(c[0], c[1], c[2], c[3]), axes)
}

pub fn mean_fluxes(p: &P, seed: u64) -> Outcome {
    timed(5, "mean fluxes", || {
        let o = oracle(p)?;
        let w4 = analytic_w4(p)?;
        let u = o.u12_polynomial();
        let scheme = StencilScheme::new(4)?;
        let thr = DEFAULT_MASK_THRESHOLD;
        let fluxes = [
            vlasov::mean_flux_from_w4(&w4, FluxKind::Accel123, p, thr)?,
            vlasov::mean_flux_from_w4(&w4, FluxKind::Vel124, p, thr)?,
            vlasov::mean_accel_flux_124(&w4, &u, p, &scheme, thr)?,
        ];
        let errors: Vec<(FluxKind, f64)> = fluxes
            .iter()
            .map(|f| (f.kind(), f.max_error_against(|c| o.mean_flux(f.kind(), c[0], c[1]))))
            .collect();

        let u1 = o.u1_polynomial();
        let mut rng = StdRng::seed_from_u64(seed ^ 0x5);
        let mut radiation = 0.0f64;
        for [x, v] in uniform_points::<2>(&mut rng, 10_000, 5.0) {
            let r = radiation_power(x, v, p.m(), &u1)?;
            radiation = radiation.max((r.accel - o.mean_flux(FluxKind::Accel123, x, v)).abs());
        }
        let ok = errors.iter().all(|&(_, e)| e <= 1e-6) && radiation <= 1e-12;
        let list: Vec<String> = errors.iter().map(|(k, e)| format!("{k} {e:.2e}")).collect();
        Ok((ok, format!("{} (<=1e-6 on mask), radiation route {radiation:.2e} (<=1e-12)", list.join(", "))))
    })
}

pub fn series_equivalence(p: &P) -> Outcome {
    timed(6, "series/divergence equivalence", || {
        let start = Instant::now();
        let o = oracle(p)?;
        let axes = || -> Result<Vec<AxisGrid<f64>>, psimoyal::Error> {
            Ok(vec![
                AxisGrid::new(AxisKind::X, -4.0, 4.0, 16)?,
                AxisGrid::new(AxisKind::V, -4.0, 4.0, 16)?,
                AxisGrid::new(AxisKind::Vdot, -6.0, 6.0, 16)?,
                AxisGrid::new(AxisKind::Vddot, -6.0, 6.0, 16)?,
            ])
        };
        let ho = sample_real(|c| o.w1234(c[0], c[1], c[2], c[3]), axes()?)?;
        let aniso = sample_real(
            |c| (-(0.5 * c[0] * c[0] + c[1] * c[1] / 1.5 + c[2] * c[2] / 3.0 + (c[3] - 0.3).powi(2) / 2.5)).exp(),
            axes()?,
        )?;
        let cases: [(&str, PolynomialPotential<f64>, &RealField<f64>); 3] = [
            ("quadratic", o.u1_polynomial(), &ho),
            ("x^3", PolynomialPotential::new([(3, 0, 1.0)])?, &aniso),
            ("x^4/4", PolynomialPotential::new([(4, 0, 0.25)])?, &ho),
        ];
        let scheme = StencilScheme::new(4)?;
        let mut worst = 0.0f64;
        let mut parts = Vec::new();
        for (name, u, f) in cases {
            let r = vlasov::theorem2_equivalence(&u, f, p, &scheme, DEFAULT_MASK_THRESHOLD)?;
            worst = worst.max(r.relative);
            parts.push(format!("{name} {:.2e}", r.relative));
        }
        let secs = start.elapsed().as_secs_f64();
        Ok((worst <= 1e-10 && secs <= 10.0, format!("{} (<=1e-10), {secs:.2}s (<=10s)", parts.join(", "))))
    })
}

pub fn chain_residuals(p: &P, seed: u64) -> Outcome {
    timed(7, "chain residuals and dissipation", || {
        let o = oracle(p)?;
        let u = o.u12_polynomial();
        let scheme = StencilScheme::with_step(4, 0.01)?;
        let mut rng = StdRng::seed_from_u64(seed ^ 0x7);

        let w123 = |c: &[f64]| o.w123(c[0], c[1], c[2]);
        let w124 = |c: &[f64]| o.w124(c[0], c[1], c[2]);
        let w12 = |c: &[f64]| o.w12(c[0], c[1]);
        let accel123 = |c: &[f64]| o.mean_flux(FluxKind::Accel123, c[0], c[1]);
        let vel = |c: &[f64]| o.mean_flux(FluxKind::Vel124, c[0], c[1]);
        let accel124 = |c: &[f64]| o.mean_flux(FluxKind::Accel124, c[0], c[1]);

        let r123 = {
            let fl = MeanFluxes { vdot: None, vddot: Some(Flux::Function(&accel123)) };
            max_residual(VlasovEquation::W123, &w123, &uniform_points::<3>(&mut rng, 1_000, 2.0), &fl, Some(&u), p, &scheme)?
        };
        let r124 = {
            let fl = MeanFluxes { vdot: Some(Flux::Function(&vel)), vddot: Some(Flux::Function(&accel124)) };
            max_residual(VlasovEquation::W124, &w124, &uniform_points::<3>(&mut rng, 1_000, 2.0), &fl, None, p, &scheme)?
        };
        let r12 = {
            let fl = MeanFluxes { vdot: Some(Flux::Function(&vel)), vddot: None };
            max_residual(VlasovEquation::W12, &w12, &uniform_points::<2>(&mut rng, 1_000, 2.0), &fl, None, p, &scheme)?
        };

        let xv = [AxisGrid::new(AxisKind::X, -6.0, 6.0, 32)?, AxisGrid::new(AxisKind::V, -6.0, 6.0, 32)?];
        let a12 = xv.to_vec();
        let a124 = vec![xv[0], xv[1], AxisGrid::new(AxisKind::Vddot, -12.0, 12.0, 64)?];
        let g12 = sample_real(w12, a12.clone())?;
        let g124 = sample_real(w124, a124.clone())?;
        let vel12 = sample_real(vel, a12)?;
        let vel124 = sample_real(vel, a124.clone())?;
        let acc124 = sample_real(accel124, a124)?;
        let report = vlasov::dissipation_report(
            &DissipationInputs { w12: &g12, vel12: &vel12, w124: &g124, vel124: &vel124, accel124: &acc124 },
            &StencilScheme::new(4)?,
        )?;
        let q = report.max_source();
        let s = report.max_entropy_residual();

        let ok = r123 <= 1e-8 && r124 <= 1e-8 && r12 <= 1e-8 && q <= 1e-10 && s <= 1e-8;
        Ok((
            ok,
            format!("W123 {r123:.2e}, W124 {r124:.2e}, W12 {r12:.2e} (<=1e-8); max|Q| {q:.2e} (<=1e-10); entropy {s:.2e} (<=1e-8)"),
        ))
    })
}

fn max_residual<const N: usize>(
    eq: VlasovEquation,
    w: &(dyn Fn(&[f64]) -> f64 + Sync),
    points: &[[f64; N]],
    fluxes: &MeanFluxes<'_, f64>,
    u: Option<&PolynomialPotential<f64>>,
    p: &P,
    scheme: &StencilScheme<f64>,
) -> Result<f64, psimoyal::Error> {
    let mut worst = 0.0f64;
    for pt in points {
        worst = worst.max(vlasov::vlasov_residual_at(eq, &w, pt, fluxes, u, p, scheme)?.abs());
    }
    Ok(worst)
}

/// Random mode set of 1 to 8 modes with small decay rates.
pub fn random_modes(rng: &mut StdRng, hbar2: f64) -> Result<ModeSet<f64>, psimoyal::Error> {
    let n = rng.gen_range(1..=8);
    let energies = (0..n).map(|_| Complex::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.2..0.2))).collect();
    let coeffs = (0..n).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ModeSet::new(energies, coeffs, hbar2)
}

pub fn von_neumann(p: &P, seed: u64) -> Outcome {
    timed(8, "von Neumann evolution", || {
        let mut rng = StdRng::seed_from_u64(seed ^ 0x8);
        let (mut comm, mut fd, mut herm, mut proj) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..100 {
            let modes = random_modes(&mut rng, p.hbar2())?;
            let t = rng.gen_range(0.0..2.0);
            let rho = vonneumann::density_matrix_at(&modes, t);
            comm = comm.max(vonneumann::von_neumann_residual(&modes, t));
            fd = fd.max(vonneumann::finite_difference_residual(&modes, t, 1e-4)?);
            herm = herm.max(rho.hermiticity_defect());
            proj = proj.max(rho.projector_defect());
        }
        let ok = comm <= 1e-12 && fd <= 1e-6 && herm <= 1e-12 && proj <= 1e-12;
        Ok((
            ok,
            format!("commutator {comm:.2e} (<=1e-12), centered difference {fd:.2e} rel (<=1e-6), hermitian {herm:.2e}, rank-one {proj:.2e} (<=1e-12)"),
        ))
    })
}

/// Runs criteria 1 to 8, printing each line as soon as it is known.
pub fn run_ho_suite(p: &P, seed: u64, out: &mut dyn Write) -> Result<Vec<Outcome>, CliError> {
    let mut results = Vec::new();
    let mut emit = |o: Outcome, out: &mut dyn Write| -> Result<(), CliError> {
        writeln!(out, "{o}")?;
        out.flush()?;
        results.push(o);
        Ok(())
    };
    {
        let fields = ho_fields(p);
        emit(transform_fidelity(&fields, p), out)?;
        emit(marginal_tower(&fields, p), out)?;
    }
    emit(psi_moyal_identity(p, seed), out)?;
    emit(gamma_identity(p, seed), out)?;
    emit(mean_fluxes(p, seed), out)?;
    emit(series_equivalence(p), out)?;
    emit(chain_residuals(p, seed), out)?;
    emit(von_neumann(p, seed), out)?;
    Ok(results)
}
