//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use psimoyal::fields::{integrate_axis, sample_complex, AxisGrid, AxisKind};
use psimoyal::io::{self, FieldData};
use psimoyal::vlasov::{self, Flux, MeanFluxes, VlasovEquation};
use psimoyal::{moyal, vonneumann, wigner};
use psimoyal::{FluxField, FluxKind, HoOracle, PhysParams, PolynomialPotential, RealField};

use crate::{
    CheckArgs, CliError, Command, ExportCsvArgs, FluxSelector, FluxesArgs, GenHoArgs,
    MarginalArgs, MarginalAxis, Part, Rank, ResidualArgs, ResidualMode, VonNeumannArgs, WignerArgs,
};

type Out<'a> = &'a mut dyn Write;

pub fn dispatch(cmd: Command, out: Out, err: Out) -> Result<u8, CliError> {
    match cmd {
        Command::GenHo(a) => gen_ho(&a, out),
        Command::Wigner(a) => wigner_cmd(&a, out),
        Command::Marginal(a) => marginal(&a, out),
        Command::Residual(a) => residual(&a, out),
        Command::Fluxes(a) => fluxes(&a, out),
        Command::ExportCsv(a) => export_csv(&a),
        Command::Vonneumann(a) => von_neumann(&a, out),
        Command::Check(a) => check(&a, out, err),
    }
}

fn gen_ho(a: &GenHoArgs, out: Out) -> Result<u8, CliError> {
    let oracle = HoOracle::new(a.phys.params()?)?;
    let x = AxisGrid::new(AxisKind::X, a.xmin, a.xmax, a.nx)?;
    let v = AxisGrid::new(AxisKind::V, a.vmin, a.vmax, a.nv)?;
    let t = a.t;
    let psi = sample_complex(|c| oracle.psi12(c[0], c[1], t), vec![x, v])?;
    io::save_field(&a.out, &FieldData::Complex(psi))?;
    writeln!(out, "wrote {} ({}x{} complex)", a.out.display(), a.nx, a.nv)?;
    Ok(0)
}

fn wigner_cmd(a: &WignerArgs, out: Out) -> Result<u8, CliError> {
    let data = io::load_field::<f64>(&a.input)?;
    if !data.is_complex() || data.rank() != 2 {
        return Err(CliError::Usage(format!(
            "wigner needs a complex rank-2 field, got {} rank {}",
            if data.is_complex() { "complex" } else { "real" },
            data.rank()
        )));
    }
    let psi = data.into_complex()?;
    let p = a.phys.params()?;
    let plan = wigner::TransformPlan::for_field(&psi, &p)?;
    let w = match a.rank {
        Rank::Four => wigner::wigner4(&psi, &p)?,
        Rank::Three => wigner::wigner3(&psi, &p)?,
        Rank::TwoFour => wigner::wigner24(&psi, &p)?,
    };
    for axis in [plan.vdot(), plan.vddot()] {
        writeln!(out, "{}: n={} range=[{:.9e}, {:.9e}) step={:.9e}", axis.kind(), axis.len(), axis.min(), axis.max(), axis.step())?;
    }
    writeln!(out, "peak={:.9e}", w.peak_abs())?;
    io::save_field(&a.out, &FieldData::Real(w))?;
    Ok(0)
}

fn load_real(path: &Path) -> Result<RealField<f64>, CliError> {
    let data = io::load_field::<f64>(path)?;
    if data.is_complex() {
        return Err(CliError::Usage(format!("{} holds a complex field; expected real", path.display())));
    }
    Ok(data.into_real()?)
}

fn marginal(a: &MarginalArgs, out: Out) -> Result<u8, CliError> {
    let w = load_real(&a.input)?;
    if !(a.m > 0.0 && a.m.is_finite()) {
        return Err(CliError::Usage(format!("--m must be positive, got {}", a.m)));
    }
    let axis = match a.axis {
        MarginalAxis::Vdot => AxisKind::Vdot,
        MarginalAxis::Vddot => AxisKind::Vddot,
    };
    if !w.has_axis(axis) {
        return Err(CliError::Usage(format!("field on {:?} has no {axis} axis", w.axis_kinds())));
    }
    let r = integrate_axis(&w, axis, a.m)?;
    writeln!(out, "axes={:?} peak={:.9e}", r.axis_kinds(), r.peak_abs())?;
    io::save_field(&a.out, &FieldData::Real(r))?;
    Ok(0)
}

/// Residual field, density scale and masked fraction of one mode.
struct ResidualRun {
    residual: RealField<f64>,
    peak: f64,
    masked: f64,
}

fn residual(a: &ResidualArgs, out: Out) -> Result<u8, CliError> {
    let w = load_real(&a.input)?;
    let u: PolynomialPotential<f64> = io::load_potential(&a.potential)?;
    let p = a.phys.params()?;
    let scheme = a.numeric.scheme()?;
    let thr = a.numeric.mask_threshold;
    let rank4 = w.rank() == 4;
    let need4 = |mode: &str| -> Result<(), CliError> {
        if rank4 {
            Ok(())
        } else {
            Err(CliError::Usage(format!("mode {mode} needs a fourth-rank field, got rank {}", w.rank())))
        }
    };
    let run = match a.mode {
        ResidualMode::PsiMoyal => {
            need4("psi-moyal")?;
            let residual = moyal::psi_moyal_residual(&w, &u, &p, &scheme)?;
            ResidualRun { residual, peak: w.peak_abs(), masked: 0.0 }
        }
        ResidualMode::Vlasov12 => {
            let (w12, flux) = if rank4 {
                let w12 = integrate_axis(&wigner::wigner4_marginal_to_3(&w, &p)?, AxisKind::Vdot, p.m())?;
                (w12, vlasov::mean_flux_from_w4(&w, FluxKind::Vel12, &p, thr)?)
            } else {
                let flux = vlasov::vlasov_moyal_velocity_flux(&w, &u, &p, &scheme, thr)?;
                (w, flux)
            };
            chain_residual(VlasovEquation::W12, &w12, Some(&flux), None, None, &p, &scheme)?
        }
        ResidualMode::Vlasov123 => {
            need4("vlasov123")?;
            let w123 = wigner::wigner4_marginal_to_3(&w, &p)?;
            let accel = vlasov::mean_flux_from_w4(&w, FluxKind::Accel123, &p, thr)?;
            chain_residual(VlasovEquation::W123, &w123, None, Some(&accel), Some(&u), &p, &scheme)?
        }
        ResidualMode::Vlasov124 => {
            need4("vlasov124")?;
            let w124 = wigner::wigner4_marginal_to_24(&w, &p)?;
            let vel = vlasov::mean_flux_from_w4(&w, FluxKind::Vel124, &p, thr)?;
            let accel = vlasov::mean_accel_flux_124(&w, &u, &p, &scheme, thr)?;
            chain_residual(VlasovEquation::W124, &w124, Some(&vel), Some(&accel), None, &p, &scheme)?
        }
    };

    let (imax, max_abs) = run
        .residual
        .data()
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    let rel = if run.peak > 0.0 { max_abs / run.peak } else { max_abs };
    writeln!(out, "max_abs={max_abs:.6e} max_rel={rel:.6e} masked_fraction={:.6e}", run.masked)?;
    if a.report {
        writeln!(out, "peak={:.9e}", run.peak)?;
        writeln!(out, "order={} mask_threshold={:e}", a.numeric.order, thr)?;
        for g in run.residual.axes() {
            writeln!(out, "axis {}: n={} [{:.6e}, {:.6e})", g.kind(), g.len(), g.min(), g.max())?;
        }
        writeln!(out, "argmax={:?}", run.residual.coords_of(imax))?;
    }
    if let Some(path) = &a.out {
        io::save_field(path, &FieldData::Real(run.residual))?;
    }
    match a.tol {
        Some(tol) if rel.is_nan() || rel > tol => Err(CliError::Tolerance(format!("max|residual|/peak {rel:.3e} > {tol:e}"))),
        _ => Ok(0),
    }
}

fn chain_residual(
    eq: VlasovEquation,
    w: &RealField<f64>,
    vel: Option<&FluxField<f64>>,
    accel: Option<&FluxField<f64>>,
    u: Option<&PolynomialPotential<f64>>,
    p: &PhysParams<f64>,
    scheme: &psimoyal::StencilScheme<f64>,
) -> Result<ResidualRun, CliError> {
    let fluxes = MeanFluxes {
        vdot: vel.map(|f| Flux::Field(f.values())),
        vddot: accel.map(|f| Flux::Field(f.values())),
    };
    let residual = vlasov::vlasov_residual(eq, w, &fluxes, u, p, scheme, None)?;
    let masks: Vec<&[bool]> = [vel, accel].into_iter().flatten().map(|f| f.mask()).collect();
    let masked = if masks.is_empty() {
        0.0
    } else {
        let n = w.len();
        (0..n).filter(|&i| masks.iter().any(|m| !m[i])).count() as f64 / n as f64
    };
    Ok(ResidualRun { residual, peak: w.peak_abs(), masked })
}

/// `dir/stem.<tag>.<ext>` next to `path`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "fld".into());
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn fluxes(a: &FluxesArgs, out: Out) -> Result<u8, CliError> {
    let w = load_real(&a.input)?;
    let p = a.phys.params()?;
    let thr = a.numeric.mask_threshold;
    let mut written: Vec<(PathBuf, FluxField<f64>)> = Vec::new();
    match a.which {
        FluxSelector::R123 => written.push((a.out.clone(), vlasov::mean_flux_from_w4(&w, FluxKind::Accel123, &p, thr)?)),
        FluxSelector::R12 => written.push((a.out.clone(), vlasov::mean_flux_from_w4(&w, FluxKind::Vel12, &p, thr)?)),
        FluxSelector::R124 => {
            let u = match &a.potential {
                Some(path) => io::load_potential(path)?,
                None => HoOracle::new(p)?.u12_polynomial(),
            };
            let vel = vlasov::mean_flux_from_w4(&w, FluxKind::Vel124, &p, thr)?;
            let accel = vlasov::mean_accel_flux_124(&w, &u, &p, &a.numeric.scheme()?, thr)?;
            written.push((a.out.clone(), vel));
            written.push((sibling(&a.out, "accel"), accel));
        }
    }
    // One mask: a point is kept when every flux written is defined there.
    let mask: Vec<bool> = (0..written[0].1.mask().len())
        .map(|i| written.iter().all(|(_, f)| f.mask()[i]))
        .collect();
    let mask_field = RealField::new(
        written[0].1.values().axes().to_vec(),
        mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
    )?;
    for (path, flux) in &written {
        io::save_field(path, &FieldData::Real(flux.values().clone()))?;
        writeln!(out, "{}: {} (masked fraction {:.6e})", flux.kind(), path.display(), flux.masked_fraction())?;
    }
    let mask_path = sibling(&a.out, "mask");
    io::save_field(&mask_path, &FieldData::Real(mask_field))?;
    writeln!(out, "mask: {}", mask_path.display())?;
    Ok(0)
}

fn export_csv(a: &ExportCsvArgs) -> Result<u8, CliError> {
    let data = io::load_field::<f64>(&a.input)?;
    let field = match data {
        FieldData::Real(f) => f,
        FieldData::Complex(c) => c.map(|z| match a.part {
            Part::Re => z.re,
            Part::Im => z.im,
            Part::Abs2 => z.norm_sqr(),
        }),
    };
    let pins = io::parse_slice(&a.slice)?;
    // Render before touching the output file so a bad slice leaves no file.
    let mut buf = Vec::new();
    io::export_csv(&field, &pins, &mut buf)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    w.write_all(&buf)?;
    w.flush()?;
    Ok(0)
}

fn von_neumann(a: &VonNeumannArgs, out: Out) -> Result<u8, CliError> {
    if !(a.hbar2 > 0.0 && a.hbar2.is_finite()) {
        return Err(CliError::Usage(format!("--hbar2 must be positive, got {}", a.hbar2)));
    }
    let modes = io::load_modes::<f64>(&a.modes, a.hbar2)?;
    let rho = vonneumann::density_matrix_at(&modes, a.t);
    let commutator = vonneumann::von_neumann_residual(&modes, a.t);
    let fd = vonneumann::finite_difference_residual(&modes, a.t, a.dt)?;
    writeln!(out, "modes={} t={} dt={:e}", modes.len(), a.t, a.dt)?;
    writeln!(out, "commutator_residual={commutator:.6e}")?;
    writeln!(out, "finite_difference_relative={fd:.6e}")?;
    writeln!(out, "hermiticity_defect={:.6e}", rho.hermiticity_defect())?;
    writeln!(out, "projector_defect={:.6e}", rho.projector_defect())?;
    writeln!(out, "trace={:.16e}", rho.trace().re)?;
    match a.tol {
        Some(tol) if commutator.is_nan() || commutator > tol => Err(CliError::Tolerance(format!("commutator residual {commutator:.3e} > {tol:e}"))),
        _ => Ok(0),
    }
}

fn check(a: &CheckArgs, out: Out, err: Out) -> Result<u8, CliError> {
    let p = a.phys.params()?;
    if !p.is_ho_consistent() {
        writeln!(
            err,
            "warning: hbar2 = {} differs from hbar*omega^2 = {}; the oscillator closed forms do not apply",
            p.hbar2(),
            p.hbar() * p.omega() * p.omega()
        )?;
    }
    let results = crate::suite::run_ho_suite(&p, a.seed, out)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    writeln!(out, "{} of {} criteria passed", results.len() - failed, results.len())?;
    Ok(if failed == 0 { 0 } else { 3 })
}
