//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Criteria 1 and 10 drive the release binary; 2 to 8 run the same checks
//! as `check --suite ho` in process (2 on the files the binary wrote); 9
//! compares the series evaluators with the brute-force sums in `common`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{Poly, PolyJet, RawPotential};
use psimoyal::fields::Jet;
use psimoyal::io::{self, FieldData};
use psimoyal::moyal::{build_term_table, moyal_rhs_at, psi_moyal_residual_at, second_moyal_rhs_at};
use psimoyal::vlasov::{accel_flux_from_jet, velocity_flux_from_jet};
use psimoyal::PhysParams;
use psimoyal_cli::suite::{self, HoFields};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const BIN: &str = env!("CARGO_BIN_EXE_psimoyal");
const SEED: u64 = 0x5eed;

struct Line {
    id: u8,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn from_outcome(o: suite::Outcome) -> Line {
    Line { id: o.id, name: o.name, passed: o.passed, detail: o.detail }
}

fn run_bin(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN)
        .args(args)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

/// Peak resident set of the largest child waited for so far, in MB.
fn children_max_rss_mb() -> f64 {
    // SAFETY: getrusage only writes into the struct we hand it.
    let mut ru: libc::rusage = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::getrusage(libc::RUSAGE_CHILDREN, &mut ru) };
    assert_eq!(rc, 0, "getrusage failed");
    ru.ru_maxrss as f64 / 1024.0
}

fn criterion1(dir: &Path, p: &PhysParams<f64>) -> Line {
    let psi = dir.join("psi.fld");
    let w4 = dir.join("w4.fld");
    let start = Instant::now();
    let (c1, t1) = run_bin(&["gen-ho", "--out", psi.to_str().unwrap()]);
    let (c2, t2) = run_bin(&["wigner", "--in", psi.to_str().unwrap(), "--rank", "4", "--out", w4.to_str().unwrap()]);
    let secs = start.elapsed().as_secs_f64();
    let rss = children_max_rss_mb();
    let name = "transform fidelity (binary, 1 thread)";
    if c1 != 0 || c2 != 0 {
        return Line { id: 1, name, passed: false, detail: format!("exit codes {c1}/{c2}: {t1}{t2}") };
    }
    let field = io::load_field::<f64>(&w4).and_then(|f| f.into_real());
    let (err, peak) = match field {
        Ok(f) => (suite::w4_error(&f, p).unwrap_or(f64::NAN), f.peak_abs()),
        Err(e) => return Line { id: 1, name, passed: false, detail: format!("reading output: {e}") },
    };
    let expect = 1.0 / std::f64::consts::PI.powi(2);
    let passed = err <= 1e-6 && (peak - expect).abs() <= 1e-6 && secs <= 60.0 && rss <= 600.0;
    Line {
        id: 1,
        name,
        passed,
        detail: format!("max|err|={err:.3e} (<=1e-6), peak={peak:.7}, {secs:.2}s (<=60s), max RSS {rss:.0} MB (<=600)"),
    }
}

fn criterion2(dir: &Path, p: &PhysParams<f64>) -> Line {
    let load = || -> psimoyal::Result<HoFields> {
        let psi = io::load_field::<f64>(dir.join("psi.fld"))?.into_complex()?;
        let w4 = io::load_field::<f64>(dir.join("w4.fld"))?.into_real()?;
        Ok(HoFields { psi, w4, seconds: 0.0 })
    };
    from_outcome(suite::marginal_tower(&load(), p))
}

/// Largest relative disagreement over the cases, with the case count.
#[derive(Default)]
struct Worst {
    rel: f64,
    cases: usize,
}

impl Worst {
    fn push(&mut self, rel: f64) {
        self.rel = if rel.is_nan() { f64::NAN } else { self.rel.max(rel) };
        self.cases += 1;
    }
}

fn criterion9() -> Line {
    let mut rng = StdRng::seed_from_u64(SEED ^ 0x9);
    let (mut momentum, mut general, mut single, mut accel, mut velocity) =
        (Worst::default(), Worst::default(), Worst::default(), Worst::default(), Worst::default());
    let mut failure = None;

    for _ in 0..200 {
        let m = rng.gen_range(0.5..2.0);
        let hbar2 = rng.gen_range(0.5..2.0);
        let p = PhysParams::new(m, 1.0, 1.0).and_then(|p| p.with_hbar2(hbar2)).expect("valid constants");
        let z: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));

        // Moyal series: general potential of degree up to 7, dense W.
        let u = RawPotential::random(&mut rng, 6, 7, true);
        let ul = u.to_library();
        let w = Poly::<4>::random_positive(&mut rng, 12, 7);
        let jet = PolyJet { poly: &w, point: z };
        let table = build_term_table(&ul, &p);
        let res = (|| -> psimoyal::Result<()> {
            // Momentum form, all l: transport - series = free - full sum.
            let full = common::psi_moyal_momentum_rhs(&u, &w, z, m, hbar2);
            let free = common::free_streaming(&w, z);
            let lib = psi_moyal_residual_at(&jet, &z, &table, &ul, &p)?;
            let scale = full.scale + (z[1] * jet.derivative(&[1, 0, 0, 0])?).abs()
                + (z[2] * jet.derivative(&[0, 1, 0, 0])?).abs()
                + (z[3] * jet.derivative(&[0, 0, 1, 0])?).abs();
            momentum.push(((free - full.value) - lib).abs() / scale);

            let gen = common::second_moyal_general(&u, &w, z, m, hbar2);
            general.push(gen.relative_to(moyal_rhs_at(&jet, &z, &table, &ul)?));

            // Velocity-independent potential: single sum, also as a
            // special case of the general enumeration.
            let u1 = RawPotential::random(&mut rng, 4, 7, false);
            let u1l = u1.to_library();
            let lib1 = second_moyal_rhs_at(&jet, &z, &u1l, &p)?;
            single.push(common::second_moyal_single(&u1, &w, z, m, hbar2).relative_to(lib1));
            single.push(common::second_moyal_general(&u1, &w, z, m, hbar2).relative_to(lib1));

            // Flux series on exact jets of rank 4, 3 and 2 densities.
            let ua = RawPotential::random(&mut rng, 5, 7, true);
            let ual = ua.to_library();
            let f4 = Poly::<4>::random_positive(&mut rng, 10, 7);
            let lib4 = accel_flux_from_jet(&PolyJet { poly: &f4, point: z }, &z, 3, &ual, &p)?;
            accel.push(common::accel_flux(&ua, &f4, &z, 3, m, hbar2).relative_to(lib4));
            let f3 = Poly::<3>::random_positive(&mut rng, 10, 7);
            let z3 = [z[0], z[1], z[3]];
            let lib3 = accel_flux_from_jet(&PolyJet { poly: &f3, point: z3 }, &z3, 2, &ual, &p)?;
            accel.push(common::accel_flux(&ua, &f3, &z3, 2, m, hbar2).relative_to(lib3));

            let uv = RawPotential::random(&mut rng, 5, 7, false);
            let uvl = uv.to_library();
            let f2 = Poly::<2>::random_positive(&mut rng, 8, 7);
            let z2 = [z[0], z[1]];
            let lib2 = velocity_flux_from_jet(&PolyJet { poly: &f2, point: z2 }, &z2, &uvl, &p)?;
            velocity.push(common::velocity_flux(&uv, &f2, &z2, m, hbar2).relative_to(lib2));
            Ok(())
        })();
        if let Err(e) = res {
            failure = Some(e.to_string());
            break;
        }
    }
    let all = [&momentum, &general, &single, &accel, &velocity];
    let passed = failure.is_none() && all.iter().all(|w| w.rel <= 1e-12);
    let detail = match failure {
        Some(e) => format!("error: {e}"),
        None => format!(
            "momentum form {:.2e}, velocity form {:.2e}, single sum {:.2e}, accel flux {:.2e}, velocity flux {:.2e} (<=1e-12, {} cases)",
            momentum.rel,
            general.rel,
            single.rel,
            accel.rel,
            velocity.rel,
            all.iter().map(|w| w.cases).sum::<usize>()
        ),
    };
    Line { id: 9, name: "series vs brute-force oracles", passed, detail }
}

fn criterion10(dir: &Path) -> Line {
    let name = "plumbing";
    let mut notes = Vec::new();
    let mut passed = true;
    for file in ["psi.fld", "w4.fld"] {
        let bytes = match std::fs::read(dir.join(file)) {
            Ok(b) => b,
            Err(e) => return Line { id: 10, name, passed: false, detail: format!("{file}: {e}") },
        };
        let same = io::decode_field::<f64>(&bytes)
            .and_then(|f: FieldData<f64>| io::encode_field(&f))
            .map(|again| again == bytes)
            .unwrap_or(false);
        passed &= same;
        notes.push(format!("{file} round trip {}", if same { "bit-exact" } else { "DIFFERS" }));
    }
    let start = Instant::now();
    let (code, text) = run_bin(&["check", "--suite", "ho"]);
    let secs = start.elapsed().as_secs_f64();
    let pass_lines = text.lines().filter(|l| l.starts_with("criterion") && l.contains(" PASS ")).count();
    let ok = code == 0 && secs <= 300.0 && pass_lines == 8;
    passed &= ok;
    notes.push(format!("check --suite ho exit {code}, {pass_lines}/8 PASS lines, {secs:.1}s (<=300s, 1 thread)"));
    if !ok {
        notes.push(text);
    }
    Line { id: 10, name, passed, detail: notes.join("; ") }
}

fn guarded(id: u8, name: &'static str, f: impl FnOnce() -> Line) -> Line {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| Line { id, name, passed: false, detail: "panicked".into() })
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let p = PhysParams::unit();
    let lines = vec![
        guarded(1, "transform fidelity", || criterion1(dir.path(), &p)),
        guarded(2, "marginal tower", || criterion2(dir.path(), &p)),
        guarded(3, "psi-moyal identity", || from_outcome(suite::psi_moyal_identity(&p, SEED))),
        guarded(4, "quadratic-form identity", || from_outcome(suite::gamma_identity(&p, SEED))),
        guarded(5, "mean fluxes", || from_outcome(suite::mean_fluxes(&p, SEED))),
        guarded(6, "series/divergence equivalence", || from_outcome(suite::series_equivalence(&p))),
        guarded(7, "chain residuals and dissipation", || from_outcome(suite::chain_residuals(&p, SEED))),
        guarded(8, "von Neumann evolution", || from_outcome(suite::von_neumann(&p, SEED))),
        guarded(9, "series vs brute-force oracles", criterion9),
        guarded(10, "plumbing", || criterion10(dir.path())),
    ];
    let mut failed = 0;
    for l in &lines {
        println!("criterion {:>2} {} {}: {}", l.id, if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
        failed += usize::from(!l.passed);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
