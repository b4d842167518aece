//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dbcomp::completion::default_probes;
use dbcomp::entire::make_structure_function;
use dbcomp::linalg::{numerical_rank, row_normalized};
use dbcomp::verification::{axiom_suite, completeness_residual, finite_dim_oracle, parseval_defect, Target};
use dbcomp::{complete, AmbientSpace, CompletionParams, NodeSequence, RestrictedSpace, StructureFunction, Truncation, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PARSEVAL_TOL: f64 = 1e-6;
const ONE_GAP_BUDGET: Duration = Duration::from_secs(30);
const THREE_GAP_BUDGET: Duration = Duration::from_secs(60);
const FINITE_BUDGET: Duration = Duration::from_secs(300);
const DET_FLOOR: f64 = 1e-6;
const RANK_TOL: f64 = 1e-9;
const TRIALS: usize = 100;
const KERNEL_TOL: f64 = 1e-12;
const KERNEL_PAIRS: usize = 100;
const ORTHOGONALITY_TOL: f64 = 1e-8;
const AXIOM_TOL: f64 = 1e-6;
const AXIOM_ELEMENTS: usize = 20;
const HARMONIC_EXIT: i32 = 3;
const HARMONIC_MIN_SUM: f64 = 11.0;
const CAUCHY_THRESHOLD: f64 = 1e-8;
const RESIDUAL_TARGET: f64 = 0.3;
const RESIDUAL_STEPS: [usize; 4] = [50, 100, 200, 400];
const RESIDUAL_FINAL: f64 = 1e-3;

type Verdict = (bool, String);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn integers(exclude: &[i64], radius: i64) -> NodeSequence {
    let v = (-radius..=radius).filter(|n| !exclude.contains(n)).map(|n| c(n as f64, 0.0)).collect();
    NodeSequence::new(v, Truncation::Radius(radius as f64)).unwrap()
}

fn pw(exclude: &[i64]) -> RestrictedSpace {
    RestrictedSpace::build(AmbientSpace::paley_wiener(), integers(exclude, 500)).unwrap()
}

fn worst_orthogonality(rs: &RestrictedSpace, s: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &a) in s.iter().enumerate() {
        for &b in &s[..i] {
            let k = rs.kappa(c(a, 0.0), c(b, 0.0)).unwrap().norm();
            let d = (rs.kappa_diag(c(a, 0.0)).unwrap() * rs.kappa_diag(c(b, 0.0)).unwrap()).sqrt();
            worst = worst.max(k / d);
        }
    }
    worst
}

/// Largest pairwise ratio seen by criteria 1 to 3, consumed by criterion 5.
#[derive(Default)]
struct Orthogonality {
    worst: f64,
    completions: usize,
}

impl Orthogonality {
    fn record(&mut self, rs: &RestrictedSpace, s: &[f64]) {
        self.worst = self.worst.max(worst_orthogonality(rs, s));
        self.completions += 1;
    }
}

fn one_gap(orth: &mut Orthogonality) -> Verdict {
    let start = Instant::now();
    let rs = pw(&[0]);
    let free = complete(&rs, &CompletionParams::default()).unwrap();
    orth.record(&rs, &free.points);
    let forced = complete(
        &rs,
        &CompletionParams {
            anchor: Some(0.0),
            ..Default::default()
        },
    )
    .unwrap();
    orth.record(&rs, &forced.points);
    let probes = default_probes(&rs, 0.0, &forced.points, 0);
    let defect = parseval_defect(&rs, &forced.points, &probes).unwrap();
    let elapsed = start.elapsed();
    let pass = free.points.len() == 1
        && forced.points.len() == 1
        && forced.points[0].abs() < 1e-12
        && defect < PARSEVAL_TOL
        && elapsed < ONE_GAP_BUDGET;
    (
        pass,
        format!(
            "|S| = {}, forced S = {:?}, Parseval defect {defect:.2e}, {:.1} s",
            free.points.len(),
            forced.points,
            elapsed.as_secs_f64()
        ),
    )
}

/// `sin(πz) zʲ / (z(1 − z²))`, spanning the functions of `PW_π` that vanish on `ℤ \ {−1, 0, 1}`.
fn deficiency_basis(z: f64, j: i32) -> C64 {
    let s = (std::f64::consts::PI * z).sin();
    c(s * z.powi(j) / (z * (1.0 - z * z)), 0.0)
}

fn three_gaps(orth: &mut Orthogonality) -> Verdict {
    let start = Instant::now();
    let rs = pw(&[-1, 0, 1]);
    let r = complete(&rs, &CompletionParams::default()).unwrap();
    orth.record(&rs, &r.points);
    let elapsed = start.elapsed();
    let n = r.points.len();
    let m = DMatrix::from_fn(n, 3, |i, j| deficiency_basis(r.points[i], j as i32));
    let normalized = row_normalized(&m);
    let det = if n == 3 { normalized.determinant().norm() } else { 0.0 };
    let loo: Vec<usize> = (0..n)
        .map(|skip| numerical_rank(&normalized.clone().remove_row(skip), RANK_TOL))
        .collect();
    let pass = n == 3 && det > DET_FLOOR && loo.iter().all(|&k| k < 3) && elapsed < THREE_GAP_BUDGET;
    (
        pass,
        format!(
            "S = {:?}, |det| {det:.3e}, leave-one-out ranks {loo:?}, {:.1} s",
            r.points,
            elapsed.as_secs_f64()
        ),
    )
}

/// Draws `count` points in the box, pairwise at least `spacing` apart.
fn spaced(rng: &mut ChaCha8Rng, count: usize, spacing: f64, draw: impl Fn(&mut ChaCha8Rng) -> C64) -> Vec<C64> {
    let mut out: Vec<C64> = vec![];
    while out.len() < count {
        let p = draw(rng);
        if out.iter().all(|q| (p - q).norm() >= spacing) {
            out.push(p);
        }
    }
    out
}

fn random_trial(rng: &mut ChaCha8Rng, n: usize, j: usize) -> (StructureFunction, NodeSequence) {
    let zeros = spaced(rng, n, 0.3, |r| c(r.gen_range(-2.0..2.0), -r.gen_range(0.3..2.5)));
    let e = make_structure_function(0.0, zeros, rng.gen_range(0.0..std::f64::consts::PI)).unwrap();
    let nodes = spaced(rng, j, 0.3, |r| {
        let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        c(r.gen_range(-2.0..2.0), sign * r.gen_range(0.1..1.5))
    });
    (e, NodeSequence::exact(nodes).unwrap())
}

fn finite_dimensional(orth: &mut Orthogonality) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (mut passed, mut total) = (0, 0);
    let mut first_failure = None;
    for n in 2..=6 {
        for trial in 0..TRIALS {
            let j = trial % n;
            let (e, lambda) = random_trial(&mut rng, n, j);
            total += 1;
            let outcome = (|| -> Result<(), String> {
                let rs = RestrictedSpace::build(AmbientSpace::new(e.clone()), lambda.clone()).map_err(|e| e.to_string())?;
                let r = complete(&rs, &CompletionParams::default()).map_err(|e| e.to_string())?;
                orth.record(&rs, &r.points);
                if r.points.len() != n - j {
                    return Err(format!("|S| = {} for n = {n}, j = {j}", r.points.len()));
                }
                let o = finite_dim_oracle(&e, &lambda, &r.points).map_err(|e| e.to_string())?;
                if o.rank != n || o.leave_one_out.iter().any(|&k| k + 1 != n) {
                    return Err(format!("rank {} loo {:?} for n = {n}, j = {j}", o.rank, o.leave_one_out));
                }
                Ok(())
            })();
            match outcome {
                Ok(()) => passed += 1,
                Err(msg) => {
                    first_failure.get_or_insert(msg);
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let mut detail = format!("{passed}/{total} trials, {:.1} s", elapsed.as_secs_f64());
    if let Some(msg) = first_failure {
        detail.push_str(&format!(", first failure: {msg}"));
    }
    (passed == total && elapsed < FINITE_BUDGET, detail)
}

fn kernels() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let point = |r: &mut ChaCha8Rng| c(r.gen_range(-5.0..5.0), r.gen_range(-2.0..2.0));
    let pw = AmbientSpace::paley_wiener();
    let square = AmbientSpace::new(make_structure_function(0.0, vec![c(0.0, -1.0), c(0.0, -1.0)], 0.0).unwrap());
    let pi = std::f64::consts::PI;
    let (mut sinc_err, mut square_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..KERNEL_PAIRS {
        let (z, w) = (point(&mut rng), point(&mut rng));
        let u = z - w.conj();
        let sinc = (u * pi).sin() / (u * pi);
        sinc_err = sinc_err.max((pw.kernel_value(z, w) - sinc).norm() / sinc.norm());
        let closed = (z * w.conj() + 1.0) * (2.0 / pi);
        square_err = square_err.max((square.kernel_value(z, w) - closed).norm() / closed.norm());
    }
    (
        sinc_err < KERNEL_TOL && square_err < KERNEL_TOL,
        format!("sinc {sinc_err:.2e}, (z+i)^2 {square_err:.2e} over {KERNEL_PAIRS} pairs"),
    )
}

fn orthogonality(orth: &Orthogonality) -> Verdict {
    (
        orth.completions > 0 && orth.worst < ORTHOGONALITY_TOL,
        format!("worst ratio {:.2e} over {} completions", orth.worst, orth.completions),
    )
}

fn axioms() -> Verdict {
    let pw = RestrictedSpace::build(AmbientSpace::paley_wiener(), integers(&[0], 40)).unwrap();
    let e1 = make_structure_function(0.0, vec![c(0.0, -1.0), c(0.5, -1.5), c(-1.2, -0.7), c(2.0, -2.0), c(-0.4, -3.0)], 0.2)
        .unwrap();
    let p1 = RestrictedSpace::build(AmbientSpace::new(e1), NodeSequence::exact(vec![c(-0.8, 0.0), c(1.7, 0.0)]).unwrap()).unwrap();
    let e2 = make_structure_function(0.0, vec![c(0.3, -0.9), c(-1.0, -1.4), c(1.1, -0.6), c(0.0, -2.2)], 0.0).unwrap();
    let p2 = RestrictedSpace::build(AmbientSpace::new(e2), NodeSequence::exact(vec![c(0.4, 0.8)]).unwrap()).unwrap();
    let mut pass = true;
    let mut parts = vec![];
    for (name, rs, seed) in [("pw", &pw, 1), ("poly5", &p1, 2), ("poly4", &p2, 3)] {
        let r = axiom_suite(rs, AXIOM_ELEMENTS, seed).unwrap();
        let worst = r.division.max(r.conjugation).max(r.double_division);
        pass &= worst < AXIOM_TOL;
        parts.push(format!("{name} {worst:.1e}"));
    }
    (pass, format!("worst relative defect: {}", parts.join(", ")))
}

/// Reads the number following `key` in `text`.
fn number_after(text: &str, key: &str) -> Option<f64> {
    let rest = &text[text.find(key)? + key.len()..];
    let token: String = rest
        .trim_start()
        .chars()
        .take_while(|ch| ch.is_ascii_digit() || matches!(ch, '.' | '-' | 'e' | '+'))
        .collect();
    token.parse().ok()
}

fn harmonic() -> Verdict {
    let out = Command::new(env!("CARGO_BIN_EXE_dbcomp"))
        .args(["--quiet", "demo", "harmonic-reject"])
        .output()
        .expect("binary runs");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let code = out.status.code();
    let sum = number_after(&stderr, "partial sum");
    let increment = number_after(&stderr, "increment");
    let pass = code == Some(HARMONIC_EXIT)
        && stderr.contains("diverges")
        && sum.is_some_and(|s| s > HARMONIC_MIN_SUM)
        && increment.is_some_and(|d| d > CAUCHY_THRESHOLD);
    (pass, format!("exit {code:?}, {}", stderr.trim()))
}

fn completeness() -> Verdict {
    let rs = pw(&[0]);
    let points = [0.0];
    let steps = completeness_residual(&rs, &points, Target::Kernel(c(RESIDUAL_TARGET, 0.0)), &RESIDUAL_STEPS).unwrap();
    let monotone = steps.windows(2).all(|w| w[1].residual < w[0].residual);
    let last = steps.last().unwrap().residual;
    let trace: Vec<String> = steps.iter().map(|s| format!("{}: {:.3e}", s.truncation, s.residual)).collect();
    (
        monotone && last < RESIDUAL_FINAL,
        format!("monotone {monotone}, residuals [{}]", trace.join(", ")),
    )
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!("{} [{id}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() -> ExitCode {
    let mut orth = Orthogonality::default();
    let results = [
        run(1, "one-gap completion", || one_gap(&mut orth)),
        run(2, "three-gap completion", || three_gaps(&mut orth)),
        run(3, "finite-dimensional oracle", || finite_dimensional(&mut orth)),
        run(4, "kernel formulas", kernels),
        run(5, "orthogonality", || orthogonality(&orth)),
        run(6, "axiom suite", axioms),
        run(7, "Blaschke rejection", harmonic),
        run(8, "completeness trend", completeness),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
