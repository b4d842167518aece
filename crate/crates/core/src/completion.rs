//! Construction of the completing set `S`.
//!
//! For a real anchor `x₀`, `(z − x₀) κ(x₀, z)` is proportional to the `A`-function
//! of the rotation of `E_Λ` for which `x₀` is a zero, so `S = {x₀} ∪ {x : κ(x₀, x) = 0}`
//! makes `{k_λ}_{λ ∈ Λ ∪ S}` complete and minimal (up to one exceptional rotation).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::restricted::{circle_mean, circle_radius, KappaSection, RestrictedSpace};
use crate::verification::parseval_defect;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    /// Forced anchor; otherwise the diagonal argmax over `anchor_window`.
    pub anchor: Option<f64>,
    pub anchor_window: (f64, f64),
    pub anchor_step: f64,
    /// Minimal distance of the anchor from real nodes.
    pub delta: f64,
    /// Scan window; defaults to `[x₀ − scan_half_width, x₀ + scan_half_width]`.
    pub scan_window: Option<(f64, f64)>,
    pub scan_half_width: f64,
    pub step: f64,
    /// Relative tolerance (to the local kernel scale) for near-double zeros.
    pub tol: f64,
    pub parseval_tol: f64,
    pub merge_tol: f64,
    /// In finite-dimensional spaces, widen the scan until all zeros are found.
    pub expand_finite: bool,
    pub seed: u64,
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self {
            anchor: None,
            anchor_window: (-0.5, 0.5),
            anchor_step: 0.25,
            delta: 1e-2,
            scan_window: None,
            scan_half_width: 25.0,
            step: 0.1,
            tol: 1e-9,
            parseval_tol: 1e-6,
            merge_tol: 1e-8,
            expand_finite: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Anomaly {
    /// `|κ(x₀, x)|` dips below tolerance without changing sign.
    NearDoubleZero { x: f64, value: f64 },
    /// Two roots closer than the merge tolerance, reported as one.
    MergedZeros { first: f64, second: f64 },
    /// Slope at a root below `10⁻⁸` of the local scale.
    FlatZero { x: f64, slope: f64 },
    /// A root coincides with a real node.
    ZeroOnNode { x: f64 },
    /// Finite-dimensional count mismatch.
    ZeroCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub s: f64,
    pub kappa_diag: f64,
    /// `max_{s' ≠ s} |κ(s, s')| / √(κ(s, s) κ(s', s'))`.
    pub orth_residual: f64,
    /// `|W(s)| / (‖W‖ √κ(s, s))` for the witness `W` vanishing on `S \ {s}`.
    pub minimality_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub orthogonality_max: f64,
    pub parseval_defect: f64,
    pub probe_count: usize,
    pub points: Vec<PointDiagnostics>,
    pub anomalies: Vec<Anomaly>,
    /// Set when `S` is necessarily a windowed part of an infinite set.
    pub horizon_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub anchor: f64,
    pub points: Vec<f64>,
    pub window: (f64, f64),
    pub reanchored: bool,
    pub diagnostics: Diagnostics,
}

fn near_real_node(rs: &RestrictedSpace, x: f64, delta: f64) -> bool {
    rs.nodes()
        .nodes()
        .iter()
        .any(|l| l.im == 0.0 && (l.re - x).abs() <= delta)
}

/// Leftmost argmax of `κ(x, x)` on a grid over `window`, away from real nodes.
pub fn choose_anchor(rs: &RestrictedSpace, window: (f64, f64), step: f64, delta: f64) -> Result<f64> {
    let (a, b) = window;
    if !(a.is_finite() && b.is_finite() && a <= b && step > 0.0) {
        return Err(CoreError::InvalidInput(format!("anchor window [{a}, {b}] with step {step}")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=n {
        let x = a + k as f64 * step;
        if near_real_node(rs, x, delta) {
            continue;
        }
        let d = rs.kappa_diag(C64::new(x, 0.0))?;
        match best {
            Some((_, v)) if d <= v * (1.0 + 1e-9) => {}
            _ => best = Some((x, d)),
        }
    }
    best.map(|b| b.0).ok_or(CoreError::NoAnchor(a, b))
}

/// Grid scanner for the real zeros of `x ↦ κ(x₀, x)`.
struct Scanner<'a> {
    rs: &'a RestrictedSpace,
    anchor: f64,
    section: KappaSection,
    tol: f64,
    scale0: f64,
}

impl<'a> Scanner<'a> {
    fn new(rs: &'a RestrictedSpace, anchor: f64, tol: f64) -> Result<Self> {
        let x0 = C64::new(anchor, 0.0);
        let section = rs.section(x0);
        let scale0 = section.eval(rs, x0)?.norm();
        Ok(Self {
            rs,
            anchor,
            section,
            tol,
            scale0,
        })
    }

    fn value(&self, x: f64) -> Result<C64> {
        self.section.eval(self.rs, C64::new(x, 0.0))
    }

    fn real(&self, x: f64) -> Result<f64> {
        Ok(self.value(x)?.re)
    }

    /// Zeros in `[a, b]` (excluding the anchor) on a grid of spacing `step`.
    fn segment(&self, a: f64, b: f64, step: f64, anomalies: &mut Vec<Anomaly>) -> Result<Vec<f64>> {
        let n = ((b - a) / step).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        let xs: Vec<f64> = (0..=n).map(|k| a + k as f64 * h).collect();
        let mut vals = Vec::with_capacity(xs.len());
        for &x in &xs {
            vals.push(self.value(x)?);
        }
        let scale = vals.iter().map(|v| v.norm()).fold(self.scale0, f64::max);
        for (x, v) in xs.iter().zip(&vals) {
            if v.im.abs() > 1e-8 * scale {
                return Err(CoreError::KernelInconsistency { x: *x, residue: v.im.abs() / scale });
            }
        }
        let f: Vec<f64> = vals.iter().map(|v| v.re).collect();
        let is_anchor = |x: f64| (x - self.anchor).abs() <= 1e-9 * (1.0 + self.anchor.abs());
        let mut roots = vec![];
        for i in 0..n {
            let (x, y) = (xs[i], xs[i + 1]);
            let (fx, fy) = (f[i], f[i + 1]);
            if fx == 0.0 {
                if !is_anchor(x) && roots.last() != Some(&x) {
                    roots.push(x);
                }
                continue;
            }
            if fx * fy < 0.0 {
                let r = self.bisect(x, y, fx)?;
                if !is_anchor(r) {
                    self.check_slope(r, h, scale, anomalies)?;
                    roots.push(r);
                }
            }
        }
        if f[n] == 0.0 && !is_anchor(xs[n]) {
            roots.push(xs[n]);
        }
        for i in 1..n {
            let local_min = f[i].abs() < f[i - 1].abs() && f[i].abs() < f[i + 1].abs();
            let no_change = f[i - 1] * f[i] > 0.0 && f[i] * f[i + 1] > 0.0;
            if local_min && no_change && f[i].abs() < self.tol * scale {
                anomalies.push(Anomaly::NearDoubleZero { x: xs[i], value: f[i] });
            }
        }
        Ok(roots)
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, mut flo: f64) -> Result<f64> {
        let width = |x: f64| 1e-10f64.max(8.0 * f64::EPSILON * x.abs());
        for _ in 0..200 {
            if hi - lo <= width(lo) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let fm = self.real(mid)?;
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm * flo < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn check_slope(&self, r: f64, h: f64, scale: f64, anomalies: &mut Vec<Anomaly>) -> Result<()> {
        let d = 0.1 * h;
        let slope = (self.real(r + d)? - self.real(r - d)?) / (2.0 * d);
        if slope.abs() * h <= 1e-8 * scale {
            anomalies.push(Anomaly::FlatZero { x: r, slope });
        }
        Ok(())
    }
}

/// Sorted real zeros of `x ↦ κ(anchor, x)` in `window`, the anchor excluded.
pub fn scan_zeros(rs: &RestrictedSpace, anchor: f64, window: (f64, f64), step: f64, tol: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(window.0 < window.1) {
        return Err(CoreError::InvalidInput(format!("scan window {window:?} with step {step}")));
    }
    let scanner = Scanner::new(rs, anchor, tol)?;
    let mut anomalies = vec![];
    scanner.segment(window.0, window.1, step, &mut anomalies)
}

fn merge_close(mut xs: Vec<f64>, merge_tol: f64, anomalies: &mut Vec<Anomaly>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = vec![];
    for x in xs {
        match out.last() {
            Some(&p) if x - p <= merge_tol * (1.0 + p.abs()) => {
                anomalies.push(Anomaly::MergedZeros { first: p, second: x });
            }
            _ => out.push(x),
        }
    }
    out
}

/// The witness `W(z) = κ(z, x₀)(z − x₀)/(z − s₀)` for `s₀ ∈ S`, which vanishes on
/// `S \ {s₀}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub s0: f64,
    pub norm: f64,
    /// `|W(s₀)| / ‖W‖`.
    pub value_at_s0: f64,
    /// `value_at_s0 / √κ(s₀, s₀)`, at most 1 by Cauchy–Schwarz.
    pub margin: f64,
    /// `max_{s ∈ S \ {s₀}} |W(s)| / ‖W‖`.
    pub max_off_support: f64,
}

pub fn minimality_witness(rs: &RestrictedSpace, anchor: f64, s0: f64, points: &[f64]) -> Result<Witness> {
    let x0 = C64::new(anchor, 0.0);
    let p = C64::new(s0, 0.0);
    let section = rs.section(x0);
    let kd = rs.kappa_diag(p)?;
    let removable = |z: C64| (z - p).norm() < 1e-6 * (1.0 + s0.abs());
    let w_value = |z: C64| -> Result<C64> {
        let f = |u: C64| Ok(section.eval(rs, u)? * (u - x0) / (u - p));
        if (s0 - anchor).abs() <= 1e-12 * (1.0 + anchor.abs()) {
            section.eval(rs, z)
        } else if removable(z) {
            circle_mean(p, &f)
        } else {
            f(z)
        }
    };
    let w_image = |z: C64| -> C64 {
        if (s0 - anchor).abs() <= 1e-12 * (1.0 + anchor.abs()) {
            return section.image(rs, z);
        }
        let f = |u: C64| section.image(rs, u) * (u - x0) / (u - p);
        if removable(z) {
            let r = circle_radius(p);
            (0..16)
                .map(|k| f(p + C64::from_polar(r, std::f64::consts::PI * k as f64 / 8.0)))
                .sum::<C64>()
                / 16.0
        } else {
            f(z)
        }
    };
    let norm = if (s0 - anchor).abs() <= 1e-12 * (1.0 + anchor.abs()) {
        section.eval(rs, x0)?.re.max(0.0).sqrt()
    } else {
        rs.ambient().norm_sqr(&w_image).value.re.max(0.0).sqrt()
    };
    let at = w_value(p)?.norm();
    let mut off = 0.0f64;
    for &s in points {
        if (s - s0).abs() > 1e-12 * (1.0 + s0.abs()) {
            off = off.max(w_value(C64::new(s, 0.0))?.norm());
        }
    }
    let n = norm.max(f64::MIN_POSITIVE);
    Ok(Witness {
        s0,
        norm,
        value_at_s0: at / n,
        margin: at / (n * kd.max(f64::MIN_POSITIVE).sqrt()),
        max_off_support: off / n,
    })
}

fn attempt(rs: &RestrictedSpace, x0: f64, params: &CompletionParams) -> Result<(CompletionResult, bool)> {
    let scanner = Scanner::new(rs, x0, params.tol)?;
    let window = params
        .scan_window
        .unwrap_or((x0 - params.scan_half_width, x0 + params.scan_half_width));
    let mut anomalies = vec![];
    let mut zeros = scanner.segment(window.0, window.1, params.step, &mut anomalies)?;
    let mut scanned = window;
    let expected = rs.dimension().map(|d| d - 1);
    if let Some(expected) = expected {
        if params.expand_finite && params.scan_window.is_none() {
            // zeros of a polynomial kernel can sit far out: widen in doubling shells
            let mut inner = params.scan_half_width;
            for k in 0..20 {
                if zeros.len() >= expected {
                    break;
                }
                let outer = 2.0 * inner;
                let step = params.step * 2f64.powi(k + 1);
                zeros.extend(scanner.segment(x0 + inner, x0 + outer, step, &mut anomalies)?);
                zeros.extend(scanner.segment(x0 - outer, x0 - inner, step, &mut anomalies)?);
                scanned = (x0 - outer, x0 + outer);
                inner = outer;
            }
        }
    }
    let zeros = merge_close(zeros, params.merge_tol, &mut anomalies);
    if let Some(expected) = expected {
        if zeros.len() != expected {
            anomalies.push(Anomaly::ZeroCount {
                expected: expected + 1,
                found: zeros.len() + 1,
            });
        }
    }
    let mut points = zeros;
    points.push(x0);
    points.sort_by(f64::total_cmp);
    let mut on_node = false;
    for &s in &points {
        if near_real_node(rs, s, 1e-8 * (1.0 + s.abs())) {
            anomalies.push(Anomaly::ZeroOnNode { x: s });
            on_node = true;
        }
    }

    let zs: Vec<C64> = points.iter().map(|&s| C64::new(s, 0.0)).collect();
    let sections: Vec<KappaSection> = zs.iter().map(|&s| rs.section(s)).collect();
    let m = points.len();
    let mut gram = vec![vec![C64::default(); m]; m];
    for (i, sec) in sections.iter().enumerate() {
        for (j, &z) in zs.iter().enumerate() {
            // gram[j][i] = κ(s_j, s_i)
            gram[j][i] = sec.eval(rs, z)?;
        }
    }
    let kd: Vec<f64> = (0..m).map(|i| gram[i][i].re).collect();
    let mut per_point = vec![];
    let mut orth_max = 0.0f64;
    for i in 0..m {
        let mut r = 0.0f64;
        for j in 0..m {
            if i != j {
                r = r.max(gram[i][j].norm() / (kd[i] * kd[j]).sqrt());
            }
        }
        orth_max = orth_max.max(r);
        let witness = minimality_witness(rs, x0, points[i], &points)?;
        per_point.push(PointDiagnostics {
            s: points[i],
            kappa_diag: kd[i],
            orth_residual: r,
            minimality_margin: witness.margin,
        });
    }

    let probes = default_probes(rs, x0, &points, params.seed);
    let defect = parseval_defect(rs, &points, &probes)?;
    let horizon_note = match rs.dimension() {
        Some(_) => None,
        None => Some(format!(
            "S is the part of an infinite completing set inside [{:.6}, {:.6}]",
            scanned.0, scanned.1
        )),
    };
    let ok = defect <= params.parseval_tol && !on_node;
    let result = CompletionResult {
        anchor: x0,
        points,
        window: scanned,
        reanchored: false,
        diagnostics: Diagnostics {
            orthogonality_max: orth_max,
            parseval_defect: defect,
            probe_count: probes.len(),
            points: per_point,
            anomalies,
            horizon_note,
        },
    };
    Ok((result, ok))
}

/// Probe functions: each `κ(·, s)`, a seeded random combination of them, and in
/// finite dimensions sections at a few points off `S`.
pub fn default_probes<'a>(
    rs: &'a RestrictedSpace,
    x0: f64,
    points: &[f64],
    seed: u64,
) -> Vec<crate::restricted::KappaCombination<'a>> {
    let one = C64::new(1.0, 0.0);
    let mut probes: Vec<_> = points
        .iter()
        .map(|&s| rs.combination(&[(one, C64::new(s, 0.0))]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(C64, C64)> = points
        .iter()
        .take(8)
        .map(|&s| (C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), C64::new(s, 0.0)))
        .collect();
    probes.push(rs.combination(&terms));
    if rs.dimension().is_some() {
        for off in [0.37, -0.61, 1.3] {
            let y = x0 + off;
            if points.iter().all(|s| (s - y).abs() > 1e-3) && !near_real_node(rs, y, 1e-2) {
                probes.push(rs.combination(&[(one, C64::new(y, 0.0))]));
            }
        }
    }
    probes
}

/// `S = {x₀} ∪ {zeros of κ(x₀, ·)}` with diagnostics, re-anchoring once at
/// `x₀ + step/2` if the Parseval check fails.
pub fn complete(rs: &RestrictedSpace, params: &CompletionParams) -> Result<CompletionResult> {
    let x0 = match params.anchor {
        Some(x) => {
            if !x.is_finite() || near_real_node(rs, x, params.delta.min(1e-8 * (1.0 + x.abs())).max(0.0)) {
                return Err(CoreError::InvalidInput(format!("anchor {x} lies on a node")));
            }
            x
        }
        None => choose_anchor(rs, params.anchor_window, params.anchor_step, params.delta)?,
    };
    let (first, ok) = attempt(rs, x0, params)?;
    if ok {
        return Ok(first);
    }
    log::warn!(
        "Parseval defect {:.3e} at anchor {x0}; re-anchoring",
        first.diagnostics.parseval_defect
    );
    let mut x1 = x0 + 0.5 * params.step;
    if near_real_node(rs, x1, params.delta) {
        x1 = x0 - 0.5 * params.step;
    }
    let (mut second, ok) = attempt(rs, x1, params)?;
    if ok {
        second.reanchored = true;
        return Ok(second);
    }
    Err(CoreError::ExceptionalAlpha {
        first: first.diagnostics.parseval_defect,
        second: second.diagnostics.parseval_defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMatch {
    pub from: f64,
    pub to: f64,
    pub drift: f64,
    /// Near the edge of the scan window or beyond half the truncation radius.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityStep {
    pub radius_from: f64,
    pub radius_to: f64,
    pub matched: Vec<PointMatch>,
    pub unmatched_from: Vec<f64>,
    pub unmatched_to: Vec<f64>,
    /// Largest drift among interior matches.
    pub interior_drift: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub radii: Vec<f64>,
    pub runs: Vec<Option<Vec<f64>>>,
    pub failures: Vec<String>,
    pub steps: Vec<StabilityStep>,
}

pub const STABILITY_MATCH_TOL: f64 = 1e-3;

/// Completes each truncation produced by `build` and matches `S` across
/// consecutive radii by nearest neighbour.
pub fn stabilize(
    build: &mut dyn FnMut(f64) -> Result<RestrictedSpace>,
    radii: &[f64],
    params: &CompletionParams,
) -> StabilityReport {
    let mut report = StabilityReport {
        radii: radii.to_vec(),
        ..Default::default()
    };
    let mut results: Vec<Option<CompletionResult>> = vec![];
    for &r in radii {
        match build(r).and_then(|rs| complete(&rs, params)) {
            Ok(res) => {
                report.runs.push(Some(res.points.clone()));
                results.push(Some(res));
            }
            Err(e) => {
                report.runs.push(None);
                report.failures.push(format!("radius {r}: {e}"));
                results.push(None);
            }
        }
    }
    for k in 1..radii.len() {
        let (Some(a), Some(b)) = (&results[k - 1], &results[k]) else {
            continue;
        };
        let boundary = |s: f64, res: &CompletionResult, radius: f64| {
            let (lo, hi) = res.window;
            let margin = 0.1 * (hi - lo) / 2.0;
            s - lo < margin || hi - s < margin || s.abs() > 0.5 * radius
        };
        let mut step = StabilityStep {
            radius_from: radii[k - 1],
            radius_to: radii[k],
            matched: vec![],
            unmatched_from: vec![],
            unmatched_to: vec![],
            interior_drift: 0.0,
        };
        let mut used = vec![false; b.points.len()];
        for &s in &a.points {
            let nearest = b
                .points
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .min_by(|x, y| (x.1 - s).abs().total_cmp(&(y.1 - s).abs()));
            match nearest {
                Some((j, &t)) if (t - s).abs() <= STABILITY_MATCH_TOL => {
                    used[j] = true;
                    let bd = boundary(s, a, radii[k - 1]) || boundary(t, b, radii[k]);
                    if !bd {
                        step.interior_drift = step.interior_drift.max((t - s).abs());
                    }
                    step.matched.push(PointMatch {
                        from: s,
                        to: t,
                        drift: (t - s).abs(),
                        boundary: bd,
                    });
                }
                _ => step.unmatched_from.push(s),
            }
        }
        step.unmatched_to = b
            .points
            .iter()
            .zip(&used)
            .filter(|(_, u)| !**u)
            .map(|(t, _)| *t)
            .collect();
        report.steps.push(step);
    }
    report
}
