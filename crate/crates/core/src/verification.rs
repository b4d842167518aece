//! Checks of a completion: the three conditions characterizing complete and
//! minimal kernel systems, minimal uniqueness of `S`, Parseval and completeness
//! diagnostics, and a brute-force oracle for polynomial `E`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::completion::{minimality_witness, Witness};
use crate::entire::{symmetric_product, NodeSequence, StructureFunction, Truncation, SYMMETRIC_PRODUCT_TOL};
use crate::error::{CoreError, Result};
use crate::linalg::{numerical_rank, row_normalized, Cholesky, SquareMatrix};
use crate::restricted::{circle_radius, ImageFunction, KappaCombination, RestrictedFunction, RestrictedSpace};
use crate::space::{AmbientSpace, Membership};
use crate::C64;

/// A probe for the Parseval identity: values plus a norm.
pub trait Probe: RestrictedFunction {
    fn norm_sqr(&self) -> Result<f64>;
}

impl Probe for KappaCombination<'_> {
    fn norm_sqr(&self) -> Result<f64> {
        KappaCombination::norm_sqr(self)
    }
}

impl<F: Fn(C64) -> C64> Probe for ImageFunction<'_, F> {
    fn norm_sqr(&self) -> Result<f64> {
        Ok(self.rs.ambient().norm_sqr(&self.image).value.re.max(0.0))
    }
}

/// `max_T |Σ_{s ∈ S} |T(s)|²/κ(s, s) − ‖T‖²| / ‖T‖²`, with `0/0 = 0`.
pub fn parseval_defect<P: Probe>(rs: &RestrictedSpace, points: &[f64], probes: &[P]) -> Result<f64> {
    let zs: Vec<C64> = points.iter().map(|&s| C64::new(s, 0.0)).collect();
    let diag = zs.iter().map(|&z| rs.kappa_diag(z)).collect::<Result<Vec<f64>>>()?;
    let mut worst = 0.0f64;
    for p in probes {
        let norm = p.norm_sqr()?;
        let mut sum = 0.0;
        for (&z, &d) in zs.iter().zip(&diag) {
            sum += p.value(z)?.norm_sqr() / d;
        }
        let defect = if norm == 0.0 {
            if sum == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (sum - norm).abs() / norm
        };
        worst = worst.max(defect);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cond1 {
    pub converged: bool,
    pub radii: Vec<f64>,
    /// Relative change of the partial products between consecutive radii.
    pub radius_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cond2Node {
    pub mu: [f64; 2],
    /// Computed `‖G/(z − μ)‖` on the membership window.
    pub norm: f64,
    pub membership: Membership,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cond3 {
    /// Always the heuristic label: probes can falsify, never certify.
    pub label: String,
    pub probe_count: usize,
    /// Probes `T` for which `G·T` looked like a member.
    pub violations: Vec<String>,
}

pub const COND3_LABEL_CLEAN: &str = "heuristic: no counterexample found";
pub const COND3_LABEL_VIOLATED: &str = "heuristic: counterexample found";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    pub cond1: Cond1,
    pub cond2: Vec<Cond2Node>,
    pub cond2_pass: bool,
    pub cond3: Cond3,
    /// Membership tests ran on `[−T, T]` with this `T`.
    pub window: f64,
    /// The union is a truncation of an infinite set.
    pub windowed: bool,
}

fn cond_radii(seq: &NodeSequence) -> Vec<f64> {
    match seq.truncation() {
        Truncation::Radius(r) => [0.125, 0.25, 0.5, 1.0 + 1e-12].iter().map(|f| f * r).collect(),
        Truncation::Exact => {
            let m = seq.nodes().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
            [1.5, 2.0, 4.0].iter().map(|f| f * m).collect()
        }
    }
}

/// Tests the union `Λ ∪ S` against the characterization of complete minimal
/// kernel systems: convergence of the symmetric product `G`, membership of
/// `G/(z − μ)`, and absence of entire `T` with `G T` in the space (falsification
/// probes only).
pub fn prop1_check(ambient: &AmbientSpace, union: &NodeSequence) -> Result<Prop1Report> {
    let radii = cond_radii(union);
    let product = symmetric_product(union, &radii, SYMMETRIC_PRODUCT_TOL)?;
    let cond1 = Cond1 {
        converged: product.converged,
        radii,
        radius_trace: product.radius_trace.clone(),
    };
    // truncating an infinite product at R inflates it by about e^{x²/R} on ℝ
    let window = match union.truncation() {
        Truncation::Radius(r) => (0.5 * r.sqrt()).min(200.0),
        Truncation::Exact => 200.0,
    };
    let g = |z: C64| product.eval(z);
    let mut cond2 = vec![];
    if cond1.converged {
        for mu in union.by_modulus().into_iter().take(3) {
            let f = |z: C64| quotient(&g, z, mu);
            let membership = ambient.membership_heuristic(&f, window);
            let norm = membership_norm(ambient, &f, window);
            cond2.push(Cond2Node {
                mu: [mu.re, mu.im],
                norm,
                membership,
            });
        }
    }
    let cond2_pass = cond1.converged && cond2.iter().all(|c| c.membership.plausible);

    let probes: [(&str, Box<dyn Fn(C64) -> C64>); 5] = [
        ("1", Box::new(|_| C64::new(1.0, 0.0))),
        ("z", Box::new(|z| z)),
        ("z^2", Box::new(|z| z * z)),
        ("exp(0.1iz)", Box::new(|z| (C64::new(0.0, 0.1) * z).exp())),
        ("exp(0.5iz)", Box::new(|z| (C64::new(0.0, 0.5) * z).exp())),
    ];
    let mut violations = vec![];
    if cond1.converged {
        for (name, t) in &probes {
            let f = |z: C64| g(z) * t(z);
            if ambient.membership_heuristic(&f, window).plausible {
                violations.push(name.to_string());
            }
        }
    }
    let cond3 = Cond3 {
        label: if violations.is_empty() {
            COND3_LABEL_CLEAN
        } else {
            COND3_LABEL_VIOLATED
        }
        .to_string(),
        probe_count: probes.len(),
        violations,
    };
    Ok(Prop1Report {
        cond1,
        cond2,
        cond2_pass,
        cond3,
        window,
        windowed: matches!(union.truncation(), Truncation::Radius(_)),
    })
}

/// `g(z)/(z − μ)` with the removable point handled by a circle mean.
fn quotient(g: &dyn Fn(C64) -> C64, z: C64, mu: C64) -> C64 {
    if (z - mu).norm() < 1e-6 * (1.0 + mu.norm()) {
        let r = circle_radius(mu);
        (0..16)
            .map(|k| {
                let p = mu + C64::from_polar(r, std::f64::consts::PI * k as f64 / 8.0);
                g(p) / (p - mu)
            })
            .sum::<C64>()
            / 16.0
    } else {
        g(z) / (z - mu)
    }
}

fn membership_norm(ambient: &AmbientSpace, f: &dyn Fn(C64) -> C64, window: f64) -> f64 {
    use crate::quadrature::{LineQuadrature, PanelLayout};
    let e = ambient.structure();
    let width = if e.type_a() > 0.0 { 0.5 } else { 0.25 };
    let q = LineQuadrature::new(window, 16, PanelLayout::Uniform { width });
    q.integrate_interval(-window, window, &|t| {
        let x = C64::new(t, 0.0);
        C64::new(f(x).norm_sqr() / e.eval(x).norm_sqr(), 0.0)
    })
    .re
    .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

pub const UNIQUENESS_PASS: f64 = 0.5;
pub const UNIQUENESS_FAIL: f64 = 1e-3;
/// Directions of the probe span below this fraction of its largest Gram
/// eigenvalue are treated as numerically absent.
pub const UNIQUENESS_SPECTRAL_FLOOR: f64 = 1e-6;
pub const MINIMALITY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    /// `min ‖T|_S‖ / ‖T‖` over the probe span, with `‖T|_S‖² = Σ |T(s)|²/κ(s, s)`.
    pub uniqueness_residual: f64,
    pub uniqueness: Verdict,
    /// `S` is a windowed part of an infinite set, so the restricted space keeps
    /// directions (of relative energy about `x²/R` for a truncation radius `R`)
    /// that no windowed `S` resolves; the verdict then reflects the window.
    pub windowed: bool,
    pub extra_points: Vec<f64>,
    pub witnesses: Vec<Witness>,
    /// Points whose witness value falls below the floor.
    pub minimality_failures: Vec<f64>,
}

fn extra_points(rs: &RestrictedSpace, center: f64, points: &[f64]) -> Vec<f64> {
    const OFFSETS: [f64; 10] = [0.13, -0.17, 0.29, -0.31, 0.43, -0.47, 0.61, -0.67, 0.83, -0.89];
    OFFSETS
        .iter()
        .map(|o| center + o)
        .filter(|&y| points.iter().all(|s| (s - y).abs() > 1e-3))
        .filter(|&y| !rs.nodes().contains_within(C64::new(y, 0.0), 1e-2))
        .collect()
}

/// Uniqueness of `S` on the span of `κ`-sections at `S` plus ten nearby points,
/// and minimality witnesses `κ(x₀, z)(z − x₀)/(z − s₀)` for each `s₀ ∈ S`.
/// The witness base point `x₀` defaults to the point of `S` nearest the origin.
pub fn minimal_uniqueness(rs: &RestrictedSpace, points: &[f64], anchor: Option<f64>) -> Result<MinimalityReport> {
    if points.is_empty() {
        return Err(CoreError::InvalidInput("S is empty".into()));
    }
    let x0 = anchor.unwrap_or_else(|| points.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap());
    let extra = extra_points(rs, x0, points);
    let q: Vec<C64> = points.iter().chain(&extra).map(|&x| C64::new(x, 0.0)).collect();
    let sections: Vec<_> = q.iter().map(|&w| rs.section(w)).collect();
    let m = q.len();
    let mut k = DMatrix::<C64>::zeros(m, m);
    for (j, sec) in sections.iter().enumerate() {
        for (i, &z) in q.iter().enumerate() {
            k[(i, j)] = sec.eval(rs, z)?;
        }
    }
    let k = (&k + k.adjoint()) * C64::new(0.5, 0.0);
    // unit-norm sections, so the spectral floor is scale free
    let d: Vec<f64> = (0..m).map(|i| 1.0 / k[(i, i)].re.sqrt()).collect();
    let k = DMatrix::from_fn(m, m, |i, j| k[(i, j)] * d[i] * d[j]);
    let ns = points.len();
    let mut mm = DMatrix::<C64>::zeros(m, m);
    for s in 0..ns {
        let d = k[(s, s)].re;
        for i in 0..m {
            for j in 0..m {
                mm[(i, j)] += k[(s, i)].conj() * k[(s, j)] / d;
            }
        }
    }
    let eig = k.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..m)
        .filter(|&i| eig.eigenvalues[i] > UNIQUENESS_SPECTRAL_FLOOR * max)
        .collect();
    let mut w = DMatrix::<C64>::zeros(m, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let scale = 1.0 / eig.eigenvalues[i].sqrt();
        for r in 0..m {
            w[(r, c)] = eig.eigenvectors[(r, i)] * scale;
        }
    }
    let reduced = w.adjoint() * &mm * &w;
    let reduced = (&reduced + reduced.adjoint()) * C64::new(0.5, 0.0);
    let min = reduced.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let residual = if min.is_finite() { min.max(0.0).sqrt() } else { 0.0 };
    let uniqueness = if residual > UNIQUENESS_PASS {
        Verdict::Pass
    } else if residual < UNIQUENESS_FAIL {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };

    let mut witnesses = vec![];
    let mut failures = vec![];
    for &s0 in points {
        let wit = minimality_witness(rs, x0, s0, points)?;
        if wit.value_at_s0 < MINIMALITY_FLOOR {
            failures.push(s0);
        }
        witnesses.push(wit);
    }
    Ok(MinimalityReport {
        uniqueness_residual: residual,
        uniqueness,
        windowed: rs.dimension().is_none(),
        extra_points: extra,
        witnesses,
        minimality_failures: failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub dim: usize,
    pub rank: usize,
    /// Rank after removing each point of `Λ ∪ S` in turn.
    pub leave_one_out: Vec<usize>,
    /// Full rank and every removal drops the rank by one.
    pub complete_and_minimal: bool,
}

pub const RANK_TOL: f64 = 1e-9;

/// Builds `H(E) = polynomials of degree < n` explicitly (monomials, weighted
/// quadrature Gram, Cholesky orthonormalization) and tests the kernels at
/// `Λ ∪ S` for completeness and minimality by numerical rank.
pub fn finite_dim_oracle(e: &StructureFunction, lambda: &NodeSequence, points: &[f64]) -> Result<RankReport> {
    let n = e
        .dimension()
        .ok_or_else(|| CoreError::Precondition("the oracle needs a polynomial E".into()))?;
    let all: Vec<C64> = lambda
        .nodes()
        .iter()
        .copied()
        .chain(points.iter().map(|&x| C64::new(x, 0.0)))
        .collect();
    if all.len() != n {
        return Err(CoreError::DimensionMismatch { points: all.len(), dim: n });
    }
    let ambient = AmbientSpace::new(e.clone());
    // centred, scaled monomials keep the Gram matrix tame
    let center = e.zeros().iter().map(|z| z.re).sum::<f64>() / n as f64;
    let scale = e.zeros().iter().map(|z| (z - center).norm()).fold(1.0, f64::max);
    let phi = |k: usize, z: C64| ((z - center) / scale).powu(k as u32);
    let gram = SquareMatrix::from_fn(n, |i, j| ambient.inner_product(&|z| phi(j, z), &|z| phi(i, z)).value);
    let chol = Cholesky::new(&gram).ok_or_else(|| CoreError::NumericalSingularity(C64::new(center, 0.0)))?;
    // ψ = L⁻¹ φ is orthonormal; the evaluation functional at ν has coordinates conj ψ(ν)
    let rows: Vec<Vec<C64>> = all
        .iter()
        .map(|&z| {
            let v: Vec<C64> = (0..n).map(|k| phi(k, z)).collect();
            chol.forward(&v)
        })
        .collect();
    let rank_of = |skip: Option<usize>| {
        let idx: Vec<usize> = (0..n).filter(|&i| Some(i) != skip).collect();
        let m = DMatrix::from_fn(idx.len(), n, |r, c| rows[idx[r]][c]);
        numerical_rank(&row_normalized(&m), RANK_TOL)
    };
    let rank = rank_of(None);
    let leave_one_out: Vec<usize> = (0..n).map(|i| rank_of(Some(i))).collect();
    Ok(RankReport {
        dim: n,
        rank,
        complete_and_minimal: rank == n && leave_one_out.iter().all(|&r| r + 1 == rank),
        leave_one_out,
    })
}

/// Function whose distance to kernel spans is measured.
pub enum Target<'a> {
    /// The ambient kernel `k_w`.
    Kernel(C64),
    /// An ambient element; its norm comes from the inner-product rule.
    Function(&'a dyn Fn(C64) -> C64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStep {
    pub truncation: usize,
    /// Distance from the target to the span.
    pub residual: f64,
    /// Distance relative to the target norm.
    pub relative: f64,
}

/// Distance from `target` to `span{k_μ : μ among the first t points of Λ ∪ S by
/// modulus}` for each `t` in `truncations`.
pub fn completeness_residual(
    rs: &RestrictedSpace,
    points: &[f64],
    target: Target<'_>,
    truncations: &[usize],
) -> Result<Vec<ResidualStep>> {
    let ambient = rs.ambient();
    let mut union: Vec<C64> = rs.nodes().nodes().to_vec();
    union.extend(points.iter().map(|&x| C64::new(x, 0.0)));
    union.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let (norm_sqr, values): (f64, Box<dyn Fn(C64) -> C64>) = match target {
        Target::Kernel(w) => (ambient.kernel_value(w, w).re, Box::new(move |p| ambient.kernel_value(p, w))),
        Target::Function(f) => (ambient.norm_sqr(f).value.re, Box::new(f)),
    };
    let mut out = vec![];
    for &t in truncations {
        let pts = &union[..t.min(union.len())];
        let sections: Vec<_> = pts.iter().map(|&p| ambient.kernel(p)).collect();
        let gram = SquareMatrix::from_fn(pts.len(), |i, j| sections[j].eval(pts[i]));
        let chol = Cholesky::new(&gram).ok_or_else(|| CoreError::NearDependence {
            condition: f64::INFINITY,
            first: pts.first().copied().unwrap_or_default(),
            second: pts.last().copied().unwrap_or_default(),
        })?;
        // ‖P f‖² = b* G⁻¹ b = |L⁻¹ b|², with b_i = ⟨f, k_{μ_i}⟩ = f(μ_i)
        let b: Vec<C64> = pts.iter().map(|&p| values(p)).collect();
        let proj: f64 = chol.forward(&b).iter().map(|v| v.norm_sqr()).sum();
        let residual = (norm_sqr - proj).max(0.0).sqrt();
        out.push(ResidualStep {
            truncation: t,
            residual,
            relative: residual / norm_sqr.max(f64::MIN_POSITIVE).sqrt(),
        });
    }
    Ok(out)
}

/// Largest relative norm defects over a family of constructed elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub elements: usize,
    /// `‖F (z − w̄)/(z − w)‖` against `‖F‖` for `F(w) = 0`.
    pub division: f64,
    /// `‖F*‖` against `‖F‖`.
    pub conjugation: f64,
    /// Two zeros removed at once through a two-factor Blaschke product.
    pub double_division: f64,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.max(f64::MIN_POSITIVE)
}

/// Random `κ`-combinations tested against the division and conjugation
/// axioms. Anchors are real points in `(−3, 3)`, zeros have `0.3 ≤ |Im| ≤ 1.5`.
pub fn axiom_suite(rs: &RestrictedSpace, count: usize, seed: u64) -> Result<AxiomReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let real = |rng: &mut rand_chacha::ChaCha8Rng| C64::new(rng.gen_range(-3.0..3.0), 0.0);
    let nonreal = |rng: &mut rand_chacha::ChaCha8Rng| {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        C64::new(rng.gen_range(-2.0..2.0), sign * rng.gen_range(0.3..1.5))
    };
    let mut report = AxiomReport {
        elements: count,
        division: 0.0,
        conjugation: 0.0,
        double_division: 0.0,
    };
    let ambient = rs.ambient();
    for _ in 0..count {
        let (a, b, c) = (real(&mut rng), real(&mut rng), real(&mut rng));
        let (w1, w2) = (nonreal(&mut rng), nonreal(&mut rng));

        let t = rs.kappa(w1, a)? / rs.kappa(w1, b)?;
        let f = rs.combination(&[(C64::new(1.0, 0.0), a), (-t, b)]);
        let (n0, n1) = rs.blaschke_invariance_check(&f, w1)?;
        report.division = report.division.max(relative_gap(n0, n1));
        let (n0, n1) = rs.conjugation_check(&f);
        report.conjugation = report.conjugation.max(relative_gap(n0, n1));

        // F = κ_a + x κ_b + y κ_c with F(w1) = F(w2) = 0
        let m = DMatrix::from_row_slice(2, 2, &[rs.kappa(w1, b)?, rs.kappa(w1, c)?, rs.kappa(w2, b)?, rs.kappa(w2, c)?]);
        let rhs = nalgebra::DVector::from_vec(vec![-rs.kappa(w1, a)?, -rs.kappa(w2, a)?]);
        let xy = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| CoreError::Precondition("degenerate two-zero system".into()))?;
        let g = rs.combination(&[(C64::new(1.0, 0.0), a), (xy[0], b), (xy[1], c)]);
        let blaschke = |z: C64| (z - w1.conj()) * (z - w2.conj()) / ((z - w1) * (z - w2));
        let n0 = ambient.norm_sqr(&|z| g.image(z)).value.re.max(0.0).sqrt();
        let n1 = ambient.norm_sqr(&|z| g.image(z) * blaschke(z)).value.re.max(0.0).sqrt();
        report.double_division = report.double_division.max(relative_gap(n0, n1));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::{complete, CompletionParams};
    use crate::entire::make_structure_function;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn integers(skip: &[i64], radius: i64) -> NodeSequence {
        let v = (-radius..=radius).filter(|n| !skip.contains(n)).map(|n| c(n as f64, 0.0)).collect();
        NodeSequence::new(v, Truncation::Radius(radius as f64)).unwrap()
    }

    #[test]
    fn characterization_on_integers() {
        let pw = AmbientSpace::paley_wiener();
        let r = prop1_check(&pw, &integers(&[], 400)).unwrap();
        assert!(r.cond1.converged);
        assert!(r.cond2_pass, "{:?}", r.cond2);
        assert!(r.cond3.violations.is_empty(), "{:?}", r.cond3);
        assert!(r.cond3.label.starts_with("heuristic"));

        let r = prop1_check(&pw, &integers(&[0], 400)).unwrap();
        assert!(r.cond3.violations.contains(&"1".to_string()), "{:?}", r.cond3);
    }

    #[test]
    fn characterization_rejects_harmonic() {
        let seq = NodeSequence::new((1..=2000).map(|n| c(0.0, -(n as f64))).collect(), Truncation::Radius(2000.0)).unwrap();
        let r = prop1_check(&AmbientSpace::paley_wiener(), &seq).unwrap();
        assert!(!r.cond1.converged);
        assert!(!r.cond2_pass);
    }

    #[test]
    fn parseval_examples() {
        let rs = RestrictedSpace::build(AmbientSpace::paley_wiener(), integers(&[0], 300)).unwrap();
        let zero: [KappaCombination<'_>; 1] = [rs.combination(&[(c(0.0, 0.0), c(0.0, 0.0))])];
        assert_eq!(parseval_defect(&rs, &[0.0], &zero).unwrap(), 0.0);
        let t = rs.combination(&[(c(0.6, 0.8), c(0.0, 0.0))]);
        let u = t.scaled(C64::from_polar(1.0, 1.234));
        let (a, b) = (
            parseval_defect(&rs, &[0.0], &[t]).unwrap(),
            parseval_defect(&rs, &[0.0], &[u]).unwrap(),
        );
        assert!(a < 1e-10 && (a - b).abs() < 1e-12);
    }

    #[test]
    fn sinc_witness() {
        let rs = RestrictedSpace::build(AmbientSpace::paley_wiener(), NodeSequence::empty()).unwrap();
        let s: Vec<f64> = (-10..=10).map(|n| n as f64).collect();
        let w = minimality_witness(&rs, 0.0, 0.0, &s).unwrap();
        assert!((w.norm - 1.0).abs() < 1e-12 && (w.value_at_s0 - 1.0).abs() < 1e-12);
        assert!(w.max_off_support < 1e-12);
    }

    #[test]
    fn oracle_and_uniqueness_two_dimensional() {
        let e = make_structure_function(0.0, vec![c(0.0, -1.0), c(0.0, -1.0)], 0.0).unwrap();
        let lambda = NodeSequence::exact(vec![c(0.0, 1.0)]).unwrap();
        let rs = RestrictedSpace::build(AmbientSpace::new(e.clone()), lambda.clone()).unwrap();
        let res = complete(&rs, &CompletionParams::default()).unwrap();
        let r = finite_dim_oracle(&e, &lambda, &res.points).unwrap();
        assert_eq!((r.rank, r.leave_one_out.clone()), (2, vec![1, 1]));
        let m = minimal_uniqueness(&rs, &res.points, Some(res.anchor)).unwrap();
        assert_eq!(m.uniqueness, Verdict::Pass, "{m:?}");
        assert!(matches!(
            finite_dim_oracle(&e, &lambda, &[]),
            Err(CoreError::DimensionMismatch { points: 1, dim: 2 })
        ));
        let one = make_structure_function(0.0, vec![c(0.0, -1.0)], 0.0).unwrap();
        assert_eq!(finite_dim_oracle(&one, &NodeSequence::empty(), &[0.4]).unwrap().rank, 1);
    }

    #[test]
    fn dropped_point_breaks_uniqueness() {
        let e = make_structure_function(0.0, vec![c(0.5, -1.0), c(-0.4, -0.6), c(1.1, -1.5), c(0.0, -2.0)], 0.0).unwrap();
        let lambda = NodeSequence::exact(vec![c(0.3, 0.8)]).unwrap();
        let rs = RestrictedSpace::build(AmbientSpace::new(e), lambda).unwrap();
        let res = complete(&rs, &CompletionParams::default()).unwrap();
        assert_eq!(res.points.len(), 3);
        let full = minimal_uniqueness(&rs, &res.points, Some(res.anchor)).unwrap();
        assert_eq!(full.uniqueness, Verdict::Pass);
        let dropped: Vec<f64> = res.points.iter().copied().filter(|&s| s != res.anchor).skip(1).chain([res.anchor]).collect();
        let m = minimal_uniqueness(&rs, &dropped, Some(res.anchor)).unwrap();
        assert_eq!(m.uniqueness, Verdict::Fail, "{}", m.uniqueness_residual);
    }

    #[test]
    fn completeness_residual_decreases() {
        let rs = RestrictedSpace::build(AmbientSpace::paley_wiener(), integers(&[0], 200)).unwrap();
        let steps = completeness_residual(&rs, &[0.0], Target::Kernel(c(0.3, 0.0)), &[10, 50, 200]).unwrap();
        assert!(steps.windows(2).all(|w| w[1].residual <= w[0].residual + 1e-10));
        let on = completeness_residual(&rs, &[0.0], Target::Kernel(c(2.0, 0.0)), &[50]).unwrap();
        assert!(on[0].residual < 1e-6);
    }
}
