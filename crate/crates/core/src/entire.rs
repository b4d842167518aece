//! Entire-function primitives: node sequences, Blaschke sums, canonical and
//! symmetric products, Hermite–Biehler structure functions and their phases.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::C64;

/// How a node list relates to the (possibly infinite) sequence it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Truncation {
    /// The list is the whole sequence.
    Exact,
    /// Nodes of an infinite sequence with `|λ| ≤ R`.
    Radius(f64),
}

/// Distinct finite complex nodes `Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSequence {
    nodes: Vec<C64>,
    truncation: Truncation,
}

impl NodeSequence {
    pub fn new(nodes: Vec<C64>, truncation: Truncation) -> Result<Self> {
        if let Some(z) = nodes.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::InvalidInput(format!("node {z} is not finite")));
        }
        if let Truncation::Radius(r) = truncation {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CoreError::InvalidInput(format!("truncation radius {r} must be positive and finite")));
            }
        }
        let mut sorted = nodes.clone();
        sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(CoreError::InvalidInput(format!("node {} appears more than once", w[0])));
        }
        Ok(Self { nodes, truncation })
    }

    pub fn exact(nodes: Vec<C64>) -> Result<Self> {
        Self::new(nodes, Truncation::Exact)
    }

    pub fn empty() -> Self {
        Self {
            nodes: vec![],
            truncation: Truncation::Exact,
        }
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    /// Nodes ordered by modulus (stable on ties).
    pub fn by_modulus(&self) -> Vec<C64> {
        let mut v = self.nodes.clone();
        v.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        v
    }

    pub fn contains_within(&self, z: C64, tol: f64) -> bool {
        self.nodes.iter().any(|l| (l - z).norm() <= tol)
    }

    /// Union with extra real points, keeping this sequence's truncation.
    pub fn union_real(&self, extra: &[f64]) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        nodes.extend(extra.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(nodes, self.truncation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlaschkeVerdict {
    Convergent,
    Divergent,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeReport {
    /// Partial sums of `|Im λ|/|λ|²` over nodes ordered by modulus.
    pub partial_sums: Vec<f64>,
    /// `S(n) − S(n/10)`.
    pub decade_increment: f64,
    /// `S(n/10) − S(n/100)`.
    pub previous_decade_increment: f64,
    pub verdict: BlaschkeVerdict,
}

impl BlaschkeReport {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }
}

/// Increment below which the last decade of terms counts as settled.
pub const BLASCHKE_CAUCHY_TOL: f64 = 1e-8;

/// Partial sums of the Blaschke series over the first `n_terms` nodes by modulus.
///
/// Finite (`Exact`) sequences are always convergent. For truncations of
/// infinite sequences the verdict compares consecutive decades of terms:
/// settled or geometrically shrinking decades are convergent; decades that do
/// not shrink (harmonic behaviour) or tenfold growth are divergent.
pub fn blaschke_sum(seq: &NodeSequence, n_terms: usize) -> Result<BlaschkeReport> {
    if n_terms == 0 {
        return Err(CoreError::InvalidInput("n_terms must be at least 1".into()));
    }
    let ordered = seq.by_modulus();
    let n = n_terms.min(ordered.len());
    let mut partial_sums = Vec::with_capacity(n);
    let mut acc = 0.0;
    for z in &ordered[..n] {
        let m2 = z.norm_sqr();
        if m2 == 0.0 {
            return Err(CoreError::ZeroNode);
        }
        acc += z.im.abs() / m2;
        partial_sums.push(acc);
    }
    let at = |k: usize| if k == 0 { 0.0 } else { partial_sums[k - 1] };
    let d1 = at(n) - at(n / 10);
    let d0 = at(n / 10) - at(n / 100);
    let verdict = if seq.truncation() == Truncation::Exact || d1 <= BLASCHKE_CAUCHY_TOL {
        BlaschkeVerdict::Convergent
    } else if n < 100 {
        BlaschkeVerdict::Undetermined
    } else if at(n) > 10.0 * at(n / 10) || (d0 > 0.0 && d1 >= 0.9 * d0) {
        BlaschkeVerdict::Divergent
    } else if d0 > 0.0 && d1 <= 0.5 * d0 {
        BlaschkeVerdict::Convergent
    } else {
        BlaschkeVerdict::Undetermined
    };
    Ok(BlaschkeReport {
        partial_sums,
        decade_increment: d1,
        previous_decade_increment: d0,
        verdict,
    })
}

/// Product accumulated as unit phase times `exp(log-modulus)`, so long
/// products neither overflow nor underflow in intermediate steps.
#[derive(Debug, Clone, Copy)]
struct LogProduct {
    phase: C64,
    log_mod: f64,
}

impl LogProduct {
    fn one() -> Self {
        Self {
            phase: C64::new(1.0, 0.0),
            log_mod: 0.0,
        }
    }

    #[inline]
    fn mul(&mut self, f: C64) {
        let m = f.norm();
        if m == 0.0 {
            self.log_mod = f64::NEG_INFINITY;
        } else {
            self.phase *= f / m;
            self.log_mod += m.ln();
        }
    }

    fn value(self) -> C64 {
        if self.log_mod == f64::NEG_INFINITY {
            C64::new(0.0, 0.0)
        } else {
            self.phase * self.log_mod.exp()
        }
    }
}

/// Regularized canonical product `G_Λ(z) = z^m ∏ (1 − z/λ) e^{Re(1/λ) z}`,
/// where `m ∈ {0, 1}` accounts for a node at the origin.
#[derive(Debug, Clone)]
pub struct CanonicalProduct {
    reciprocals: Vec<C64>,
    exponent: f64,
    has_origin: bool,
    exact: bool,
}

impl CanonicalProduct {
    pub fn eval(&self, z: C64) -> C64 {
        let mut p = LogProduct::one();
        if self.has_origin {
            p.mul(z);
        }
        for w in &self.reciprocals {
            p.mul(C64::new(1.0, 0.0) - z * w);
        }
        let e = z * self.exponent;
        p.log_mod += e.re;
        p.phase *= C64::from_polar(1.0, e.im);
        p.value()
    }

    /// `|f_last(z) − 1| · count` for the outermost included factor; zero for
    /// finite sequences.
    pub fn truncation_residual(&self, z: C64) -> f64 {
        if self.exact {
            return 0.0;
        }
        match self.reciprocals.last() {
            Some(w) => {
                let f = (C64::new(1.0, 0.0) - z * w) * (z * w.re).exp();
                (f - 1.0).norm() * self.reciprocals.len() as f64
            }
            None => 0.0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.reciprocals.len() + usize::from(self.has_origin)
    }
}

pub fn canonical_product(seq: &NodeSequence) -> Result<CanonicalProduct> {
    let nonzero: Vec<C64> = seq.by_modulus().into_iter().filter(|z| z.norm_sqr() > 0.0).collect();
    let has_origin = nonzero.len() < seq.len();
    if !nonzero.is_empty() {
        let tmp = NodeSequence {
            nodes: nonzero.clone(),
            truncation: seq.truncation(),
        };
        let report = blaschke_sum(&tmp, tmp.len())?;
        if report.verdict == BlaschkeVerdict::Divergent {
            return Err(CoreError::BlaschkeDivergent {
                partial_sum: report.total(),
                increment: report.decade_increment,
                terms: report.partial_sums.len(),
            });
        }
    }
    let radius = match seq.truncation() {
        Truncation::Radius(r) => r,
        Truncation::Exact => f64::INFINITY,
    };
    let reciprocals: Vec<C64> = nonzero
        .into_iter()
        .filter(|z| z.norm() <= radius)
        .map(|z| z.inv())
        .collect();
    let exponent = reciprocals.iter().map(|w| w.re).sum();
    Ok(CanonicalProduct {
        reciprocals,
        exponent,
        has_origin,
        exact: seq.truncation() == Truncation::Exact,
    })
}

/// Radius-ordered partial products `∏_{|λ|<R} (1 − z/λ)` (a node at 0
/// contributes the plain factor `z`).
#[derive(Debug, Clone)]
pub struct SymmetricProduct {
    nodes: Vec<C64>,
    /// Largest relative change between consecutive radii at each step.
    pub radius_trace: Vec<f64>,
    pub converged: bool,
}

/// Probe points at which partial products are compared across radii.
const SYMMETRIC_PROBES: [C64; 2] = [C64::new(0.5, 0.0), C64::new(0.3, 0.4)];

pub const SYMMETRIC_PRODUCT_TOL: f64 = 1e-2;

fn plain_product(nodes: &[C64], z: C64) -> C64 {
    let mut p = LogProduct::one();
    for l in nodes {
        if l.norm_sqr() == 0.0 {
            p.mul(z);
        } else {
            p.mul(C64::new(1.0, 0.0) - z / l);
        }
    }
    p.value()
}

impl SymmetricProduct {
    pub fn eval(&self, z: C64) -> C64 {
        plain_product(&self.nodes, z)
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }
}

/// Partial products over increasing radii with a Cauchy-type convergence flag:
/// the last relative change must be below `tol` and, with three or more radii,
/// no larger than the change before it.
pub fn symmetric_product(seq: &NodeSequence, radii: &[f64], tol: f64) -> Result<SymmetricProduct> {
    if radii.is_empty() {
        return Err(CoreError::InvalidInput("radii list is empty".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::InvalidInput("radii must be strictly increasing".into()));
    }
    let ordered = seq.by_modulus();
    let within = |r: f64| -> Vec<C64> { ordered.iter().cloned().filter(|z| z.norm() < r).collect() };
    let values: Vec<Vec<C64>> = radii
        .iter()
        .map(|&r| {
            let nodes = within(r);
            SYMMETRIC_PROBES.iter().map(|&z| plain_product(&nodes, z)).collect()
        })
        .collect();
    let radius_trace: Vec<f64> = values
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (b - a).norm() / b.norm().max(a.norm()).max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        })
        .collect();
    let converged = match radius_trace.as_slice() {
        [] => false,
        [last] => *last <= tol,
        [.., prev, last] => *last <= tol && (*last <= *prev * (1.0 + 1e-9) || *last <= 1e-13),
    };
    Ok(SymmetricProduct {
        nodes: within(*radii.last().unwrap()),
        radius_trace,
        converged,
    })
}

/// Hermite–Biehler function `E(z) = e^{iθ} e^{−iaz} ∏ (z − z_k)` with all
/// `z_k` in the open lower half-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFunction {
    type_a: f64,
    zeros: Vec<C64>,
    phase: f64,
}

/// Value and derivative of an entire function at a point.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub value: C64,
    pub derivative: C64,
}

pub const HB_PROBES_PER_LINE: usize = 100;
pub const HB_PROBE_LINES: [f64; 2] = [0.1, 1.0];

pub fn make_structure_function(type_a: f64, zeros: Vec<C64>, phase: f64) -> Result<StructureFunction> {
    if !(type_a >= 0.0 && type_a.is_finite()) {
        return Err(CoreError::InvalidInput(format!("type_a = {type_a} must be finite and >= 0")));
    }
    if !(phase.is_finite() && (0.0..2.0 * PI).contains(&phase)) {
        return Err(CoreError::InvalidInput(format!("phase = {phase} must lie in [0, 2pi)")));
    }
    if let Some(z) = zeros.iter().find(|z| !(z.im < 0.0) || !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CoreError::ZeroNotInLowerHalfPlane(*z));
    }
    let e = StructureFunction { type_a, zeros, phase };
    let reach = 10.0 + e.zeros.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for &y in &HB_PROBE_LINES {
        for k in 0..HB_PROBES_PER_LINE {
            let x = -reach + 2.0 * reach * k as f64 / (HB_PROBES_PER_LINE - 1) as f64;
            let z = C64::new(x, y);
            if !(e.eval(z).norm() > e.eval_star(z).norm()) {
                return Err(CoreError::NotHermiteBiehler(z));
            }
        }
    }
    Ok(e)
}

impl StructureFunction {
    /// `E(z) = e^{−iπz}`, whose de Branges space is `PW_π`.
    pub fn paley_wiener() -> Self {
        Self {
            type_a: PI,
            zeros: vec![],
            phase: 0.0,
        }
    }

    pub fn type_a(&self) -> f64 {
        self.type_a
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn unimodular_phase(&self) -> f64 {
        self.phase
    }

    pub fn is_paley_wiener(&self) -> bool {
        self.type_a == PI && self.zeros.is_empty()
    }

    /// Dimension of `H(E)` when it is finite (polynomial `E` of degree n).
    pub fn dimension(&self) -> Option<usize> {
        (self.type_a == 0.0).then_some(self.zeros.len())
    }

    fn jet_with(&self, z: C64, sign: f64, conj_zeros: bool) -> Jet {
        // sign = −1 for E, +1 for E*; E* has conjugated zeros and phase.
        let i = C64::new(0.0, 1.0);
        let mut p = C64::new(1.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for zk in &self.zeros {
            let f = z - if conj_zeros { zk.conj() } else { *zk };
            dp = dp * f + p;
            p *= f;
        }
        let k = i * sign * self.type_a;
        let pre = (i * (-sign) * self.phase).exp() * (k * z).exp();
        Jet {
            value: pre * p,
            derivative: pre * (dp + k * p),
        }
    }

    pub fn jet(&self, z: C64) -> Jet {
        self.jet_with(z, -1.0, false)
    }

    pub fn jet_star(&self, z: C64) -> Jet {
        self.jet_with(z, 1.0, true)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.jet(z).value
    }

    /// `E*(z) = conj(E(conj z))`.
    pub fn eval_star(&self, z: C64) -> C64 {
        self.jet_star(z).value
    }

    /// `(A, A')` with `A = (E + E*)/2`.
    pub fn a_jet(&self, z: C64) -> Jet {
        let (e, s) = (self.jet(z), self.jet_star(z));
        Jet {
            value: (e.value + s.value) * 0.5,
            derivative: (e.derivative + s.derivative) * 0.5,
        }
    }

    /// `(B, B')` with `B = (E* − E)/(2i)`.
    pub fn b_jet(&self, z: C64) -> Jet {
        let (e, s) = (self.jet(z), self.jet_star(z));
        let d = C64::new(0.0, 2.0);
        Jet {
            value: (s.value - e.value) / d,
            derivative: (s.derivative - e.derivative) / d,
        }
    }

    pub fn a(&self, z: C64) -> C64 {
        self.a_jet(z).value
    }

    pub fn b(&self, z: C64) -> C64 {
        self.b_jet(z).value
    }

    /// Continuous phase `φ(t) = −arg E(t) = a t − θ − Σ atan2(−Im z_k, t − Re z_k)`.
    pub fn phase(&self, t: f64) -> f64 {
        self.type_a * t
            - self.phase
            - self.zeros.iter().map(|z| (-z.im).atan2(t - z.re)).sum::<f64>()
    }

    /// `φ'(t) = a + Σ y_k / ((t − x_k)² + y_k²)`, strictly positive.
    pub fn phase_derivative(&self, t: f64) -> f64 {
        self.type_a
            + self
                .zeros
                .iter()
                .map(|z| -z.im / ((t - z.re).powi(2) + z.im * z.im))
                .sum::<f64>()
    }
}

/// Phase samples on an increasing grid: the first value is taken on the
/// continuous branch, the rest follow `−arg E(t)` by nearest-branch
/// continuation. Fails when neighbouring samples are `π` or more apart.
pub fn phase_at(e: &StructureFunction, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CoreError::InvalidInput("phase grid must be strictly increasing".into()));
    }
    let mut out = Vec::with_capacity(grid.len());
    let Some(&t0) = grid.first() else {
        return Ok(out);
    };
    out.push(e.phase(t0));
    for w in grid.windows(2) {
        let jump = e.phase(w[1]) - e.phase(w[0]);
        if jump >= PI {
            return Err(CoreError::RefinementNeeded {
                left: w[0],
                right: w[1],
                jump,
            });
        }
        let raw = -e.eval(C64::new(w[1], 0.0)).arg();
        let prev = *out.last().unwrap();
        let k = ((prev - raw) / (2.0 * PI)).round();
        out.push(raw + 2.0 * PI * k);
    }
    Ok(out)
}
