//! The ambient de Branges space `H(E)`: reproducing kernel, inner products,
//! orthogonal kernel bases from the phase, and a membership heuristic.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::entire::StructureFunction;
use crate::error::{CoreError, Result};
use crate::quadrature::{LineQuadrature, PanelLayout};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerProductStrategy {
    /// `Σ_{|n|≤N} F(n) conj G(n)`; exact for `PW_π`.
    IntegerSamples,
    /// `∫ F conj G / |E|²` by composite Gauss panels plus a mapped tail.
    WeightedQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureParams {
    pub half_width: f64,
    pub order: usize,
    pub tail_tol: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self {
            half_width: 200.0,
            order: 16,
            tail_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub half_range: usize,
    pub tail_tol: f64,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self {
            half_range: 4096,
            tail_tol: 1e-6,
        }
    }
}

/// `H(E)` together with the numerics used for its inner product.
#[derive(Debug, Clone)]
pub struct AmbientSpace {
    e: StructureFunction,
    strategy: InnerProductStrategy,
    quad_params: QuadratureParams,
    sample_params: SampleParams,
    quadrature: LineQuadrature,
}

/// Result of a numerical inner product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerProduct {
    pub value: C64,
    /// Estimated contribution beyond the sampled/integrated range.
    pub tail_estimate: f64,
    pub low_confidence: bool,
}

fn layout_for(e: &StructureFunction) -> PanelLayout {
    if e.type_a() > 0.0 {
        PanelLayout::Uniform { width: 0.5 }
    } else {
        let core = 10.0 + e.zeros().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let gap = e.zeros().iter().map(|z| -z.im).fold(f64::INFINITY, f64::min);
        PanelLayout::Graded {
            core,
            width: (2.0 * gap).clamp(0.05, 0.5),
            growth: 1.25,
        }
    }
}

impl AmbientSpace {
    /// Chooses integer samples for `E = e^{−iπz}` and quadrature otherwise.
    pub fn new(e: StructureFunction) -> Self {
        Self::with_params(e, QuadratureParams::default(), SampleParams::default())
    }

    pub fn with_params(e: StructureFunction, quad_params: QuadratureParams, sample_params: SampleParams) -> Self {
        let strategy = if e.is_paley_wiener() {
            InnerProductStrategy::IntegerSamples
        } else {
            InnerProductStrategy::WeightedQuadrature
        };
        let quadrature = LineQuadrature::new(quad_params.half_width, quad_params.order.max(16), layout_for(&e));
        Self {
            e,
            strategy,
            quad_params,
            sample_params,
            quadrature,
        }
    }

    pub fn paley_wiener() -> Self {
        Self::new(StructureFunction::paley_wiener())
    }

    pub fn structure(&self) -> &StructureFunction {
        &self.e
    }

    pub fn strategy(&self) -> InnerProductStrategy {
        self.strategy
    }

    pub fn quad_params(&self) -> QuadratureParams {
        self.quad_params
    }

    pub fn sample_params(&self) -> SampleParams {
        self.sample_params
    }

    pub fn dimension(&self) -> Option<usize> {
        self.e.dimension()
    }

    pub fn kernel(&self, w: C64) -> KernelSection {
        KernelSection::new(&self.e, w)
    }

    /// `K(z, w) = k_w(z)`.
    pub fn kernel_value(&self, z: C64, w: C64) -> C64 {
        self.kernel(w).eval(z)
    }

    pub fn inner_product(&self, f: &dyn Fn(C64) -> C64, g: &dyn Fn(C64) -> C64) -> InnerProduct {
        match self.strategy {
            InnerProductStrategy::IntegerSamples => self.sample_series(f, g),
            InnerProductStrategy::WeightedQuadrature => self.weighted_integral(f, g),
        }
    }

    pub fn norm_sqr(&self, f: &dyn Fn(C64) -> C64) -> InnerProduct {
        self.inner_product(f, f)
    }

    fn sample_series(&self, f: &dyn Fn(C64) -> C64, g: &dyn Fn(C64) -> C64) -> InnerProduct {
        let n = self.sample_params.half_range.max(16);
        let (q, h) = (n / 4, n / 2);
        let term = |k: i64| {
            let x = C64::new(k as f64, 0.0);
            f(x) * g(x).conj()
        };
        let mut partial = term(0);
        let mut s_quarter = C64::default();
        let mut s_half = C64::default();
        for k in 1..=n as i64 {
            partial += term(k) + term(-k);
            if k as usize == q {
                s_quarter = partial;
            }
            if k as usize == h {
                s_half = partial;
            }
        }
        // terms decaying like 1/n² leave a tail that halves when N doubles
        let corr = partial - s_half;
        let prev = s_half - s_quarter;
        let value = partial + corr;
        InnerProduct {
            value,
            tail_estimate: corr.norm(),
            low_confidence: (corr - prev * 0.5).norm() > self.sample_params.tail_tol * value.norm().max(f64::MIN_POSITIVE),
        }
    }

    fn weighted_integral(&self, f: &dyn Fn(C64) -> C64, g: &dyn Fn(C64) -> C64) -> InnerProduct {
        let e = &self.e;
        let integrand = |t: f64| {
            let x = C64::new(t, 0.0);
            f(x) * g(x).conj() / e.eval(x).norm_sqr()
        };
        let r = self.quadrature.integrate(&integrand);
        InnerProduct {
            value: r.value,
            tail_estimate: r.tail.norm(),
            low_confidence: (r.tail - r.tail_coarse).norm()
                > self.quad_params.tail_tol * r.value.norm().max(f64::MIN_POSITIVE),
        }
    }

    /// Real `t` in `[a, b]` with `φ(t) ≡ α (mod π)`, ascending.
    pub fn basis_points(&self, alpha: f64, window: (f64, f64)) -> Result<Vec<f64>> {
        let (a, b) = window;
        if !(a.is_finite() && b.is_finite()) {
            return Err(CoreError::InvalidInput("window must be finite".into()));
        }
        if !(b > a) {
            return Ok(vec![]);
        }
        let phi = |t: f64| self.e.phase(t);
        let (pa, pb) = (phi(a), phi(b));
        let first = ((pa - alpha) / PI).ceil() as i64;
        let last = ((pb - alpha) / PI).floor() as i64;
        let mut out = Vec::new();
        for m in first..=last {
            let target = alpha + m as f64 * PI;
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if phi(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                    break;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        Ok(out)
    }

    /// Heuristic stand-in for `F/E, F*/E ∈ H²`: partial weighted norms on
    /// `[−T, T]` must settle, and `|F(iy)/E(iy)|·√(4πy)` may not exceed twice
    /// the computed norm for `y ∈ [1, 50]` (members satisfy it with factor 1).
    pub fn membership_heuristic(&self, f: &dyn Fn(C64) -> C64, half_width: f64) -> Membership {
        let quad = LineQuadrature::new(half_width, 16, layout_for(&self.e));
        let e = &self.e;
        let density = |t: f64| {
            let x = C64::new(t, 0.0);
            C64::new(f(x).norm_sqr() / e.eval(x).norm_sqr(), 0.0)
        };
        let radii = [half_width / 8.0, half_width / 4.0, half_width / 2.0, half_width];
        let mut partial = [0.0; 4];
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (k, &r) in radii.iter().enumerate() {
            acc += quad.integrate_interval(prev, r, &density).re + quad.integrate_interval(-r, -prev, &density).re;
            partial[k] = acc;
            prev = r;
        }
        let total = partial[3];
        let inc_last = partial[3] - partial[2];
        let inc_prev = partial[2] - partial[1];
        let norm_margin = if total == 0.0 {
            1.0
        } else {
            let ratio = if inc_prev > 0.0 {
                inc_last / inc_prev
            } else if inc_last > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            (0.75 - ratio).max((1e-3 * total - inc_last) / total)
        };

        let norm = total.sqrt();
        let mut worst: f64 = 0.0;
        for k in 0..20 {
            let y = 50f64.powf(k as f64 / 19.0);
            let z = C64::new(0.0, y);
            let r = f(z).norm() / e.eval(z).norm() * (4.0 * PI * y).sqrt();
            worst = worst.max(r);
        }
        let growth_margin = if worst == 0.0 {
            1.0
        } else if norm == 0.0 || !worst.is_finite() {
            -1.0
        } else {
            (2.0 * norm / worst).log10()
        };
        let margin = norm_margin.min(growth_margin);
        Membership {
            plausible: margin > 0.0,
            margin,
            norm_margin,
            growth_margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub plausible: bool,
    /// `min(norm_margin, growth_margin)`; positive iff plausible.
    pub margin: f64,
    pub norm_margin: f64,
    pub growth_margin: f64,
}

/// Real-on-ℝ pair `A = (E + E*)/2`, `B = (E* − E)/(2i)` with `E = A − iB`.
#[derive(Debug, Clone, Copy)]
pub struct AbSplit<'a> {
    e: &'a StructureFunction,
}

impl AbSplit<'_> {
    pub fn a(&self, z: C64) -> C64 {
        self.e.a(z)
    }

    pub fn b(&self, z: C64) -> C64 {
        self.e.b(z)
    }
}

pub fn ab_split(e: &StructureFunction) -> AbSplit<'_> {
    AbSplit { e }
}

/// `k_w(z) = (E(z) conj E(w) − E*(z) conj E*(w)) / (2πi (conj w − z))`.
///
/// Equal to `(conj A(w) B(z) − conj B(w) A(z)) / (π (z − conj w))`, but the
/// `E`-form avoids cancelling `e^{±ia z}` terms off the real axis.
#[derive(Debug, Clone)]
pub struct KernelSection {
    e: StructureFunction,
    w: C64,
    e_w: C64,
    e_star_w: C64,
    diag: f64,
}

/// Relative distance to `conj w` below which the removable singularity is
/// resolved through the derivative of the numerator.
const COINCIDENCE: f64 = 1e-8;

/// `(E(z) ew − E*(z) esw) / (2πi (conj w − z))` off the diagonal.
pub(crate) fn kernel_from_values(e_z: C64, e_star_z: C64, e_w: C64, e_star_w: C64, z: C64, w: C64) -> C64 {
    (e_z * e_w - e_star_z * e_star_w) / (C64::new(0.0, 2.0 * PI) * (w.conj() - z))
}

impl KernelSection {
    fn new(e: &StructureFunction, w: C64) -> Self {
        let mut s = Self {
            e: e.clone(),
            w,
            e_w: e.eval(w).conj(),
            e_star_w: e.eval_star(w).conj(),
            diag: 0.0,
        };
        s.diag = s.eval(w).re;
        s
    }

    pub fn anchor(&self) -> C64 {
        self.w
    }

    /// `k_w(w) ≥ 0`; for real `w` this is the Wronskian `(A B' − B A')/π`.
    pub fn diag(&self) -> f64 {
        self.diag
    }

    pub fn eval(&self, z: C64) -> C64 {
        let d = z - self.w.conj();
        if d.norm() <= COINCIDENCE * (1.0 + self.w.norm()) {
            let (j, js) = (self.e.jet(z), self.e.jet_star(z));
            return (j.derivative * self.e_w - js.derivative * self.e_star_w) / C64::new(0.0, -2.0 * PI);
        }
        kernel_from_values(self.e.eval(z), self.e.eval_star(z), self.e_w, self.e_star_w, z, self.w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entire::make_structure_function;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sinc(z: C64) -> C64 {
        if z.norm() < 1e-12 {
            c(1.0, 0.0)
        } else {
            (z * PI).sin() / (z * PI)
        }
    }

    #[test]
    fn ab_split_examples() {
        let pw = StructureFunction::paley_wiener();
        let ab = ab_split(&pw);
        let z = c(0.4, -0.2);
        assert!((ab.a(z) - (z * PI).cos()).norm() < 1e-14);
        assert!((ab.b(z) - (z * PI).sin()).norm() < 1e-14);
        let e2 = make_structure_function(0.0, vec![c(0.0, -1.0), c(0.0, -1.0)], 0.0).unwrap();
        let ab = ab_split(&e2);
        assert!((ab.a(z) - (z * z - 1.0)).norm() < 1e-14);
        assert!((ab.b(z) + z * 2.0).norm() < 1e-14);
        // E = A − iB
        assert!((e2.eval(z) - (ab.a(z) - C64::i() * ab.b(z))).norm() < 1e-14);
    }

    #[test]
    fn kernel_examples() {
        let pw = AmbientSpace::paley_wiener();
        let v = pw.kernel_value(c(0.7, 0.0), c(0.3, 0.0));
        assert!((v.re - (0.4 * PI).sin() / (0.4 * PI)).abs() < 1e-14);
        assert!((v.re - 0.756_826_728_640_657).abs() < 1e-12);

        let lin = AmbientSpace::new(make_structure_function(0.0, vec![c(0.0, -1.0)], 0.0).unwrap());
        for (z, w) in [(c(0.3, 1.0), c(-2.0, 0.5)), (c(1.0, 0.0), c(1.0, 0.0))] {
            assert!((lin.kernel_value(z, w) - 1.0 / PI).norm() < 1e-14);
        }

        let quad = AmbientSpace::new(make_structure_function(0.0, vec![c(0.0, -1.0), c(0.0, -1.0)], 0.0).unwrap());
        let (z, w) = (c(0.3, 0.8), c(-1.1, 0.25));
        let expect = (z * w.conj() + 1.0) * 2.0 / PI;
        assert!((quad.kernel_value(z, w) - expect).norm() < 1e-13);
    }

    #[test]
    fn kernel_diagonal_and_coincidence() {
        let pw = AmbientSpace::paley_wiener();
        assert!((pw.kernel(c(0.3, 0.0)).diag() - 1.0).abs() < 1e-12);
        let k = pw.kernel(c(0.0, 1.0));
        assert!((k.diag() - (2.0 * PI).sinh() / (2.0 * PI)).abs() < 1e-10);
        // z = conj w is removable
        let v = k.eval(c(0.0, -1.0));
        assert!((v - c(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn pw_inner_products() {
        let pw = AmbientSpace::paley_wiener();
        let k0 = pw.kernel(c(0.0, 0.0));
        let kh = pw.kernel(c(0.5, 0.0));
        let ki = pw.kernel(c(0.0, 1.0));
        let ip = pw.inner_product(&|z| k0.eval(z), &|z| k0.eval(z));
        assert!((ip.value - 1.0).norm() < 1e-12);
        let ip = pw.inner_product(&|z| kh.eval(z), &|z| k0.eval(z));
        assert!((ip.value.re - 2.0 / PI).abs() < 1e-7, "{}", ip.value);
        let ip = pw.inner_product(&|z| ki.eval(z), &|z| ki.eval(z));
        assert!((ip.value.re - (2.0 * PI).sinh() / (2.0 * PI)).abs() < 1e-6 * 42.6, "{}", ip.value);
        assert!(!ip.low_confidence);
    }

    #[test]
    fn quadrature_reproduces_polynomial_kernels() {
        let sp = AmbientSpace::new(make_structure_function(0.0, vec![c(0.3, -1.0), c(-0.5, -0.6), c(0.0, -2.0)], 0.0).unwrap());
        let kw = sp.kernel(c(0.4, 0.7));
        let kv = sp.kernel(c(-1.2, 0.0));
        let ip = sp.inner_product(&|z| kw.eval(z), &|z| kv.eval(z));
        let expect = kw.eval(c(-1.2, 0.0));
        assert!((ip.value - expect).norm() < 1e-10 * expect.norm(), "{} vs {}", ip.value, expect);
    }

    #[test]
    fn basis_points_examples() {
        let pw = AmbientSpace::paley_wiener();
        let pts = pw.basis_points(0.0, (-3.5, 3.5)).unwrap();
        assert_eq!(pts.len(), 7);
        for (p, n) in pts.iter().zip(-3..=3) {
            assert!((p - n as f64).abs() < 1e-12);
        }
        let lin = AmbientSpace::new(make_structure_function(0.0, vec![c(0.0, -1.0)], 0.0).unwrap());
        let pts = lin.basis_points(PI / 2.0, (-10.0, 10.0)).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].abs() < 1e-12);
        assert!(pw.basis_points(0.0, (1.0, 1.0)).unwrap().is_empty());
    }

    #[test]
    fn membership_examples() {
        let pw = AmbientSpace::paley_wiener();
        assert!(pw.membership_heuristic(&sinc, 200.0).plausible);
        let wide = |z: C64| (C64::new(0.0, -2.0 * PI) * z).exp();
        let m = pw.membership_heuristic(&wide, 200.0);
        assert!(!m.plausible && m.growth_margin < 0.0);
        let m = pw.membership_heuristic(&|_| c(1.0, 0.0), 200.0);
        assert!(!m.plausible && m.norm_margin < 0.0);
    }
}
