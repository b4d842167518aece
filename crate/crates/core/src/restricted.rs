//! The restricted space `H_Λ = {T entire : G_Λ T ∈ H(E)}` with norm
//! `‖T‖ = ‖G_Λ T‖_{H(E)}`, realized as the orthogonal complement of
//! `span{k_λ}` divided by `G_Λ`.
//!
//! Its kernel is `κ(z, w) = K⊥(z, w) / (G_Λ(z) conj G_Λ(w))`, where `K⊥` is the
//! ambient kernel with the projection onto `span{k_λ}` removed. Where `G_Λ`
//! vanishes (at the nodes) `κ` is evaluated as a mean over a small circle.

use std::f64::consts::PI;

use log::warn;

use crate::entire::{canonical_product, CanonicalProduct, NodeSequence};
use crate::error::{CoreError, Result};
use crate::linalg::{condition_estimate, Cholesky, SquareMatrix};
use crate::space::{kernel_from_values, AmbientSpace};
use crate::C64;

/// What to do when the Gram matrix of `{k_λ}` is nearly singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RidgePolicy {
    /// Fail with [`CoreError::NearDependence`].
    Reject,
    /// Add `relative · trace / n` to the diagonal and record a warning.
    Regularize { relative: f64 },
}

impl Default for RidgePolicy {
    fn default() -> Self {
        RidgePolicy::Regularize { relative: 1e-12 }
    }
}

pub const MAX_CONDITION: f64 = 1e12;
pub const CIRCLE_POINTS: usize = 16;
/// Circle radius around a node `λ` is `CIRCLE_SCALE · (1 + |λ|)`.
pub const CIRCLE_SCALE: f64 = 1e-3;
/// Points closer than a quarter radius to a node go through the circle mean.
const CIRCLE_TRIGGER: f64 = 0.25;
const CIRCLE_AGREEMENT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RestrictedSpace {
    ambient: AmbientSpace,
    seq: NodeSequence,
    nodes: Vec<C64>,
    node_e: Vec<C64>,
    node_e_star: Vec<C64>,
    gram: SquareMatrix,
    factor: Cholesky,
    g: CanonicalProduct,
    condition_number: f64,
    factor_residual: f64,
    ridge: Option<f64>,
    warnings: Vec<String>,
}

pub fn circle_radius(center: C64) -> f64 {
    CIRCLE_SCALE * (1.0 + center.norm())
}

fn circle_points(center: C64, radius: f64) -> impl Iterator<Item = C64> {
    (0..CIRCLE_POINTS).map(move |k| center + C64::from_polar(radius, 2.0 * PI * k as f64 / CIRCLE_POINTS as f64))
}

/// Mean of `f` over circles of radius `r` and `r/2` about `center`; both must agree.
/// For `f` analytic near `center` this is `f(center)`.
pub fn circle_mean(center: C64, f: &dyn Fn(C64) -> Result<C64>) -> Result<C64> {
    let r = circle_radius(center);
    let mut outer = C64::default();
    let mut inner = C64::default();
    let mut scale = 0.0;
    for z in circle_points(center, r) {
        let v = f(z)?;
        scale += v.norm();
        outer += v;
    }
    for z in circle_points(center, 0.5 * r) {
        let v = f(z)?;
        scale += v.norm();
        inner += v;
    }
    let n = CIRCLE_POINTS as f64;
    let (outer, inner, scale) = (outer / n, inner / n, scale / (2.0 * n));
    if (outer - inner).norm() > CIRCLE_AGREEMENT * scale.max(f64::MIN_POSITIVE) {
        return Err(CoreError::NumericalSingularity(center));
    }
    Ok(outer)
}

impl RestrictedSpace {
    pub fn build(ambient: AmbientSpace, seq: NodeSequence) -> Result<Self> {
        Self::build_with(ambient, seq, RidgePolicy::default())
    }

    pub fn build_with(ambient: AmbientSpace, seq: NodeSequence, policy: RidgePolicy) -> Result<Self> {
        if let Some(dim) = ambient.dimension() {
            if seq.len() >= dim {
                return Err(CoreError::IncompletenessViolation { nodes: seq.len(), dim });
            }
        }
        let g = canonical_product(&seq)?;
        let nodes = seq.nodes().to_vec();
        let e = ambient.structure();
        let node_e: Vec<C64> = nodes.iter().map(|&l| e.eval(l)).collect();
        let node_e_star: Vec<C64> = nodes.iter().map(|&l| e.eval_star(l)).collect();
        let n = nodes.len();
        let sections: Vec<_> = nodes.iter().map(|&l| ambient.kernel(l)).collect();
        let mut gram = SquareMatrix::from_fn(n, |i, j| sections[j].eval(nodes[i]));
        let defect = gram.hermitian_defect();
        if defect > 1e-12 {
            warn!("Gram matrix Hermitian defect {defect:.2e}");
        }
        for i in 0..n {
            let d = gram.get(i, i).re;
            gram.set(i, i, C64::new(d, 0.0));
            for j in 0..i {
                let v = 0.5 * (gram.get(i, j) + gram.get(j, i).conj());
                gram.set(i, j, v);
                gram.set(j, i, v.conj());
            }
        }

        let mut warnings = vec![];
        let mut ridge = None;
        let mut attempt = Cholesky::new(&gram).map(|ch| {
            let k = condition_estimate(&gram, &ch, 60);
            (ch, k)
        });
        let ill = match &attempt {
            Some((_, k)) => !(k.is_finite() && *k <= MAX_CONDITION),
            None => true,
        };
        if ill {
            let condition = attempt.as_ref().map_or(f64::INFINITY, |(_, k)| *k);
            match policy {
                RidgePolicy::Reject => return Err(near_dependence(&gram, &nodes, condition)),
                RidgePolicy::Regularize { relative } => {
                    let shift = relative * gram.trace().re / n as f64;
                    for i in 0..n {
                        gram.set(i, i, gram.get(i, i) + shift);
                    }
                    let msg = format!(
                        "Gram condition number {condition:.3e} exceeds {MAX_CONDITION:.0e}; added ridge {shift:.3e} \
                         (kernels nearly dependent, Λ is close to non-minimal)"
                    );
                    warn!("{msg}");
                    warnings.push(msg);
                    ridge = Some(shift);
                    attempt = Cholesky::new(&gram).map(|ch| {
                        let k = condition_estimate(&gram, &ch, 60);
                        (ch, k)
                    });
                    if attempt.is_none() {
                        return Err(near_dependence(&gram, &nodes, condition));
                    }
                }
            }
        }
        let (factor, condition_number) = attempt.expect("factorization checked above");
        let factor_residual = if n <= 400 { factor.residual(&gram) } else { 0.0 };
        Ok(Self {
            ambient,
            seq,
            nodes,
            node_e,
            node_e_star,
            gram,
            factor,
            g,
            condition_number,
            factor_residual,
            ridge,
            warnings,
        })
    }

    pub fn ambient(&self) -> &AmbientSpace {
        &self.ambient
    }

    pub fn nodes(&self) -> &NodeSequence {
        &self.seq
    }

    pub fn gram(&self) -> &SquareMatrix {
        &self.gram
    }

    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    /// `‖G − L L*‖/‖G‖`; computed for Gram matrices up to 400 nodes, else 0.
    pub fn factor_residual(&self) -> f64 {
        self.factor_residual
    }

    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    pub fn ridge(&self) -> Option<f64> {
        self.ridge
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn g_lambda(&self, z: C64) -> C64 {
        self.g.eval(z)
    }

    pub fn canonical_product(&self) -> &CanonicalProduct {
        &self.g
    }

    /// Dimension of `H_Λ` when the ambient space is finite-dimensional.
    pub fn dimension(&self) -> Option<usize> {
        self.ambient.dimension().map(|d| d - self.nodes.len())
    }

    /// Node (if any) close enough to `z` that `G_Λ(z)` cannot be divided by directly.
    pub fn singular_node(&self, z: C64) -> Option<C64> {
        self.nodes
            .iter()
            .copied()
            .find(|&l| (z - l).norm() < CIRCLE_TRIGGER * circle_radius(l))
    }

    /// `[k_λ(z)]_λ` as a row sharing one evaluation of `A(z)`, `B(z)`.
    fn node_kernels_at(&self, z: C64) -> Vec<C64> {
        let e = self.ambient.structure();
        let (ez, esz) = (e.eval(z), e.eval_star(z));
        self.nodes
            .iter()
            .zip(self.node_e.iter().zip(&self.node_e_star))
            .map(|(&l, (&el, &esl))| {
                let d = z - l.conj();
                if d.norm() <= 1e-8 * (1.0 + l.norm()) {
                    self.ambient.kernel_value(z, l)
                } else {
                    kernel_from_values(ez, esz, el.conj(), esl.conj(), z, l)
                }
            })
            .collect()
    }

    fn direct_section(&self, w: C64) -> DirectSection {
        let kw = self.ambient.kernel(w);
        let e = self.ambient.structure();
        let (ew, esw) = (e.eval(w).conj(), e.eval_star(w).conj());
        // b_i = k_w(λ_i)
        let b: Vec<C64> = self
            .nodes
            .iter()
            .zip(self.node_e.iter().zip(&self.node_e_star))
            .map(|(&l, (&el, &esl))| {
                let d = l - w.conj();
                if d.norm() <= 1e-8 * (1.0 + w.norm()) {
                    kw.eval(l)
                } else {
                    kernel_from_values(el, esl, ew, esw, l, w)
                }
            })
            .collect();
        let coeffs = self.factor.solve(&b);
        DirectSection {
            w,
            kw,
            coeffs,
            g_w_conj: self.g.eval(w).conj(),
        }
    }

    /// `κ(·, w)` as a reusable evaluator.
    pub fn section(&self, w: C64) -> KappaSection {
        match self.singular_node(w) {
            None => KappaSection::Direct(self.direct_section(w)),
            Some(_) => {
                let r = circle_radius(w);
                let outer = circle_points(w, r).map(|p| self.direct_section(p)).collect();
                let inner = circle_points(w, 0.5 * r).map(|p| self.direct_section(p)).collect();
                KappaSection::Circle { center: w, outer, inner }
            }
        }
    }

    /// `K⊥(z, w)`.
    pub fn complement_kernel(&self, z: C64, w: C64) -> C64 {
        self.direct_section(w).complement_at(self, z)
    }

    /// `κ(z, w)`.
    pub fn kappa(&self, z: C64, w: C64) -> Result<C64> {
        self.section(w).eval(self, z)
    }

    pub fn kappa_diag(&self, x: C64) -> Result<f64> {
        Ok(self.kappa(x, x)?.re)
    }

    /// Binds `Σ c_i κ(·, w_i)` to this space.
    pub fn combination(&self, terms: &[(C64, C64)]) -> KappaCombination<'_> {
        KappaCombination {
            rs: self,
            coeffs: terms.iter().map(|t| t.0).collect(),
            sections: terms.iter().map(|t| self.section(t.1)).collect(),
        }
    }

    /// `G_Λ(z) / G_Λ*(z)`, a ratio of Blaschke factors over the nonreal nodes.
    pub fn blaschke_ratio(&self, z: C64) -> C64 {
        let one = C64::new(1.0, 0.0);
        self.nodes
            .iter()
            .filter(|l| l.im != 0.0)
            .map(|l| (one - z / l) / (one - z / l.conj()))
            .product()
    }

    /// `(‖F‖, ‖F · (z − conj w0)/(z − w0)‖)` in the restricted norm, both by the
    /// ambient inner product of `G_Λ F`.
    pub fn blaschke_invariance_check(&self, f: &dyn RestrictedFunction, w0: C64) -> Result<(f64, f64)> {
        if w0.im == 0.0 {
            return Err(CoreError::InvalidInput(format!("w0 = {w0} must be nonreal")));
        }
        let norm = self.ambient.norm_sqr(&|z| f.image(z)).value.re.max(0.0).sqrt();
        if norm == 0.0 {
            return Ok((0.0, 0.0));
        }
        let bound = norm * self.kappa_diag(w0)?.max(0.0).sqrt();
        let at = f.value(w0)?;
        if at.norm() > 1e-8 * bound {
            return Err(CoreError::Precondition(format!(
                "F(w0) = {at:.3e} does not vanish (scale {bound:.3e})"
            )));
        }
        let rotated = |z: C64| f.image(z) * (z - w0.conj()) / (z - w0);
        let norm_b = self.ambient.norm_sqr(&rotated).value.re.max(0.0).sqrt();
        Ok((norm, norm_b))
    }

    /// `(‖F‖, ‖F*‖)` in the restricted norm.
    pub fn conjugation_check(&self, f: &dyn RestrictedFunction) -> (f64, f64) {
        let norm = self.ambient.norm_sqr(&|z| f.image(z)).value.re.max(0.0).sqrt();
        let star = |z: C64| self.blaschke_ratio(z) * f.image(z.conj()).conj();
        let norm_star = self.ambient.norm_sqr(&star).value.re.max(0.0).sqrt();
        (norm, norm_star)
    }
}

fn near_dependence(gram: &SquareMatrix, nodes: &[C64], condition: f64) -> CoreError {
    let n = gram.dim();
    let mut best = (0, 0, -1.0);
    for i in 0..n {
        for j in 0..i {
            let c = gram.get(i, j).norm() / (gram.get(i, i).re * gram.get(j, j).re).sqrt();
            if c > best.2 {
                best = (i, j, c);
            }
        }
    }
    let (i, j) = if n >= 2 { (best.0, best.1) } else { (0, 0) };
    CoreError::NearDependence {
        condition,
        first: nodes.get(j).copied().unwrap_or_default(),
        second: nodes.get(i).copied().unwrap_or_default(),
    }
}

#[derive(Debug, Clone)]
pub struct DirectSection {
    w: C64,
    kw: crate::space::KernelSection,
    coeffs: Vec<C64>,
    g_w_conj: C64,
}

impl DirectSection {
    fn complement_at(&self, rs: &RestrictedSpace, z: C64) -> C64 {
        let row = rs.node_kernels_at(z);
        let proj: C64 = row.iter().zip(&self.coeffs).map(|(k, c)| k * c).sum();
        self.kw.eval(z) - proj
    }

    fn kappa_direct(&self, rs: &RestrictedSpace, z: C64) -> C64 {
        self.complement_at(rs, z) / (rs.g.eval(z) * self.g_w_conj)
    }
}

/// `κ(·, w)` for a fixed `w`; a circle of direct sections when `w` sits on a node.
#[derive(Debug, Clone)]
pub enum KappaSection {
    Direct(DirectSection),
    Circle {
        center: C64,
        outer: Vec<DirectSection>,
        inner: Vec<DirectSection>,
    },
}

impl KappaSection {
    pub fn anchor(&self) -> C64 {
        match self {
            KappaSection::Direct(d) => d.w,
            KappaSection::Circle { center, .. } => *center,
        }
    }

    /// `G_Λ(z) κ(z, w) = K⊥(z, w)/conj G_Λ(w)`, an element of `H(E)`.
    pub fn image(&self, rs: &RestrictedSpace, z: C64) -> C64 {
        match self {
            KappaSection::Direct(d) => d.complement_at(rs, z) / d.g_w_conj,
            KappaSection::Circle { outer, .. } => {
                outer.iter().map(|d| d.complement_at(rs, z) / d.g_w_conj).sum::<C64>() / outer.len() as f64
            }
        }
    }

    fn eval_off_nodes(&self, rs: &RestrictedSpace, z: C64) -> Result<C64> {
        match self {
            KappaSection::Direct(d) => Ok(d.kappa_direct(rs, z)),
            KappaSection::Circle { center, outer, inner } => {
                let n = CIRCLE_POINTS as f64;
                let mut scale = 0.0;
                let mut mean = |set: &[DirectSection]| {
                    let mut s = C64::default();
                    for d in set {
                        let v = d.kappa_direct(rs, z);
                        scale += v.norm();
                        s += v;
                    }
                    s / n
                };
                let (o, i) = (mean(outer), mean(inner));
                if (o - i).norm() > CIRCLE_AGREEMENT * (scale / (2.0 * n)).max(f64::MIN_POSITIVE) {
                    return Err(CoreError::NumericalSingularity(*center));
                }
                Ok(o)
            }
        }
    }

    /// `κ(z, w)`.
    pub fn eval(&self, rs: &RestrictedSpace, z: C64) -> Result<C64> {
        match rs.singular_node(z) {
            None => self.eval_off_nodes(rs, z),
            Some(_) => circle_mean(z, &|p| self.eval_off_nodes(rs, p)),
        }
    }
}

/// An element `T` of the restricted space seen through its ambient image `G_Λ T`.
pub trait RestrictedFunction {
    /// `G_Λ(z) T(z)`.
    fn image(&self, z: C64) -> C64;
    /// `T(z)`.
    fn value(&self, z: C64) -> Result<C64>;
}

/// `Σ c_i κ(·, w_i)` bound to a restricted space.
#[derive(Debug, Clone)]
pub struct KappaCombination<'a> {
    rs: &'a RestrictedSpace,
    coeffs: Vec<C64>,
    sections: Vec<KappaSection>,
}

impl KappaCombination<'_> {
    pub fn terms(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        self.coeffs.iter().copied().zip(self.sections.iter().map(|s| s.anchor()))
    }

    /// `‖T‖² = Σ_{i,j} c_i conj(c_j) κ(w_j, w_i)`, exact through the kernel.
    pub fn norm_sqr(&self) -> Result<f64> {
        let mut acc = C64::default();
        for (ci, si) in self.coeffs.iter().zip(&self.sections) {
            for (cj, sj) in self.coeffs.iter().zip(&self.sections) {
                acc += ci * cj.conj() * si.eval(self.rs, sj.anchor())?;
            }
        }
        Ok(acc.re.max(0.0))
    }

    /// Scales all coefficients.
    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }
}

impl RestrictedFunction for KappaCombination<'_> {
    fn image(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .zip(&self.sections)
            .map(|(c, s)| c * s.image(self.rs, z))
            .sum()
    }

    fn value(&self, z: C64) -> Result<C64> {
        let mut acc = C64::default();
        for (c, s) in self.coeffs.iter().zip(&self.sections) {
            acc += c * s.eval(self.rs, z)?;
        }
        Ok(acc)
    }
}

/// A restricted element given by an explicit ambient image `F = G_Λ T`.
pub struct ImageFunction<'a, F: Fn(C64) -> C64> {
    pub rs: &'a RestrictedSpace,
    pub image: F,
}

impl<F: Fn(C64) -> C64> RestrictedFunction for ImageFunction<'_, F> {
    fn image(&self, z: C64) -> C64 {
        (self.image)(z)
    }

    fn value(&self, z: C64) -> Result<C64> {
        let direct = |p: C64| Ok((self.image)(p) / self.rs.g_lambda(p));
        match self.rs.singular_node(z) {
            None => direct(z),
            Some(_) => circle_mean(z, &direct),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entire::{make_structure_function, Truncation};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pw(nodes: &[f64]) -> RestrictedSpace {
        let seq = NodeSequence::exact(nodes.iter().map(|&x| c(x, 0.0)).collect()).unwrap();
        RestrictedSpace::build(AmbientSpace::paley_wiener(), seq).unwrap()
    }

    #[test]
    fn gram_examples() {
        let rs = pw(&[0.0, 1.0]);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((rs.gram().get(i, j) - e).norm() < 1e-15);
            }
        }
        let rs = pw(&[0.0, 0.5]);
        assert!((rs.gram().get(0, 1).re - 2.0 / PI).abs() < 1e-14);
        assert!(rs.factor_residual() < 1e-15);
    }

    #[test]
    fn pigeonhole_rejected() {
        let e = make_structure_function(0.0, vec![c(0.0, -1.0), c(0.0, -1.0)], 0.0).unwrap();
        let seq = NodeSequence::exact(vec![c(0.0, 1.0), c(0.0, -0.5), c(0.3, 0.0)]).unwrap();
        assert!(matches!(
            RestrictedSpace::build(AmbientSpace::new(e), seq),
            Err(CoreError::IncompletenessViolation { nodes: 3, dim: 2 })
        ));
    }

    #[test]
    fn near_dependence_policies() {
        let seq = NodeSequence::exact(vec![c(0.0, 0.0), c(1e-7, 0.0)]).unwrap();
        let err = RestrictedSpace::build_with(AmbientSpace::paley_wiener(), seq.clone(), RidgePolicy::Reject).unwrap_err();
        assert!(matches!(err, CoreError::NearDependence { .. }), "{err}");
        let rs = RestrictedSpace::build(AmbientSpace::paley_wiener(), seq).unwrap();
        assert!(rs.ridge().is_some());
        assert_eq!(rs.warnings().len(), 1);
    }

    #[test]
    fn complement_kernel_examples() {
        let rs = pw(&[0.0]);
        let v = rs.complement_kernel(c(0.5, 0.0), c(0.5, 0.0));
        assert!((v.re - (1.0 - 4.0 / (PI * PI))).abs() < 1e-14);
        assert!((v.re - 0.594_715_7).abs() < 1e-6);
        assert!(rs.complement_kernel(c(0.0, 0.0), c(0.3, 0.7)).norm() < 1e-14);
        let empty = RestrictedSpace::build(AmbientSpace::paley_wiener(), NodeSequence::empty()).unwrap();
        let (z, w) = (c(0.2, 0.1), c(-0.4, 0.3));
        assert!((empty.complement_kernel(z, w) - empty.ambient().kernel_value(z, w)).norm() < 1e-15);
    }

    #[test]
    fn kappa_on_nodes_and_near_them() {
        let rs = pw(&[0.0, 1.5, -2.25]);
        let w = c(0.3, 0.0);
        let at_node = rs.kappa(c(1.5, 0.0), w).unwrap();
        let h = 1e-2;
        let around: C64 = (0..4)
            .map(|k| rs.kappa(c(1.5, 0.0) + C64::from_polar(h, k as f64 * PI / 2.0), w).unwrap())
            .sum::<C64>()
            / 4.0;
        assert!((at_node - around).norm() < 1e-4 * at_node.norm(), "{at_node} {around}");
        // both arguments on nodes
        let v = rs.kappa(c(0.0, 0.0), c(1.5, 0.0)).unwrap();
        let u = rs.kappa(c(1.5, 0.0), c(0.0, 0.0)).unwrap();
        assert!((v - u.conj()).norm() < 1e-8 * v.norm().max(1e-3));
        assert!(rs.kappa_diag(c(0.0, 0.0)).unwrap() > 0.0);
    }

    #[test]
    fn one_gap_kappa_is_nearly_constant() {
        let nodes: Vec<C64> = (-500i32..=500).filter(|&n| n != 0).map(|n| c(n as f64, 0.0)).collect();
        let seq = NodeSequence::new(nodes, Truncation::Radius(500.0)).unwrap();
        let rs = RestrictedSpace::build(AmbientSpace::paley_wiener(), seq).unwrap();
        for (z, w) in [(0.3, -0.2), (0.0, 0.0), (1.0, 0.5)] {
            let v = rs.kappa(c(z, 0.0), c(w, 0.0)).unwrap();
            // truncation at 500 perturbs the constant kernel by O(x²/500)
            assert!((v.re - 1.0).abs() < 5e-3, "{v}");
        }
    }

    #[test]
    fn circle_section_is_conjugate_analytic_mean() {
        let rs = pw(&[0.0]);
        let z = c(0.4, 0.1);
        let v = rs.kappa(z, c(0.0, 0.0)).unwrap();
        let u = rs.kappa(c(0.0, 0.0), z).unwrap();
        assert!((v - u.conj()).norm() < 1e-9);
    }
}
