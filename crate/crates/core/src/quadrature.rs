//! Composite Gauss–Legendre quadrature on the real line.

use std::f64::consts::PI;

use crate::C64;

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Panel layout for integrals over `[-T, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PanelLayout {
    /// Equal panels of the given width everywhere (oscillatory integrands).
    Uniform { width: f64 },
    /// Equal panels of `width` on `[-core, core]`, then geometrically growing
    /// panels with ratio `growth` out to `T` (algebraically decaying integrands).
    Graded { core: f64, width: f64, growth: f64 },
}

/// Outcome of a real-line integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineIntegral {
    pub value: C64,
    /// Contribution of `|t| > T`, from the mapped tail rule.
    pub tail: C64,
    /// The same tail from a single coarse panel; disagreement with `tail`
    /// signals an unresolved (e.g. oscillatory) tail.
    pub tail_coarse: C64,
    /// Tail magnitude predicted by a fitted power law `C·|t|^{-p}`.
    pub fitted_tail: f64,
    /// Smallest fitted decay exponent over both tails.
    pub exponent: f64,
}

#[derive(Debug, Clone)]
pub struct LineQuadrature {
    pub half_width: f64,
    pub layout: PanelLayout,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    edges: Vec<f64>,
}

impl LineQuadrature {
    pub fn new(half_width: f64, order: usize, layout: PanelLayout) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        let edges = panel_edges(half_width, layout);
        Self {
            half_width,
            layout,
            nodes,
            weights,
            edges,
        }
    }

    pub fn panel_count(&self) -> usize {
        self.edges.len() - 1
    }

    /// `∫_a^b f` over panels of this layout clipped to `[a, b]` (no tail).
    pub fn integrate_interval(&self, a: f64, b: f64, f: &dyn Fn(f64) -> C64) -> C64 {
        let mut edges: Vec<f64> = self
            .edges
            .iter()
            .cloned()
            .filter(|&e| e > a && e < b)
            .collect();
        edges.insert(0, a);
        edges.push(b);
        let mut acc = C64::new(0.0, 0.0);
        for w in edges.windows(2) {
            acc += self.panel(w[0], w[1], f);
        }
        acc
    }

    fn panel(&self, a: f64, b: f64, f: &dyn Fn(f64) -> C64) -> C64 {
        let h = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += f(mid + h * x) * *w;
        }
        s * h
    }

    /// `∫_ℝ f`, with `[T, ∞)` handled through `t = T/u` on `(0, 1]`.
    pub fn integrate(&self, f: &dyn Fn(f64) -> C64) -> LineIntegral {
        let t = self.half_width;
        let mut value = C64::new(0.0, 0.0);
        for w in self.edges.windows(2) {
            value += self.panel(w[0], w[1], f);
        }
        let right = |u: f64| f(t / u) * (t / (u * u));
        let left = |u: f64| f(-t / u) * (t / (u * u));
        let mut tail = C64::new(0.0, 0.0);
        for (a, b) in [(0.0, 0.25), (0.25, 0.5), (0.5, 1.0)] {
            tail += self.panel(a, b, &right) + self.panel(a, b, &left);
        }
        let tail_coarse = self.panel(0.0, 1.0, &right) + self.panel(0.0, 1.0, &left);
        let (fr, pr) = power_tail(f, t);
        let (fl, pl) = power_tail(&|x| f(-x), t);
        LineIntegral {
            value: value + tail,
            tail,
            tail_coarse,
            fitted_tail: fr + fl,
            exponent: pr.min(pl),
        }
    }
}

/// Tail mass `∫_T^∞ C t^{-p}` with `C, p` read off `|f(T/10)|` and `|f(T)|`.
fn power_tail(f: &dyn Fn(f64) -> C64, t: f64) -> (f64, f64) {
    let near = f(0.1 * t).norm();
    let far = f(t).norm();
    if far == 0.0 {
        return (0.0, f64::INFINITY);
    }
    if near == 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let p = (near / far).log10();
    if p <= 1.0 {
        (f64::INFINITY, p)
    } else {
        (far * t / (p - 1.0), p)
    }
}

fn panel_edges(t: f64, layout: PanelLayout) -> Vec<f64> {
    let mut right = vec![];
    match layout {
        PanelLayout::Uniform { width } => {
            let n = (t / width).ceil().max(1.0) as usize;
            let h = t / n as f64;
            right.extend((0..=n).map(|k| k as f64 * h));
        }
        PanelLayout::Graded { core, width, growth } => {
            let core = core.min(t);
            let n = (core / width).ceil().max(1.0) as usize;
            let h = core / n as f64;
            right.extend((0..=n).map(|k| k as f64 * h));
            let mut x = core;
            while x < t {
                x = (x * growth).max(x + width);
                if x >= t {
                    break;
                }
                right.push(x);
            }
            if *right.last().unwrap() < t {
                right.push(t);
            }
        }
    }
    let mut edges: Vec<f64> = right.iter().rev().map(|x| -x).collect();
    edges.pop();
    edges.extend(right);
    edges
}
