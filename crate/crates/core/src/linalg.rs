//! Small dense complex linear algebra: Hermitian Cholesky, triangular solves
//! and spectral helpers for Gram matrices.

use nalgebra::DMatrix;

use crate::C64;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<C64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Largest relative deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.norm().max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst / scale
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// Lower-triangular factor `L` with `A = L L*`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: SquareMatrix,
}

impl Cholesky {
    /// Factorizes a Hermitian positive-definite matrix. Returns `None` when a
    /// pivot is not strictly positive.
    pub fn new(a: &SquareMatrix) -> Option<Self> {
        let n = a.dim();
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut d = a.get(j, j).re;
            for k in 0..j {
                d -= l.get(j, k).norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let ljj = d.sqrt();
            l.set(j, j, C64::new(ljj, 0.0));
            for i in j + 1..n {
                let mut s = a.get(i, j);
                let (ri, rj) = (i * n, j * n);
                for k in 0..j {
                    s -= l.data[ri + k] * l.data[rj + k].conj();
                }
                l.set(i, j, s / ljj);
            }
        }
        Some(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    pub fn factor(&self) -> &SquareMatrix {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l.data[i * n..i * n + i];
            let s: C64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.l.data[i * n + i];
        }
        y
    }

    /// Solves `L* x = y`.
    pub fn backward(&self, y: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let xi = x[i] / self.l.data[i * n + i].conj();
            x[i] = xi;
            for k in 0..i {
                x[k] -= self.l.data[i * n + k].conj() * xi;
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        self.backward(&self.forward(b))
    }

    /// `‖A − L L*‖_F / ‖A‖_F`.
    pub fn residual(&self, a: &SquareMatrix) -> f64 {
        let n = self.dim();
        let mut worst = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..=j {
                    s += self.l.get(i, k) * self.l.get(j, k).conj();
                }
                let d = (a.get(i, j) - s).norm_sqr();
                worst += if i == j { d } else { 2.0 * d };
            }
        }
        worst.sqrt() / a.norm().max(f64::MIN_POSITIVE)
    }
}

fn normalize(v: &mut [C64]) -> f64 {
    let s = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    s
}

fn start_vector(n: usize) -> Vec<C64> {
    // deterministic, not orthogonal to any coordinate direction
    (0..n)
        .map(|i| C64::new(1.0 + 0.1 * ((i * 7919) % 13) as f64, 0.05 * (i % 5) as f64))
        .collect()
}

/// Spectral condition number estimate of a Hermitian positive-definite matrix
/// by power iteration on `A` and inverse iteration through its factor.
pub fn condition_estimate(a: &SquareMatrix, chol: &Cholesky, iterations: usize) -> f64 {
    let n = a.dim();
    if n == 0 {
        return 1.0;
    }
    if n <= 64 {
        let eig = hermitian_eigenvalues(a);
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        return if min > 0.0 { max / min } else { f64::INFINITY };
    }
    let mut v = start_vector(n);
    normalize(&mut v);
    let mut lmax = 0.0;
    for _ in 0..iterations {
        let mut w = a.mul_vec(&v);
        lmax = normalize(&mut w);
        v = w;
    }
    let mut v = start_vector(n);
    normalize(&mut v);
    let mut inv = 0.0;
    for _ in 0..iterations {
        let mut w = chol.solve(&v);
        inv = normalize(&mut w);
        v = w;
    }
    lmax * inv
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &SquareMatrix) -> Vec<f64> {
    let m = a.to_nalgebra();
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Numerical rank from singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<C64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Divides every row by its Euclidean norm (zero rows are left alone).
pub fn row_normalized(m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let s = row.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
    out
}
