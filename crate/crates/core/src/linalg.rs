//! Small dense complex linear algebra helpers built on nalgebra.
//!
//! Everything here works on Hermitian matrices of desk size (k <= a few dozen).
//! Inversion and rank decisions go through the Hermitian eigendecomposition so
//! that conditioning is visible to callers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(m + m^†) / 2`
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of `vectors` are orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let n = m.nrows();
        let eig = hermitize(m).symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
        HermitianEigen { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Rebuilds `V f(D) V^†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        hermitize(&(scaled * self.vectors.adjoint()))
    }

    pub fn determinant(&self) -> f64 {
        self.values.iter().product()
    }

    /// Number of eigenvalues strictly above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.values.iter().filter(|&&v| v > tol).count()
    }
}

/// Inverse of a Hermitian positive definite matrix together with its
/// spectral condition number; `None` when the matrix is not positive definite.
pub fn inverse_pd(m: &CMatrix) -> Option<(CMatrix, f64)> {
    let eig = HermitianEigen::new(m);
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || !hi.is_finite() {
        return None;
    }
    Some((eig.map(|v| 1.0 / v), hi / lo))
}

pub fn is_positive_definite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) && HermitianEigen::new(m).min() > 0.0
}

/// Orthonormal basis (as columns) of the span of `vectors`, with rank decided
/// by eigenvalues of the Gram operator above `tol` relative to the largest.
pub fn orthonormal_span(vectors: &[CVector], dim: usize, tol: f64) -> CMatrix {
    let mut gram = CMatrix::zeros(dim, dim);
    for v in vectors {
        gram += v * v.adjoint();
    }
    let eig = HermitianEigen::new(&gram);
    let scale = eig.max().max(1.0);
    let r = eig.rank(tol * scale);
    eig.vectors.columns(0, r).into_owned()
}

/// Sine of the largest principal angle between the column spans of two
/// matrices with orthonormal columns. Returns 1 when dimensions differ.
pub fn max_principal_angle_sin(q1: &CMatrix, q2: &CMatrix) -> f64 {
    if q1.ncols() != q2.ncols() {
        return 1.0;
    }
    if q1.ncols() == 0 {
        return 0.0;
    }
    let proj = q2 * q2.adjoint();
    let resid = q1 - &proj * q1;
    resid.singular_values().max().min(1.0)
}

/// Largest real-rank of a set of complex vectors viewed as vectors in R^{2k}.
pub fn real_rank(vectors: &[CVector], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let k = vectors[0].len();
    let m = DMatrix::<f64>::from_fn(
        2 * k,
        vectors.len(),
        |r, j| {
            if r < k {
                vectors[j][r].re
            } else {
                vectors[j][r - k].im
            }
        },
    );
    let sv = m.singular_values();
    let scale = sv.max().max(1.0);
    sv.iter().filter(|&&s| s > tol * scale).count()
}
