//! Chevalley-basis realization of Grassmannian factors `SU(p+q)/S(U(p)×U(q))`
//! inside `sl(N, C)`, `N = p + q`.
//!
//! Roots are `e_i − e_j`; the non-compact ones have exactly one index in
//! `0..p`, and the positive non-compact ones are those with `i < p <= j`.
//! Root vectors are `E_ij / sqrt(2N)` so that `κ(E_α, E_{−α}) = 1` for the
//! Killing form `κ(X, Y) = 2N tr(XY)`. Complex conjugation with respect to
//! `su(N)` is `X ↦ −X^†`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, real, CMatrix, I};
use crate::report::ResidualReport;

pub const MAX_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootRealization {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    /// Positive non-compact roots as index pairs `(i, j)` for `e_i − e_j`.
    pub roots_plus_n: Vec<(usize, usize)>,
    #[serde(skip)]
    pub e_pos: Vec<CMatrix>,
    #[serde(skip)]
    pub e_neg: Vec<CMatrix>,
    /// `H_α = [E_α, E_{−α}]`
    #[serde(skip)]
    pub h_co: Vec<CMatrix>,
    /// Generator of the centre of `k`, normalized by `α(Z) = i` on positive non-compact roots.
    #[serde(skip)]
    pub z: CMatrix,
    pub kappa_scale: f64,
}

/// Builds the realization of `SU(p+q)/S(U(p)×U(q))`.
pub fn grassmannian_realization(p: usize, q: usize) -> Result<RootRealization> {
    let n = p + q;
    if n > MAX_N {
        return Err(Error::SizeLimit { n });
    }
    if p == 0 || q == 0 || p * q < 2 {
        return Err(Error::Inadmissible(format!("Grassmannian({p},{q}) has complex dimension {} < 2", p * q)));
    }
    let kappa_scale = 2.0 * n as f64;
    let unit = |i: usize, j: usize| {
        let mut m = CMatrix::zeros(n, n);
        m[(i, j)] = real(1.0 / kappa_scale.sqrt());
        m
    };
    let mut roots_plus_n = Vec::with_capacity(p * q);
    let (mut e_pos, mut e_neg, mut h_co) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..p {
        for j in p..n {
            roots_plus_n.push((i, j));
            let ep = unit(i, j);
            let en = unit(j, i);
            h_co.push(bracket(&ep, &en));
            e_pos.push(ep);
            e_neg.push(en);
        }
    }
    let (a, b) = (q as f64 / n as f64, -(p as f64) / n as f64);
    let z = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| c(0.0, if i < p { a } else { b })));
    Ok(RootRealization { p, q, n, roots_plus_n, e_pos, e_neg, h_co, z, kappa_scale })
}

pub fn bracket(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

/// Conjugation with respect to the compact real form `su(N)`.
pub fn conj_su(x: &CMatrix) -> CMatrix {
    -x.adjoint()
}

impl RootRealization {
    pub fn dim_n(&self) -> usize {
        self.roots_plus_n.len()
    }

    pub fn kappa(&self, x: &CMatrix, y: &CMatrix) -> num_complex::Complex64 {
        (x * y).trace() * self.kappa_scale
    }

    /// Root vector for `e_i − e_j` (any `i != j`).
    pub fn root_vector(&self, i: usize, j: usize) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        m[(i, j)] = real(1.0 / self.kappa_scale.sqrt());
        m
    }

    pub fn is_noncompact(&self, i: usize, j: usize) -> bool {
        (i < self.p) != (j < self.p)
    }

    /// All roots `(i, j)`, `i != j`.
    pub fn all_roots(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect()
    }

    /// Value of the root `e_i − e_j` on a diagonal (Cartan) element.
    pub fn root_value(&self, (i, j): (usize, usize), h: &CMatrix) -> num_complex::Complex64 {
        h[(i, i)] - h[(j, j)]
    }

    /// Component of `x` along `n^c` (sum over all non-compact root spaces).
    pub fn project_n(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for (i, j) in self.all_roots() {
            if self.is_noncompact(i, j) {
                let coeff = self.kappa(x, &self.root_vector(j, i));
                out += self.root_vector(i, j) * coeff;
            }
        }
        out
    }

    /// Traceless diagonal matrices `E_ii − E_{i+1,i+1}`, a basis of the Cartan subalgebra.
    pub fn cartan_basis(&self) -> Vec<CMatrix> {
        (0..self.n - 1)
            .map(|i| {
                let mut m = CMatrix::zeros(self.n, self.n);
                m[(i, i)] = real(1.0);
                m[(i + 1, i + 1)] = real(-1.0);
                m
            })
            .collect()
    }
}

/// Residuals of the Chevalley-basis identities used by the tensor formulas.
pub fn verify_root_identities(r: &RootRealization) -> ResidualReport {
    let mut rep = ResidualReport::new();
    let n = r.n;

    let mut sum_h = CMatrix::zeros(n, n);
    for h in &r.h_co {
        sum_h += h;
    }
    rep.record("sum_H_alpha_plus_half_iZ", linalg::max_abs(&(sum_h + r.z.map(|z| z * I * 0.5))));

    for (idx, &root) in r.roots_plus_n.iter().enumerate() {
        let (ep, en, h) = (&r.e_pos[idx], &r.e_neg[idx], &r.h_co[idx]);
        rep.record("kappa_E_alpha_E_minus_alpha_minus_1", (r.kappa(ep, en) - 1.0).norm());
        rep.record("bracket_E_alpha_E_minus_alpha_minus_H_alpha", linalg::max_abs(&(bracket(ep, en) - h)));
        rep.record("conj_E_alpha_plus_E_minus_alpha", linalg::max_abs(&(conj_su(ep) + en)));
        // κ(H_α, v) = α(v) on the Cartan subalgebra
        for v in r.cartan_basis() {
            rep.record("kappa_H_alpha_minus_alpha", (r.kappa(h, &v) - r.root_value(root, &v)).norm());
        }
        // α(Z) read off from [Z, E_α] = α(Z) E_α
        let alpha_z = r.kappa(&bracket(&r.z, ep), en);
        rep.record("alpha_Z_minus_i", (alpha_z - I).norm());
        rep.record("Z_eigen_residual", linalg::max_abs(&(bracket(&r.z, ep) - ep * alpha_z)));
    }

    for a in &r.e_pos {
        for b in &r.e_pos {
            let br = bracket(a, b);
            rep.record("n_plus_bracket_in_n", linalg::max_abs(&r.project_n(&br)));
        }
    }
    rep.record("root_count_minus_pq", (r.dim_n() as f64 - (r.p * r.q) as f64).abs());
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cp2_realization() {
        let r = grassmannian_realization(1, 2).unwrap();
        assert_eq!(r.dim_n(), 2);
        let expect = [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((r.z[(i, i)] - c(0.0, *e)).norm() < 1e-15);
        }
        let rep = verify_root_identities(&r);
        assert!(rep.all_below(1e-12), "{rep:?}");
    }

    #[test]
    fn gr22_realization() {
        let r = grassmannian_realization(2, 2).unwrap();
        assert_eq!(r.dim_n(), 4);
        assert!(verify_root_identities(&r).all_below(1e-12));
    }

    #[test]
    fn size_and_admissibility_limits() {
        assert!(matches!(grassmannian_realization(1, 1), Err(Error::Inadmissible(_))));
        assert_eq!(grassmannian_realization(4, 5).unwrap_err(), Error::SizeLimit { n: 9 });
        assert!(grassmannian_realization(4, 4).is_ok());
    }

    #[test]
    fn scaled_center_is_detected() {
        let mut r = grassmannian_realization(1, 2).unwrap();
        r.z = r.z.scale(2.0);
        let rep = verify_root_identities(&r);
        assert!((rep.get("alpha_Z_minus_i").unwrap() - 1.0).abs() < 1e-12);
        assert!(!rep.all_below(1e-12));
    }
}
