//! Behaviour at the extinction time `T = 2A`, `A = min A_i`.
//!
//! The base coefficients of the factors attaining the minimum vanish. On the
//! fibre, `H^{-1}(t)` blows up exactly along `Z_p = span{c^j : j ∈ p}`, so the
//! limit form is zero on `Z_p` and equals the inverse of the compression of
//! `Λ̂ = H_0^{-1} + Σ_{j∉p} (∫_0^T h_j^{-2}) Γ^j` on its orthogonal complement.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{extinction_time, gamma_integral, gamma_system};
use crate::linalg::{self, CMatrix, CVector, HermitianEigen};
use crate::model::{CSpaceModel, InvariantMetric};

/// Absolute eigenvalue threshold for rank decisions on unit-scaled matrices.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LimitForm {
    pub t_ext: f64,
    /// 0-based collapsed factor indices.
    pub p_set: Vec<usize>,
    /// `A_i − A`, exactly zero on `p_set`.
    pub base_limits: Vec<f64>,
    /// Orthonormal basis (columns) of `Z_p` in `V̄`-coordinates.
    pub zp_basis: CMatrix,
    pub fiber_limit: CMatrix,
    pub q_hat: usize,
    pub fiber_rank: usize,
    /// Nonzero eigenvalues `μ_1..μ_q̂` of `Θ_p`.
    pub theta_p_eigenvalues: Vec<f64>,
    pub kernel_description: String,
    pub collapsing_subgroup: String,
}

pub fn limit_form(model: &CSpaceModel, init: &InvariantMetric, tie_tol: f64) -> Result<LimitForm> {
    model.check_metric(init)?;
    let a = init.h_base();
    let ext = extinction_time(a, tie_tol);
    let a_min = ext.t_ext / 2.0;
    let k = model.k();
    let gs = gamma_system(model);

    let mut theta_p = CMatrix::zeros(k, k);
    for &j in &ext.p_set {
        theta_p += &gs.gamma[j];
    }
    let eig = HermitianEigen::new(&theta_p);
    let scale = eig.max().max(1.0);
    let q_hat = eig.rank(RANK_TOL * scale);
    let zp_basis = eig.vectors.columns(0, q_hat).into_owned();
    let complement = eig.vectors.columns(q_hat, k - q_hat).into_owned();

    let (h0_inv, _) = linalg::inverse_pd(init.h_fiber()).ok_or(Error::NotPositive { t: 0.0 })?;
    let mut lambda_hat = h0_inv;
    for j in (0..model.s()).filter(|j| !ext.p_set.contains(j)) {
        lambda_hat += gs.gamma[j].scale(gamma_integral(a[j], ext.t_ext)?);
    }
    let fiber_limit = if q_hat == k {
        CMatrix::zeros(k, k)
    } else {
        let compressed = linalg::hermitize(&(complement.adjoint() * &lambda_hat * &complement));
        let (inv, _) = linalg::inverse_pd(&compressed).ok_or(Error::NotPositive { t: ext.t_ext })?;
        linalg::hermitize(&(&complement * inv * complement.adjoint()))
    };

    let base_limits =
        a.iter().enumerate().map(|(i, ai)| if ext.p_set.contains(&i) { 0.0 } else { ai - a_min }).collect();

    let names: Vec<String> = ext.p_set.iter().map(|j| format!("n_{}", j + 1)).collect();
    let kernel_description = format!(
        "{} ⊕ Z_p ⊕ conj(Z_p), dim_C Z_p = {q_hat}",
        names.iter().map(|n| format!("{n}^c")).collect::<Vec<_>>().join(" ⊕ ")
    );
    let collapsing_subgroup = ext.p_set.iter().map(|j| format!("G_{}", j + 1)).collect::<Vec<_>>().join("·");

    Ok(LimitForm {
        t_ext: ext.t_ext,
        p_set: ext.p_set,
        base_limits,
        zp_basis,
        fiber_limit,
        q_hat,
        fiber_rank: k - q_hat,
        theta_p_eigenvalues: eig.values[..q_hat].to_vec(),
        kernel_description,
        collapsing_subgroup,
    })
}

impl LimitForm {
    /// Orthonormal basis of the numerical kernel of the fibre limit.
    pub fn numerical_kernel(&self) -> CMatrix {
        let eig = HermitianEigen::new(&self.fiber_limit);
        let k = eig.values.len();
        let r = eig.rank(RANK_TOL);
        eig.vectors.columns(r, k - r).into_owned()
    }
}

/// Orthonormal basis of `span{c^j : j ∈ set}`.
pub fn coefficient_span(model: &CSpaceModel, set: &[usize]) -> CMatrix {
    let vecs: Vec<CVector> = set.iter().map(|&j| model.fiber().c[j].clone()).collect();
    linalg::orthonormal_span(&vecs, model.k(), RANK_TOL)
}

/// Set arithmetic of the collapse for a product of Calabi–Eckmann blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseReport {
    /// 0-based involution pairing the factors of each block.
    pub sigma: Vec<usize>,
    pub p_set: Vec<usize>,
    /// Surviving factors whose partner also survives (0-based).
    pub i1: Vec<usize>,
    /// Surviving factors whose partner collapsed (0-based).
    pub i2: Vec<usize>,
    pub description: String,
}

fn sub(n: usize) -> String {
    const DIGITS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
    n.to_string().chars().map(|ch| DIGITS[ch.to_digit(10).unwrap() as usize]).collect()
}

pub fn collapse_structure_ce(model: &CSpaceModel, init: &InvariantMetric, tie_tol: f64) -> Result<CollapseReport> {
    let pairs =
        model.ce_pairs().ok_or_else(|| Error::NotCEProduct("model carries no Calabi–Eckmann pairing".into()))?;
    model.check_metric(init)?;
    let s = model.s();
    let mut sigma = vec![usize::MAX; s];
    for &(a, b) in pairs {
        sigma[a] = b;
        sigma[b] = a;
    }
    let p_set = extinction_time(init.h_base(), tie_tol).p_set;
    let survivors: Vec<usize> = (0..s).filter(|i| !p_set.contains(i)).collect();
    let i1: Vec<usize> = survivors.iter().copied().filter(|i| survivors.contains(&sigma[*i])).collect();
    let i2: Vec<usize> = survivors.iter().copied().filter(|i| !i1.contains(i)).collect();

    let mut parts: Vec<String> = i2.iter().map(|&i| format!("G{}/K{}", sub(i + 1), sub(i + 1))).collect();
    let mut ce_parts = Vec::new();
    for &(a, b) in pairs {
        if i1.contains(&a) {
            let (x, y) = (a.min(b) + 1, a.max(b) + 1);
            ce_parts.push(format!("G{}·G{}/L{}·L{}", sub(x), sub(y), sub(x), sub(y)));
        }
    }
    if !ce_parts.is_empty() {
        parts.push(format!("({})", ce_parts.join(" × ")));
    }
    let description = if parts.is_empty() { "point".to_string() } else { parts.join(" × ") };
    Ok(CollapseReport { sigma, p_set, i1, i2, description })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;
    use crate::model::{build_cspace, ce25, FactorSpec, FiberSpec};

    fn scalar(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, real(x))
    }

    #[test]
    fn ce25_equal_a_collapses_everything() {
        let m = ce25(1.0, 1.0);
        let init = InvariantMetric::initial(&m, scalar(1.0)).unwrap();
        let lf = limit_form(&m, &init, 1e-12).unwrap();
        assert_eq!(lf.t_ext, 2.0);
        assert_eq!(lf.p_set, vec![0, 1]);
        assert_eq!(lf.base_limits, vec![0.0, 0.0]);
        assert_eq!(lf.q_hat, 1);
        assert_eq!(lf.fiber_limit, scalar(0.0));
        assert_eq!(lf.collapsing_subgroup, "G_1·G_2");
    }

    #[test]
    fn ce25_unequal_a() {
        let m = ce25(1.0, 2.0);
        let init = InvariantMetric::initial(&m, scalar(1.0)).unwrap();
        let lf = limit_form(&m, &init, 1e-12).unwrap();
        assert_eq!(lf.p_set, vec![0]);
        assert_eq!(lf.base_limits, vec![0.0, 1.0]);
        assert_eq!((lf.q_hat, lf.fiber_rank), (1, 0));
        assert_eq!(lf.fiber_limit, scalar(0.0));
    }

    #[test]
    fn unrealizable_zero_coefficient() {
        let fiber = FiberSpec::from_pairs(1, &[vec![[0.0, 0.0]], vec![[-0.25, 0.0]]]);
        let m = build_cspace(vec![FactorSpec::grassmannian(1, 2, 1.0), FactorSpec::grassmannian(1, 2, 2.0)], fiber)
            .unwrap();
        assert!(!m.realizability().is_realizable());
        let init = InvariantMetric::initial(&m, scalar(1.0)).unwrap();
        let lf = limit_form(&m, &init, 1e-12).unwrap();
        assert_eq!(lf.q_hat, 0);
        assert!((lf.fiber_limit[(0, 0)] - real(8.0 / 9.0)).norm() < 1e-15);
        assert_eq!(lf.base_limits, vec![0.0, 1.0]);
    }

    #[test]
    fn collapse_single_block() {
        let m = ce25(1.0, 2.0);
        let init = InvariantMetric::initial(&m, scalar(1.0)).unwrap();
        let r = collapse_structure_ce(&m, &init, 1e-12).unwrap();
        assert_eq!(r.sigma, vec![1, 0]);
        assert_eq!(r.p_set, vec![0]);
        assert!(r.i1.is_empty());
        assert_eq!(r.i2, vec![1]);
        assert_eq!(r.description, "G₂/K₂");

        let m = ce25(1.0, 1.0);
        let init = InvariantMetric::initial(&m, scalar(1.0)).unwrap();
        assert_eq!(collapse_structure_ce(&m, &init, 1e-12).unwrap().description, "point");
    }

    #[test]
    fn collapse_two_blocks() {
        let c = [[0.0, -0.25], [-0.25, 0.0]];
        let fiber = FiberSpec::from_pairs(
            2,
            &[vec![c[0], [0.0, 0.0]], vec![c[1], [0.0, 0.0]], vec![[0.0, 0.0], c[0]], vec![[0.0, 0.0], c[1]]],
        );
        let factors = [1.0, 2.0, 2.0, 2.0].iter().map(|&a| FactorSpec::grassmannian(1, 2, a)).collect();
        let m = build_cspace(factors, fiber).unwrap().with_ce_pairs(vec![(0, 1), (2, 3)]).unwrap();
        let init = InvariantMetric::initial(&m, CMatrix::identity(2, 2)).unwrap();
        let r = collapse_structure_ce(&m, &init, 1e-12).unwrap();
        assert_eq!(r.i1, vec![2, 3]);
        assert_eq!(r.i2, vec![1]);
        assert_eq!(r.description, "G₂/K₂ × (G₃·G₄/L₃·L₄)");
    }

    #[test]
    fn untagged_model_is_not_ce() {
        let fiber = FiberSpec::from_pairs(1, &[vec![[1.0, 0.0]]]);
        let m = build_cspace(vec![FactorSpec::grassmannian(1, 2, 1.0)], fiber).unwrap();
        let init = InvariantMetric::initial(&m, scalar(1.0)).unwrap();
        assert!(matches!(collapse_structure_ce(&m, &init, 1e-12), Err(Error::NotCEProduct(_))));
    }
}
