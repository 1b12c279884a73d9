//! Randomized models for property checks.

use rand::Rng;

use crate::linalg::{c, CMatrix, CVector};
use crate::model::{build_cspace, CSpaceModel, FactorSpec, FiberSpec, InvariantMetric};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    pub max_s: usize,
    pub max_k: usize,
    pub a_range: (f64, f64),
    /// Give every factor the same `A`.
    pub equal_a: bool,
    /// Only sample models with `s >= k`.
    pub s_at_least_k: bool,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams { max_s: 4, max_k: 3, a_range: (0.5, 3.0), equal_a: false, s_at_least_k: false }
    }
}

const GRASSMANNIANS: [(usize, usize); 5] = [(1, 2), (1, 3), (2, 2), (1, 4), (2, 3)];

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, params: &EnsembleParams) -> CSpaceModel {
    let k = rng.random_range(1..=params.max_k);
    let min_s = if params.s_at_least_k { k } else { 1 };
    let s = rng.random_range(min_s..=params.max_s.max(min_s));
    let (lo, hi) = params.a_range;
    let common = rng.random_range(lo..=hi);
    let factors = (0..s)
        .map(|_| {
            let (p, q) = GRASSMANNIANS[rng.random_range(0..GRASSMANNIANS.len())];
            let a = if params.equal_a { common } else { rng.random_range(lo..=hi) };
            FactorSpec::grassmannian(p, q, a)
        })
        .collect();
    let coeffs = (0..s)
        .map(|_| CVector::from_fn(k, |_, _| c(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))))
        .collect();
    build_cspace(factors, FiberSpec::new(k, coeffs)).expect("ensemble parameters produce valid models")
}

/// `B B^† + δ I` with `B` entries in the unit square and `δ ∈ [0.1, 1]`.
pub fn random_pd<R: Rng + ?Sized>(rng: &mut R, k: usize) -> CMatrix {
    let b = CMatrix::from_fn(k, k, |_, _| c(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)));
    let delta = rng.random_range(0.1..=1.0);
    crate::linalg::hermitize(&(&b * b.adjoint() + CMatrix::identity(k, k).scale(delta)))
}

pub fn random_initial<R: Rng + ?Sized>(rng: &mut R, model: &CSpaceModel) -> InvariantMetric {
    InvariantMetric::initial(model, random_pd(rng, model.k())).expect("random fibre matrix is positive definite")
}

/// Random positive metric with base coefficients in `[0.2, 3]`.
pub fn random_metric<R: Rng + ?Sized>(rng: &mut R, model: &CSpaceModel) -> InvariantMetric {
    let base = (0..model.s()).map(|_| rng.random_range(0.2..=3.0)).collect();
    InvariantMetric::new(base, random_pd(rng, model.k())).expect("random metric is positive")
}
