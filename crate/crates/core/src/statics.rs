//! Static metrics `−𝒦(h) = λ h` and the volume-normalized flow.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{closed_form_inverse, closed_form_solution, extinction_time, gamma_system, k_tensor};
use crate::linalg::{self, HermitianEigen};
use crate::model::{CSpaceModel, InvariantMetric};

/// Relative eigenvalue threshold below which `Θ_s` counts as singular.
pub const THETA_SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StaticMetric {
    pub lambda: f64,
    pub metric: InvariantMetric,
    pub residual: f64,
}

/// `h_i = 1/(2λ)`, `H = Θ_s^{-1}/(4λ)`.
pub fn static_metric(model: &CSpaceModel, lambda: f64) -> Result<StaticMetric> {
    if !(lambda > 0.0) {
        return Err(Error::NoStaticForNonpositiveLambda { lambda });
    }
    let theta_s = gamma_system(model).theta_s;
    let eig = HermitianEigen::new(&theta_s);
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(eig.min() > THETA_SINGULAR_TOL * scale) || scale == 0.0 {
        return Err(Error::ThetaSingular { min_eig: eig.min() });
    }
    let theta_inv = eig.map(|x| 1.0 / x);
    let metric = InvariantMetric::new(vec![1.0 / (2.0 * lambda); model.s()], theta_inv.scale(1.0 / (4.0 * lambda)))?;
    let (residual, _) = residual_at(model, &metric, lambda)?;
    Ok(StaticMetric { lambda, metric, residual })
}

fn residual_at(model: &CSpaceModel, metric: &InvariantMetric, lambda: f64) -> Result<(f64, f64)> {
    let k = k_tensor(model, metric)?;
    let base = k.base.iter().zip(metric.h_base()).fold(0.0f64, |acc, (kk, h)| acc.max((kk + lambda * h).abs()));
    let fiber = linalg::max_abs(&(&k.fiber + metric.h_fiber().scale(lambda)));
    Ok((base.max(fiber), lambda))
}

/// Least-squares `λ` over all base and fibre components, and the sup-norm of
/// `𝒦(h) + λ h` at that `λ`.
pub fn static_residual(model: &CSpaceModel, metric: &InvariantMetric) -> Result<(f64, f64)> {
    let k = k_tensor(model, metric)?;
    let mut kh: f64 = k.base.iter().zip(metric.h_base()).map(|(a, b)| a * b).sum();
    let mut hh: f64 = metric.h_base().iter().map(|h| h * h).sum();
    kh += k.fiber.iter().zip(metric.h_fiber().iter()).map(|(a, b)| (a * b.conj()).re).sum::<f64>();
    hh += metric.h_fiber().iter().map(|b| b.norm_sqr()).sum::<f64>();
    residual_at(model, metric, -kh / hh)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedState {
    pub t: f64,
    pub c_of_t: f64,
    pub xi_of_t: f64,
    #[serde(skip)]
    pub normalized_metric: InvariantMetric,
    pub v_const: f64,
    /// `(V^{-1} 4^k det Θ_s)^{1/m}`
    pub xi_limit: f64,
}

/// `ξ(t) = (V^{-1}(2A − t)^k det H^{-1}(t))^{1/m}` and `c(t) = ξ(t)/(2A − t)`;
/// requires all `A_i` tied.
pub fn normalized_state(
    model: &CSpaceModel,
    init: &InvariantMetric,
    t: f64,
    v_const: f64,
    tie_tol: f64,
) -> Result<NormalizedState> {
    if !(v_const > 0.0 && v_const.is_finite()) {
        return Err(Error::InvalidArgument(format!("volume constant V must be positive, got {v_const}")));
    }
    model.check_metric(init)?;
    let a = init.h_base();
    let ext = extinction_time(a, tie_tol);
    if ext.p_set.len() != a.len() {
        let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::UnequalA { min: ext.t_ext / 2.0, max });
    }
    let metric = closed_form_solution(model, init, t)?;
    let inv = closed_form_inverse(model, init, t)?;
    let k = model.k() as i32;
    let m = model.total_dim_m() as f64;
    let gap = ext.t_ext - t;
    let det_inv = HermitianEigen::new(&inv).determinant();
    let xi_of_t = (gap.powi(k) * det_inv / v_const).powf(1.0 / m);
    let c_of_t = xi_of_t / gap;
    let theta_det = HermitianEigen::new(&gamma_system(model).theta_s).determinant();
    let xi_limit = (4f64.powi(k) * theta_det / v_const).max(0.0).powf(1.0 / m);
    Ok(NormalizedState { t, c_of_t, xi_of_t, normalized_metric: metric.scaled(c_of_t)?, v_const, xi_limit })
}
