//! The invariant flow: base coefficients move linearly, `h_i' = −1/2`, and the
//! fibre matrix solves the Riccati equation `H' = −H Γ(t) H` with
//! `Γ(t) = Σ_j Γ^j / h_j(t)^2`, `Γ^j = n_j c^j (c^j)^†`.
//!
//! The Riccati equation linearizes in `H^{-1}`, which gives the closed form
//! `H^{-1}(t) = H_0^{-1} + Σ_j (∫_0^t h_j^{-2}) Γ^j`. A fixed-step RK4
//! integrator of the original system is kept as an independent check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{CSpaceModel, InvariantMetric};

pub const DEFAULT_TIE_TOL: f64 = 1e-12;

/// Rank-one fibre matrices `Γ^j` and their partial sums along increasing `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSystem {
    pub gamma: Vec<CMatrix>,
    /// Factor indices sorted by increasing `A_j` (stable).
    pub order: Vec<usize>,
    /// `theta[p-1] = Σ_{first p factors in order} Γ^j`.
    pub theta: Vec<CMatrix>,
    pub theta_s: CMatrix,
}

pub fn gamma_system(model: &CSpaceModel) -> GammaSystem {
    let k = model.k();
    let gamma: Vec<CMatrix> =
        model.fiber().c.iter().zip(model.dims()).map(|(cj, n)| (cj * cj.adjoint()).scale(n as f64)).collect();
    let a = model.initial_a();
    let mut order: Vec<usize> = (0..model.s()).collect();
    order.sort_by(|&x, &y| a[x].total_cmp(&a[y]));
    let mut theta = Vec::with_capacity(order.len());
    let mut acc = CMatrix::zeros(k, k);
    for &j in &order {
        acc += &gamma[j];
        theta.push(acc.clone());
    }
    GammaSystem { gamma, order, theta, theta_s: acc }
}

/// `Σ_j Γ^j / h_j^2`
pub fn weighted_gamma(gammas: &[CMatrix], h_base: &[f64]) -> CMatrix {
    let k = gammas[0].nrows();
    gammas.iter().zip(h_base).fold(CMatrix::zeros(k, k), |acc, (g, h)| acc + g.scale(1.0 / (h * h)))
}

/// Value of the flow tensor at a metric: `−1/2` on every normalized root
/// direction of the base, `−H Γ H` on the fibre.
#[derive(Debug, Clone, PartialEq)]
pub struct KTensor {
    pub base: Vec<f64>,
    pub fiber: CMatrix,
}

pub fn k_tensor(model: &CSpaceModel, metric: &InvariantMetric) -> Result<KTensor> {
    model.check_metric(metric)?;
    if let Some(i) = metric.h_base().iter().position(|&h| !(h > 0.0)) {
        return Err(Error::NonPositiveMetric(format!("h_{} must be positive", i + 1)));
    }
    let gs = gamma_system(model);
    Ok(KTensor { base: vec![-0.5; model.s()], fiber: fiber_rhs(&gs.gamma, metric.h_base(), metric.h_fiber()) })
}

fn fiber_rhs(gammas: &[CMatrix], h_base: &[f64], h: &CMatrix) -> CMatrix {
    let g = weighted_gamma(gammas, h_base);
    linalg::hermitize(&-(h * g * h))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extinction {
    pub t_ext: f64,
    /// 0-based indices of the factors whose base coefficient vanishes at `t_ext`.
    pub p_set: Vec<usize>,
}

/// `T = 2 min A_i`; ties within relative `tie_tol` of the minimum collapse together.
pub fn extinction_time(a: &[f64], tie_tol: f64) -> Extinction {
    let min = a.iter().copied().fold(f64::INFINITY, f64::min);
    let p_set = (0..a.len()).filter(|&i| a[i] <= min * (1.0 + tie_tol)).collect();
    Extinction { t_ext: 2.0 * min, p_set }
}

/// `h_i(t) = A_i − t/2`.
pub fn base_solution(a: &[f64], t: f64) -> Result<Vec<f64>> {
    let t_ext = extinction_time(a, 0.0).t_ext;
    if !(t < t_ext) {
        return Err(Error::PastExtinction { t_ext });
    }
    Ok(a.iter().map(|ai| ai - 0.5 * t).collect())
}

/// `∫_0^t (A − u/2)^{-2} du = 2t / (A (2A − t))`; infinite at `t = 2A`.
pub fn gamma_integral(a: f64, t: f64) -> Result<f64> {
    let limit = 2.0 * a;
    if t > limit {
        return Err(Error::OutOfDomain { t, limit });
    }
    if t == limit {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * t / (a * (limit - t)))
}

/// `H^{-1}(t) = H_0^{-1} + Σ_j gamma_integral(A_j, t) Γ^j`.
pub fn closed_form_inverse(model: &CSpaceModel, init: &InvariantMetric, t: f64) -> Result<CMatrix> {
    model.check_metric(init)?;
    let a = init.h_base();
    base_solution(a, t)?;
    let gs = gamma_system(model);
    let (h0_inv, _) = linalg::inverse_pd(init.h_fiber()).ok_or(Error::NotPositive { t: 0.0 })?;
    let mut inv = h0_inv;
    for (g, &aj) in gs.gamma.iter().zip(a) {
        inv += g.scale(gamma_integral(aj, t)?);
    }
    Ok(linalg::hermitize(&inv))
}

/// Metric at time `t` from the closed-form solution.
pub fn closed_form_solution(model: &CSpaceModel, init: &InvariantMetric, t: f64) -> Result<InvariantMetric> {
    let h_base = base_solution(init.h_base(), t)?;
    let inv = closed_form_inverse(model, init, t)?;
    let (h, _) = linalg::inverse_pd(&inv).ok_or(Error::NotPositive { t })?;
    InvariantMetric::new(h_base, h).map_err(|_| Error::NotPositive { t })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub method: Method,
    pub steps: usize,
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<InvariantMetric>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn last(&self) -> &InvariantMetric {
        self.states.last().expect("trajectory is never empty")
    }
}

fn check_horizon(init: &InvariantMetric, t_end: f64, steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    if !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("t_end={t_end} is not finite")));
    }
    let t_ext = extinction_time(init.h_base(), 0.0).t_ext;
    if !(t_end < t_ext) {
        return Err(Error::PastExtinction { t_ext });
    }
    Ok(())
}

/// Closed-form solution sampled on the uniform grid `t_n = n·t_end/steps`.
pub fn closed_form_trajectory(
    model: &CSpaceModel,
    init: &InvariantMetric,
    t_end: f64,
    steps: usize,
) -> Result<Trajectory> {
    check_horizon(init, t_end, steps)?;
    let dt = t_end / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|n| if n == steps { t_end } else { n as f64 * dt }).collect();
    let states = times.iter().map(|&t| closed_form_solution(model, init, t)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times, states, meta: TrajectoryMeta { method: Method::ClosedForm, steps, step_size: dt } })
}

/// Classical fixed-step RK4 on `(h_1..h_s, H)`, re-Hermitizing `H` after
/// every step. Fails with `LostPositivity` as soon as a step leaves the
/// positive cone.
pub fn integrate_rk4(model: &CSpaceModel, init: &InvariantMetric, t_end: f64, steps: usize) -> Result<Trajectory> {
    model.check_metric(init)?;
    check_horizon(init, t_end, steps)?;
    let gammas = gamma_system(model).gamma;
    let dt = t_end / steps as f64;

    let rhs = |hb: &[f64], h: &CMatrix| fiber_rhs(&gammas, hb, h);
    let shift = |hb: &[f64], by: f64| -> Vec<f64> { hb.iter().map(|x| x - 0.5 * by).collect() };

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(init.clone());
    let mut hb = init.h_base().to_vec();
    let mut h = init.h_fiber().clone();
    for step in 1..=steps {
        let k1 = rhs(&hb, &h);
        let hb2 = shift(&hb, 0.5 * dt);
        let k2 = rhs(&hb2, &(&h + k1.scale(0.5 * dt)));
        let k3 = rhs(&hb2, &(&h + k2.scale(0.5 * dt)));
        let hb4 = shift(&hb, dt);
        let k4 = rhs(&hb4, &(&h + k3.scale(dt)));
        h += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
        h = linalg::hermitize(&h);
        hb = hb4;
        let t = if step == steps { t_end } else { step as f64 * dt };
        if hb.iter().any(|&x| !(x > 0.0)) || !linalg::is_positive_definite(&h) {
            return Err(Error::LostPositivity { t, step });
        }
        times.push(t);
        states.push(InvariantMetric::from_parts_unchecked(hb.clone(), h.clone()));
    }
    Ok(Trajectory { times, states, meta: TrajectoryMeta { method: Method::Rk4, steps, step_size: dt } })
}

/// Relative distance used to compare two metrics: max over base entries and
/// the Frobenius norm of the fibre difference, each relative to the reference.
pub fn relative_error(x: &InvariantMetric, reference: &InvariantMetric) -> f64 {
    let base = x.h_base().iter().zip(reference.h_base()).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs() / b.abs()));
    let fib = (x.h_fiber() - reference.h_fiber()).norm() / reference.h_fiber().norm();
    base.max(fib)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real};
    use crate::model::{build_cspace, ce25, FactorSpec, FiberSpec};

    fn scalar(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, real(x))
    }

    fn ce25_init(a1: f64, a2: f64) -> (CSpaceModel, InvariantMetric) {
        let m = ce25(a1, a2);
        let init = InvariantMetric::initial(&m, scalar(1.0)).unwrap();
        (m, init)
    }

    #[test]
    fn ce25_gamma() {
        let gs = gamma_system(&ce25(1.0, 1.0));
        assert!((gs.gamma[0][(0, 0)] - real(0.125)).norm() < 1e-16);
        assert!((gs.gamma[1][(0, 0)] - real(0.125)).norm() < 1e-16);
        assert!((gs.theta_s[(0, 0)] - real(0.25)).norm() < 1e-16);
    }

    #[test]
    fn gamma_of_coordinate_vector_and_zero() {
        let fiber = FiberSpec::from_pairs(2, &[vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [0.0, 0.0]]]);
        let m = build_cspace(vec![FactorSpec::grassmannian(1, 3, 1.0), FactorSpec::grassmannian(1, 2, 2.0)], fiber)
            .unwrap();
        let gs = gamma_system(&m);
        let expect = CMatrix::from_row_slice(2, 2, &[real(3.0), real(0.0), real(0.0), real(0.0)]);
        assert_eq!(gs.gamma[0], expect);
        assert_eq!(gs.gamma[1], CMatrix::zeros(2, 2));
        assert_eq!(gs.order, vec![0, 1]);
    }

    #[test]
    fn k_tensor_values() {
        let (m, _) = ce25_init(1.0, 1.0);
        let g = InvariantMetric::new(vec![1.0, 1.0], scalar(1.0)).unwrap();
        let kt = k_tensor(&m, &g).unwrap();
        assert_eq!(kt.base, vec![-0.5, -0.5]);
        assert!((kt.fiber[(0, 0)] - real(-0.25)).norm() < 1e-16);
        let g2 = InvariantMetric::new(vec![2.0, 2.0], scalar(1.0)).unwrap();
        assert!((k_tensor(&m, &g2).unwrap().fiber[(0, 0)] - real(-1.0 / 16.0)).norm() < 1e-16);
        assert!(matches!(InvariantMetric::new(vec![0.0, 1.0], scalar(1.0)), Err(Error::NonPositiveMetric(_))));
    }

    #[test]
    fn base_solution_values() {
        assert_eq!(base_solution(&[1.0, 2.0], 1.0).unwrap(), vec![0.5, 1.5]);
        assert_eq!(base_solution(&[1.0], 0.0).unwrap(), vec![1.0]);
        assert_eq!(base_solution(&[1.0, 2.0], 2.0).unwrap_err(), Error::PastExtinction { t_ext: 2.0 });
    }

    #[test]
    fn gamma_integral_values() {
        assert_eq!(gamma_integral(1.0, 1.0).unwrap(), 2.0);
        assert_eq!(gamma_integral(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(gamma_integral(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(gamma_integral(1.0, 2.0).unwrap(), f64::INFINITY);
        assert!(matches!(gamma_integral(1.0, 2.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn closed_form_ce25() {
        let (m, init) = ce25_init(1.0, 1.0);
        let s = closed_form_solution(&m, &init, 1.0).unwrap();
        assert_eq!(s.h_base(), &[0.5, 0.5]);
        assert!((s.h_fiber()[(0, 0)] - real(2.0 / 3.0)).norm() < 1e-15);
        assert_eq!(closed_form_solution(&m, &init, 0.0).unwrap(), init);
        let near = closed_form_solution(&m, &init, 1.999).unwrap();
        let expect = 1.0 / (1.0 + 0.25 * (2.0 * 1.999 / 0.001));
        assert!((near.h_fiber()[(0, 0)].re - expect).abs() < 1e-12 * expect.max(1.0));
        assert!(near.h_fiber()[(0, 0)].re > 0.0);
    }

    #[test]
    fn negative_time_positivity_failure() {
        let (m, init) = ce25_init(1.0, 1.0);
        // CE25: H^{-1}(t) = 1 + t/(2(2 - t)) stays above 1/2 for all t < 0.
        assert!(closed_form_solution(&m, &init, -0.5).is_ok());
        // Γ = 8: H^{-1}(-1) = 1 - 16/3 < 0.
        let fiber = FiberSpec::from_pairs(1, &[vec![[2.0, 0.0]]]);
        let big = build_cspace(vec![FactorSpec::grassmannian(1, 2, 1.0)], fiber).unwrap();
        let init = InvariantMetric::initial(&big, scalar(1.0)).unwrap();
        assert_eq!(closed_form_solution(&big, &init, -1.0).unwrap_err(), Error::NotPositive { t: -1.0 });
    }

    #[test]
    fn rk4_ce25() {
        let (m, init) = ce25_init(1.0, 1.0);
        let tr = integrate_rk4(&m, &init, 1.0, 1000).unwrap();
        assert_eq!(tr.times.len(), 1001);
        let h = tr.last().h_fiber()[(0, 0)].re;
        assert!((h - 2.0 / 3.0).abs() / (2.0 / 3.0) < 1e-8);
        assert!(matches!(integrate_rk4(&m, &init, 1.0, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(integrate_rk4(&m, &init, 1.99, 10), Err(Error::LostPositivity { .. })));
        assert_eq!(integrate_rk4(&m, &init, 2.5, 10).unwrap_err(), Error::PastExtinction { t_ext: 2.0 });
    }

    #[test]
    fn extinction_sets() {
        assert_eq!(extinction_time(&[1.0, 2.0, 3.0], DEFAULT_TIE_TOL), Extinction { t_ext: 2.0, p_set: vec![0] });
        assert_eq!(extinction_time(&[1.0, 1.0], DEFAULT_TIE_TOL).p_set, vec![0, 1]);
        assert_eq!(extinction_time(&[1.0, 1.0 + 1e-14], DEFAULT_TIE_TOL).p_set, vec![0, 1]);
        assert_eq!(extinction_time(&[1.0, 1.0 + 1e-9], DEFAULT_TIE_TOL).p_set, vec![0]);
    }

    #[test]
    fn complex_fibre_rhs_is_hermitian() {
        let fiber = FiberSpec::from_pairs(2, &[vec![[0.3, -0.2], [0.1, 0.7]], vec![[-0.5, 0.4], [0.2, 0.0]]]);
        let m = build_cspace(vec![FactorSpec::grassmannian(1, 2, 1.0), FactorSpec::grassmannian(2, 2, 1.5)], fiber)
            .unwrap();
        let h0 = CMatrix::from_row_slice(2, 2, &[real(2.0), c(0.3, 0.4), c(0.3, -0.4), real(1.0)]);
        let init = InvariantMetric::initial(&m, h0).unwrap();
        let kt = k_tensor(&m, &init).unwrap();
        assert!(linalg::max_abs(&(&kt.fiber - kt.fiber.adjoint())) < 1e-15);
        assert!(linalg::HermitianEigen::new(&kt.fiber).max() <= 1e-15);
    }
}
