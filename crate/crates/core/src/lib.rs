//! Invariant Hermitian curvature flow on C-spaces.
//!
//! A C-space model is a torus bundle over a product of irreducible Hermitian
//! symmetric spaces. Invariant metrics are described by one positive number per
//! base factor and a positive definite matrix on the fibre, and the flow
//! reduces to a base ODE `h_i' = −1/2` and a fibre Riccati equation
//! `H' = −H Γ H`, both solvable in closed form.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod flow;
pub mod hss;
pub mod limit;
pub mod linalg;
pub mod model;
pub mod report;
pub mod statics;

pub use error::{Error, Result};
pub use flow::{
    closed_form_solution, closed_form_trajectory, extinction_time, gamma_integral, integrate_rk4, k_tensor, Trajectory,
    DEFAULT_TIE_TOL,
};
pub use limit::{collapse_structure_ce, limit_form, CollapseReport, LimitForm};
pub use model::{build_cspace, CSpaceModel, FactorKind, FactorSpec, FiberSpec, InvariantMetric};
pub use report::ResidualReport;
pub use statics::{normalized_state, static_metric, static_residual, NormalizedState, StaticMetric};
