//! Algebraic data of a C-space over a product of Hermitian symmetric spaces
//! and of its invariant Hermitian metrics.
//!
//! A model is the list of base factors `G_j/K_j` (complex dimension `n_j`,
//! initial base coefficient `A_j`) together with the fibre data: the complex
//! fibre dimension `k` and one coefficient vector `c^j ∈ C^k` per factor,
//! the coordinates of `H_α^{01}` (for any positive non-compact root `α` of
//! factor `j`) in the basis `V̄_1..V̄_k` of `f^{01}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// Tolerance on `max |IF·IF + Id|` for accepting a fibre complex structure.
pub const COMPLEX_STRUCTURE_TOL: f64 = 1e-10;

/// Irreducible compact Hermitian symmetric space types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorKind {
    /// `SU(p+q)/S(U(p)×U(q))`
    Grassmannian { p: usize, q: usize },
    /// `Sp(n)/U(n)`
    SpOverU { n: usize },
    /// `SO(2n)/U(n)`
    SoOverU { n: usize },
    /// `E6/Spin(10)·U(1)`
    #[serde(rename = "e3")]
    EIII,
    /// `E7/E6·U(1)`
    #[serde(rename = "e7")]
    EVII,
    /// `SO(n+2)/SO(2)×SO(n)`, the complex quadric of dimension `n`.
    Quadric { n: usize },
}

impl FactorKind {
    pub fn complex_dim(&self) -> usize {
        match *self {
            FactorKind::Grassmannian { p, q } => p * q,
            FactorKind::SpOverU { n } => n * (n + 1) / 2,
            FactorKind::SoOverU { n } => n * n.saturating_sub(1) / 2,
            FactorKind::EIII => 16,
            FactorKind::EVII => 27,
            FactorKind::Quadric { n } => n,
        }
    }

    pub fn is_quadric(&self) -> bool {
        matches!(self, FactorKind::Quadric { .. })
    }

    /// Parses a kind name as used in configs and on the command line.
    pub fn from_name(name: &str, params: &[usize]) -> Result<FactorKind> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::ShapeMismatch(format!("{name} takes {n} parameter(s), got {}", params.len())))
            }
        };
        let kind = match name.to_ascii_lowercase().as_str() {
            "grassmannian" | "aiii" | "a3" => {
                want(2)?;
                FactorKind::Grassmannian { p: params[0], q: params[1] }
            }
            "sp_over_u" | "ci" => {
                want(1)?;
                FactorKind::SpOverU { n: params[0] }
            }
            "so_over_u" | "diii" => {
                want(1)?;
                FactorKind::SoOverU { n: params[0] }
            }
            "e3" | "eiii" => {
                want(0)?;
                FactorKind::EIII
            }
            "e7" | "evii" => {
                want(0)?;
                FactorKind::EVII
            }
            "quadric" | "bdi" => {
                want(1)?;
                FactorKind::Quadric { n: params[0] }
            }
            other => return Err(Error::UnknownType(other.to_string())),
        };
        Ok(kind)
    }

    pub fn label(&self) -> String {
        match *self {
            FactorKind::Grassmannian { p, q } => format!("SU({})/S(U({p})xU({q}))", p + q),
            FactorKind::SpOverU { n } => format!("Sp({n})/U({n})"),
            FactorKind::SoOverU { n } => format!("SO({})/U({n})", 2 * n),
            FactorKind::EIII => "E6/Spin(10)U(1)".to_string(),
            FactorKind::EVII => "E7/E6U(1)".to_string(),
            FactorKind::Quadric { n } => format!("SO({})/SO(2)xSO({n})", n + 2),
        }
    }
}

/// One base factor: its type, its complex dimension and the initial base
/// coefficient `A_j` (`h_o = -A_j κ` on `n_j`).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub kind: FactorKind,
    pub dim_n: usize,
    pub a: f64,
}

impl FactorSpec {
    /// Factor with `dim_n` taken from the kind.
    pub fn new(kind: FactorKind, a: f64) -> Self {
        FactorSpec { kind, dim_n: kind.complex_dim(), a }
    }

    pub fn grassmannian(p: usize, q: usize, a: f64) -> Self {
        Self::new(FactorKind::Grassmannian { p, q }, a)
    }
}

/// Fibre dimension and coefficient vectors `c^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSpec {
    pub k: usize,
    pub c: Vec<CVector>,
}

impl FiberSpec {
    pub fn new(k: usize, c: Vec<CVector>) -> Self {
        FiberSpec { k, c }
    }

    /// Builds the fibre data from `[re, im]` pairs, one row per factor.
    pub fn from_pairs(k: usize, rows: &[Vec<[f64; 2]>]) -> Self {
        let c =
            rows.iter().map(|row| CVector::from_iterator(row.len(), row.iter().map(|&[re, im]| c(re, im)))).collect();
        FiberSpec { k, c }
    }
}

/// Coordinates of the fibre components `(Z_j)_f` in a real basis
/// `X_1..X_2k` of `f`, and the fibre complex structure `I_F` in that basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructureInput {
    pub zf_coords: Vec<DVector<f64>>,
    pub i_f: DMatrix<f64>,
}

/// Result of the realizability test for directly supplied `c^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Realizability {
    /// Real rank of `{c^j}` inside `C^k ≅ R^{2k}`.
    pub real_rank: usize,
    pub required: usize,
}

impl Realizability {
    pub fn is_realizable(&self) -> bool {
        self.real_rank == self.required
    }
}

/// Validated C-space model.
#[derive(Debug, Clone, PartialEq)]
pub struct CSpaceModel {
    factors: Vec<FactorSpec>,
    fiber: FiberSpec,
    total_dim_m: usize,
    ce_pairs: Option<Vec<(usize, usize)>>,
}

/// Validates factors and fibre data and assembles a model.
pub fn build_cspace(factors: Vec<FactorSpec>, fiber: FiberSpec) -> Result<CSpaceModel> {
    if factors.is_empty() {
        return Err(Error::ShapeMismatch("at least one base factor is required".into()));
    }
    if fiber.k == 0 {
        return Err(Error::ShapeMismatch("fibre dimension k must be positive".into()));
    }
    for (j, f) in factors.iter().enumerate() {
        if f.kind.is_quadric() {
            return Err(Error::QuadricNotSupported { factor: j + 1 });
        }
        if f.dim_n != f.kind.complex_dim() {
            return Err(Error::ShapeMismatch(format!(
                "factor {}: dim_n={} but {} has complex dimension {}",
                j + 1,
                f.dim_n,
                f.kind.label(),
                f.kind.complex_dim()
            )));
        }
        if f.dim_n < 2 {
            return Err(Error::DimensionTooSmall { factor: j + 1, dim: f.dim_n });
        }
        if !(f.a.is_finite() && f.a > 0.0) {
            return Err(Error::NonPositiveMetric(format!("factor {}: A={} must be positive", j + 1, f.a)));
        }
    }
    if fiber.c.len() != factors.len() {
        return Err(Error::ShapeMismatch(format!(
            "fibre has {} coefficient vectors for {} factors",
            fiber.c.len(),
            factors.len()
        )));
    }
    for (j, cj) in fiber.c.iter().enumerate() {
        if cj.len() != fiber.k {
            return Err(Error::ShapeMismatch(format!("c^{} has length {} but k={}", j + 1, cj.len(), fiber.k)));
        }
        if cj.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::ShapeMismatch(format!("c^{} has a non-finite entry", j + 1)));
        }
    }
    let total_dim_m = fiber.k + factors.iter().map(|f| f.dim_n).sum::<usize>();
    Ok(CSpaceModel { factors, fiber, total_dim_m, ce_pairs: None })
}

impl CSpaceModel {
    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn fiber(&self) -> &FiberSpec {
        &self.fiber
    }

    pub fn s(&self) -> usize {
        self.factors.len()
    }

    pub fn k(&self) -> usize {
        self.fiber.k
    }

    pub fn total_dim_m(&self) -> usize {
        self.total_dim_m
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim_n).collect()
    }

    /// Initial base coefficients `A_1..A_s`.
    pub fn initial_a(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.a).collect()
    }

    pub fn ce_pairs(&self) -> Option<&[(usize, usize)]> {
        self.ce_pairs.as_deref()
    }

    /// Tags the model as a product of Calabi–Eckmann blocks. Pairs are
    /// 0-based factor indices and must partition all factors.
    pub fn with_ce_pairs(mut self, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let s = self.s();
        let mut seen = vec![false; s];
        for &(a, b) in &pairs {
            if a >= s || b >= s || a == b {
                return Err(Error::NotCEProduct(format!("invalid pair ({}, {})", a + 1, b + 1)));
            }
            for i in [a, b] {
                if seen[i] {
                    return Err(Error::NotCEProduct(format!("factor {} paired twice", i + 1)));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|&x| !x) {
            return Err(Error::NotCEProduct(format!("factor {} is unpaired", i + 1)));
        }
        self.ce_pairs = Some(pairs);
        Ok(self)
    }

    /// Same model with different initial base coefficients.
    pub fn with_initial_a(&self, a: &[f64]) -> Result<Self> {
        if a.len() != self.s() {
            return Err(Error::ShapeMismatch(format!("{} base coefficients for {} factors", a.len(), self.s())));
        }
        let factors = self.factors.iter().zip(a).map(|(f, &aj)| FactorSpec { a: aj, ..f.clone() }).collect();
        let mut m = build_cspace(factors, self.fiber.clone())?;
        m.ce_pairs = self.ce_pairs.clone();
        Ok(m)
    }

    /// Whether the `c^j` can come from `(Z_j)_f` spanning a real `2k`-dimensional fibre.
    pub fn realizability(&self) -> Realizability {
        Realizability { real_rank: linalg::real_rank(&self.fiber.c, 1e-12), required: 2 * self.k() }
    }

    pub fn warnings(&self) -> Vec<String> {
        let r = self.realizability();
        if r.is_realizable() {
            Vec::new()
        } else {
            vec![format!(
                "fibre coefficients span a real subspace of dimension {} < 2k = {}; no C-space realizes them",
                r.real_rank, r.required
            )]
        }
    }

    /// Shape check of a metric against this model.
    pub fn check_metric(&self, metric: &InvariantMetric) -> Result<()> {
        if metric.h_base.len() != self.s() {
            return Err(Error::ShapeMismatch(format!(
                "metric has {} base coefficients, model has {} factors",
                metric.h_base.len(),
                self.s()
            )));
        }
        if metric.h_fiber.nrows() != self.k() {
            return Err(Error::ShapeMismatch(format!(
                "fibre matrix is {}x{}, model has k={}",
                metric.h_fiber.nrows(),
                metric.h_fiber.ncols(),
                self.k()
            )));
        }
        Ok(())
    }
}

/// An invariant Hermitian metric: base coefficients `h_i` and the fibre
/// Gram matrix `H_{ab} = h(V_a, V̄_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMetric {
    h_base: Vec<f64>,
    h_fiber: CMatrix,
}

impl InvariantMetric {
    pub fn new(h_base: Vec<f64>, h_fiber: CMatrix) -> Result<Self> {
        if let Some((i, h)) = h_base.iter().enumerate().find(|(_, &h)| !(h.is_finite() && h > 0.0)) {
            return Err(Error::NonPositiveMetric(format!("h_{}={h}", i + 1)));
        }
        if h_fiber.nrows() != h_fiber.ncols() || h_fiber.nrows() == 0 {
            return Err(Error::ShapeMismatch("fibre matrix must be square and non-empty".into()));
        }
        let asym = linalg::max_abs(&(&h_fiber - h_fiber.adjoint()));
        if asym > 1e-12 * linalg::max_abs(&h_fiber).max(1.0) {
            return Err(Error::NonPositiveMetric(format!("fibre matrix not Hermitian (|H - H^†| = {asym:e})")));
        }
        let h_fiber = linalg::hermitize(&h_fiber);
        if !linalg::is_positive_definite(&h_fiber) {
            return Err(Error::NonPositiveMetric("fibre matrix not positive definite".into()));
        }
        Ok(InvariantMetric { h_base, h_fiber })
    }

    /// Initial metric of a model: `h_i = A_i` and the given fibre matrix.
    pub fn initial(model: &CSpaceModel, h0: CMatrix) -> Result<Self> {
        let m = Self::new(model.initial_a(), h0)?;
        model.check_metric(&m)?;
        Ok(m)
    }

    pub fn h_base(&self) -> &[f64] {
        &self.h_base
    }

    pub fn h_fiber(&self) -> &CMatrix {
        &self.h_fiber
    }

    pub fn scaled(&self, mu: f64) -> Result<Self> {
        Self::new(self.h_base.iter().map(|h| h * mu).collect(), self.h_fiber.scale(mu))
    }

    /// Entrywise max distance (base coefficients and fibre entries).
    pub fn max_diff(&self, other: &InvariantMetric) -> f64 {
        let base = self.h_base.iter().zip(&other.h_base).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        base.max(linalg::max_abs(&(&self.h_fiber - &other.h_fiber)))
    }

    pub(crate) fn from_parts_unchecked(h_base: Vec<f64>, h_fiber: CMatrix) -> Self {
        InvariantMetric { h_base, h_fiber }
    }
}

/// Fibre coefficients from a concrete fibre complex structure.
///
/// Conventions: the first `k` real basis vectors `X_a` define
/// `V_a = ½(X_a − i·I_F X_a)` spanning `f^{10}`; a real vector projects to
/// `v^{01} = ½(v + i·I_F v)`, which is expanded in `V̄_a = ½(X_a + i·I_F X_a)`.
/// Then `c^j = −i/(2 n_j) · coords((Z_j)_f^{01})`.
pub fn fiber_coeffs_from_complex_structure(input: &ComplexStructureInput, factors: &[FactorSpec]) -> Result<FiberSpec> {
    let dim = input.i_f.nrows();
    if dim != input.i_f.ncols() || dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::ShapeMismatch(format!(
            "I_F must be a non-empty even square matrix, got {}x{}",
            input.i_f.nrows(),
            input.i_f.ncols()
        )));
    }
    if input.zf_coords.len() != factors.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} fibre components for {} factors",
            input.zf_coords.len(),
            factors.len()
        )));
    }
    if let Some(j) = input.zf_coords.iter().position(|z| z.len() != dim) {
        return Err(Error::ShapeMismatch(format!(
            "(Z_{})_f has length {} but dim f = {dim}",
            j + 1,
            input.zf_coords[j].len()
        )));
    }
    let k = dim / 2;
    let sq = &input.i_f * &input.i_f + DMatrix::<f64>::identity(dim, dim);
    let max_err = sq.amax();
    if !(max_err <= COMPLEX_STRUCTURE_TOL) {
        return Err(Error::NotAComplexStructure { max_err });
    }

    let ifc = input.i_f.map(|x| c(x, 0.0));
    // Columns: V_1..V_k, V̄_1..V̄_k in real-basis coordinates.
    let mut basis = CMatrix::zeros(dim, dim);
    for a in 0..k {
        let x = CVector::from_fn(dim, |r, _| c(if r == a { 1.0 } else { 0.0 }, 0.0));
        let jx = &ifc * &x;
        let v = (&x - jx.map(|z| z * linalg::I)).scale(0.5);
        let vbar = (&x + jx.map(|z| z * linalg::I)).scale(0.5);
        basis.set_column(a, &v);
        basis.set_column(k + a, &vbar);
    }
    let lu = basis.lu();
    // {X_a, I_F X_a} spans iff {V_a, V̄_a} spans.
    let det = lu.determinant().norm();
    if !(det > 1e-12) {
        return Err(Error::DegenerateBasis);
    }

    let c = input
        .zf_coords
        .iter()
        .zip(factors)
        .map(|(z, f)| {
            let zc = z.map(|x| c(x, 0.0));
            let coords = lu.solve(&zc).expect("basis checked invertible");
            let scale = c(0.0, -1.0 / (2.0 * f.dim_n as f64));
            CVector::from_fn(k, |a, _| coords[k + a] * scale)
        })
        .collect();
    Ok(FiberSpec { k, c })
}

/// The two-factor Calabi–Eckmann test model over `CP^2 × CP^2`:
/// `k = 1`, `c^1 = −i/4`, `c^2 = −1/4`, `m = 5`.
pub fn ce25(a1: f64, a2: f64) -> CSpaceModel {
    let fiber =
        FiberSpec::new(1, vec![CVector::from_element(1, c(0.0, -0.25)), CVector::from_element(1, c(-0.25, 0.0))]);
    build_cspace(vec![FactorSpec::grassmannian(1, 2, a1), FactorSpec::grassmannian(1, 2, a2)], fiber)
        .and_then(|m| m.with_ce_pairs(vec![(0, 1)]))
        .expect("CE25 fixture is valid")
}

/// Complex structure data that generates the CE25 fibre coefficients:
/// `(Z_1)_f = X_1`, `(Z_2)_f = X_2`, `I_F X_1 = X_2`.
pub fn ce25_complex_structure() -> ComplexStructureInput {
    ComplexStructureInput {
        zf_coords: vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0])],
        i_f: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
    }
}
