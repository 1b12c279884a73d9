//! JSON run configuration. Complex numbers are `[re, im]` pairs.

use hcflow_core::linalg::{c, CMatrix, CVector};
use hcflow_core::model::{fiber_coeffs_from_complex_structure, ComplexStructureInput};
use hcflow_core::{build_cspace, CSpaceModel, FactorKind, FactorSpec, FiberSpec, InvariantMetric};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub run: RunParams,
    /// Metric examined by `static --check` when no file is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub factors: Vec<FactorConfig>,
    pub fiber: FiberConfig,
    /// 1-based factor pairs of Calabi–Eckmann blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ce_pairs: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "A")]
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex_structure: Option<ComplexStructureConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexStructureConfig {
    /// Real coordinates of `(Z_j)_f`, one row per factor.
    pub zf: Vec<Vec<f64>>,
    /// `I_F` as a real `2k × 2k` matrix, row-major.
    pub i_f: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(rename = "H0")]
    pub h0: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub h: Vec<f64>,
    #[serde(rename = "H")]
    pub h_fiber: Vec<Vec<[f64; 2]>>,
}

fn invalid(field: impl Into<String>, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {msg}", field.into()))
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let field = if path == "." { what.to_string() } else { format!("{what}: {path}") };
        CliError::Config(format!("{field}: {inner}"))
    })
}

pub fn load(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("--config {}: {e}", path.display())))?;
    parse_json(&text, "config")
}

pub fn complex_matrix(rows: &[Vec<[f64; 2]>], field: &str) -> Result<CMatrix, CliError> {
    let n = rows.len();
    if n == 0 {
        return Err(invalid(field, "matrix must be non-empty"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != n) {
        return Err(invalid(format!("{field}[{i}]"), format!("expected {n} entries, got {}", rows[i].len())));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub fn complex_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

impl FactorConfig {
    fn kind(&self, field: &str) -> Result<FactorKind, CliError> {
        let params: Vec<usize> = [self.p, self.q, self.n].into_iter().flatten().collect();
        FactorKind::from_name(&self.kind, &params).map_err(|e| invalid(format!("{field}.kind"), e))
    }
}

impl RunConfig {
    pub fn model(&self) -> Result<CSpaceModel, CliError> {
        let mut factors = Vec::with_capacity(self.model.factors.len());
        if self.model.factors.is_empty() {
            return Err(invalid("model.factors", "at least one factor is required"));
        }
        for (i, f) in self.model.factors.iter().enumerate() {
            let field = format!("model.factors[{i}]");
            let kind = f.kind(&field)?;
            if kind.is_quadric() {
                return Err(invalid(format!("{field}.kind"), "complex quadrics are not supported"));
            }
            if kind.complex_dim() < 2 {
                return Err(invalid(format!("{field}.kind"), format!("{} has complex dimension < 2", kind.label())));
            }
            if !(f.a.is_finite() && f.a > 0.0) {
                return Err(invalid(format!("{field}.A"), format!("must be positive and finite, got {}", f.a)));
            }
            factors.push(FactorSpec::new(kind, f.a));
        }
        let fiber = self.fiber(&factors)?;
        let mut model = build_cspace(factors, fiber).map_err(|e| invalid("model", e))?;
        if let Some(pairs) = &self.model.ce_pairs {
            let s = model.s();
            let mut zero_based = Vec::with_capacity(pairs.len());
            for (i, &[a, b]) in pairs.iter().enumerate() {
                if a == 0 || b == 0 || a > s || b > s {
                    return Err(invalid(
                        format!("model.ce_pairs[{i}]"),
                        format!("indices are 1-based and at most {s}"),
                    ));
                }
                zero_based.push((a - 1, b - 1));
            }
            model = model.with_ce_pairs(zero_based).map_err(|e| invalid("model.ce_pairs", e))?;
        }
        Ok(model)
    }

    fn fiber(&self, factors: &[FactorSpec]) -> Result<FiberSpec, CliError> {
        let f = &self.model.fiber;
        if f.k == 0 {
            return Err(invalid("model.fiber.k", "must be positive"));
        }
        match (&f.c, &f.complex_structure) {
            (Some(_), Some(_)) => Err(invalid("model.fiber", "give either c or complex_structure, not both")),
            (None, None) => Err(invalid("model.fiber", "missing c or complex_structure")),
            (Some(rows), None) => {
                if rows.len() != factors.len() {
                    return Err(invalid(
                        "model.fiber.c",
                        format!("{} vectors for {} factors", rows.len(), factors.len()),
                    ));
                }
                let mut cs = Vec::with_capacity(rows.len());
                for (j, r) in rows.iter().enumerate() {
                    if r.len() != f.k {
                        return Err(invalid(
                            format!("model.fiber.c[{j}]"),
                            format!("length {} but k={}", r.len(), f.k),
                        ));
                    }
                    if r.iter().flatten().any(|x| !x.is_finite()) {
                        return Err(invalid(format!("model.fiber.c[{j}]"), "non-finite entry"));
                    }
                    cs.push(CVector::from_fn(f.k, |a, _| c(r[a][0], r[a][1])));
                }
                Ok(FiberSpec::new(f.k, cs))
            }
            (None, Some(cs)) => {
                let dim = 2 * f.k;
                if cs.i_f.len() != dim || cs.i_f.iter().any(|r| r.len() != dim) {
                    return Err(invalid("model.fiber.complex_structure.i_f", format!("must be {dim}x{dim}")));
                }
                if let Some(j) = cs.zf.iter().position(|z| z.len() != dim) {
                    return Err(invalid(
                        format!("model.fiber.complex_structure.zf[{j}]"),
                        format!("length must be {dim}"),
                    ));
                }
                let input = ComplexStructureInput {
                    zf_coords: cs.zf.iter().map(|z| DVector::from_column_slice(z)).collect(),
                    i_f: DMatrix::from_fn(dim, dim, |i, j| cs.i_f[i][j]),
                };
                fiber_coeffs_from_complex_structure(&input, factors)
                    .map_err(|e| invalid("model.fiber.complex_structure", e))
            }
        }
    }

    pub fn initial(&self, model: &CSpaceModel) -> Result<InvariantMetric, CliError> {
        let h0 = complex_matrix(&self.initial.h0, "initial.H0")?;
        if h0.nrows() != model.k() {
            return Err(invalid("initial.H0", format!("is {0}x{0} but k={1}", h0.nrows(), model.k())));
        }
        InvariantMetric::initial(model, h0).map_err(|e| invalid("initial.H0", e))
    }

    /// Complex structure of the fibre when supplied in that form.
    pub fn complex_structure(&self) -> Option<ComplexStructureInput> {
        self.model.fiber.complex_structure.as_ref().map(|cs| {
            let dim = cs.i_f.len();
            ComplexStructureInput {
                zf_coords: cs.zf.iter().map(|z| DVector::from_column_slice(z)).collect(),
                i_f: DMatrix::from_fn(dim, dim, |i, j| cs.i_f[i][j]),
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

impl MetricConfig {
    pub fn metric(&self, model: &CSpaceModel, field: &str) -> Result<InvariantMetric, CliError> {
        if self.h.len() != model.s() {
            return Err(invalid(format!("{field}.h"), format!("{} entries for {} factors", self.h.len(), model.s())));
        }
        let h = complex_matrix(&self.h_fiber, &format!("{field}.H"))?;
        if h.nrows() != model.k() {
            return Err(invalid(format!("{field}.H"), format!("is {0}x{0} but k={1}", h.nrows(), model.k())));
        }
        InvariantMetric::new(self.h.clone(), h).map_err(|e| invalid(field, e))
    }
}
