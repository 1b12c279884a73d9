use thiserror::Error;

/// Errors produced by model construction, flow evaluation and the limit analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("QuadricNotSupported: factor {factor} is a complex quadric")]
    QuadricNotSupported { factor: usize },

    #[error("DimensionTooSmall: factor {factor} has complex dimension {dim} (need at least 2)")]
    DimensionTooSmall { factor: usize, dim: usize },

    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),

    #[error("NotAComplexStructure: max |IF^2 + I| = {max_err:e}")]
    NotAComplexStructure { max_err: f64 },

    #[error("DegenerateBasis: {{X_a, IF X_a}} does not span the fibre")]
    DegenerateBasis,

    #[error("UnknownType: {0}")]
    UnknownType(String),

    #[error("SizeLimit: su({n}) exceeds the supported size (p+q <= 8)")]
    SizeLimit { n: usize },

    #[error("Inadmissible: {0}")]
    Inadmissible(String),

    #[error("NonPositiveMetric: {0}")]
    NonPositiveMetric(String),

    #[error("PastExtinction: T={t_ext}")]
    PastExtinction { t_ext: f64 },

    #[error("OutOfDomain: t={t} exceeds 2A={limit}")]
    OutOfDomain { t: f64, limit: f64 },

    #[error("NotPositive: inverse fibre form is not positive definite at t={t}")]
    NotPositive { t: f64 },

    #[error("LostPositivity: fibre metric left the positive cone at t={t} (step {step})")]
    LostPositivity { t: f64, step: usize },

    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),

    #[error("NoStaticForNonpositiveLambda: lambda={lambda}")]
    NoStaticForNonpositiveLambda { lambda: f64 },

    #[error("ThetaSingular: smallest eigenvalue of Theta_s is {min_eig:e}")]
    ThetaSingular { min_eig: f64 },

    #[error("UnequalA: normalized flow requires all A_i equal (min {min}, max {max})")]
    UnequalA { min: f64, max: f64 },

    #[error("NotCEProduct: {0}")]
    NotCEProduct(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to malformed input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::PastExtinction { .. }
                | Error::OutOfDomain { .. }
                | Error::NotPositive { .. }
                | Error::LostPositivity { .. }
                | Error::ThetaSingular { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
