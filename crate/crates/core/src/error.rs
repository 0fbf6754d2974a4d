use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// Variants carry the measured quantity that tripped the check so callers can
/// report it without recomputing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not Hermitian (relative skew part {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("ambient dimension {requested} exceeds the configured limit {limit}")]
    AmbientTooLarge { requested: usize, limit: usize },

    #[error("generic central sample produced colliding eigenvalue clusters after {attempts} attempts")]
    DegenerateSample { attempts: usize },

    #[error("element is not in the algebra (relative residual {residual:.3e})")]
    ElementNotInAlgebra { residual: f64 },

    #[error("element is not a projection (residual {residual:.3e})")]
    NotProjection { residual: f64 },

    #[error("not a subalgebra of the parent: {0}")]
    NotSubalgebra(String),

    #[error("functional is not positive (Gram eigenvalue {eigenvalue:.3e})")]
    NotPositive { eigenvalue: f64 },

    #[error("functional is not normalized (value at unit {value})")]
    NotNormalized { value: f64 },

    #[error("state is not pure")]
    NotPure,

    #[error("unknown base index {0}")]
    UnknownBaseIndex(usize),

    #[error("point does not lie on the submanifold (residual {residual:.3e})")]
    PointNotOnSubmanifold { residual: f64 },

    #[error("candidate union of subspaces is empty")]
    EmptyCandidate,

    #[error("sampled values are not the transform of an algebra element (residual {residual:.3e})")]
    InconsistentSamples { residual: f64 },

    #[error("tomography frame is ill-conditioned (condition number {condition:.3e})")]
    IllConditionedFrame { condition: f64 },

    #[error("state vanishes on the hereditary subalgebra (weight {weight:.3e})")]
    VanishesOnB { weight: f64 },

    #[error("hereditary corner is full on fiber {fiber}; no orthogonal directions exist")]
    FullCorner { fiber: usize },

    #[error("direction is not a unit vector orthogonal to the corner ({0})")]
    BadDirection(String),

    #[error("state is not on the requested sphere: {0}")]
    NotOnSphere(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two routes that must agree did not. Never silently resolved.
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
