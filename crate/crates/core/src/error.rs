use thiserror::Error;

pub type Result<T, E = JsqError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum JsqError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation requires a finite capacity; truncate first")]
    InfiniteCapacity,

    #[error("process is not ergodic: {0}")]
    NotErgodic(String),

    #[error("degenerate discriminant: the two roots coincide")]
    DegenerateDiscriminant,

    #[error("boundary recursion pivot vanishes at k = {k} (|pivot| = {pivot:e})")]
    PivotDegenerate { k: usize, pivot: f64 },

    #[error("negative mass {value:e} at ({j}, {k}): numerical breakdown")]
    NegativeMass { j: usize, k: usize, value: f64 },

    #[error("singular linear system (generator not irreducible?)")]
    SingularSystem,

    #[error("state space of {states} states exceeds the cap of {cap}")]
    DimensionCap { states: usize, cap: usize },

    #[error("truncation insufficient: tail estimate {estimate:e} exceeds tolerance {tol:e}")]
    TruncationInsufficient { estimate: f64, tol: f64 },

    #[error("pair ({y}, {z}) does not lie on the root curve")]
    NotOnCurve { y: f64, z: f64 },

    #[error("evaluation point outside the domain: {0}")]
    DomainViolation(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("formula fault: {0}")]
    FormulaFault(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl JsqError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        JsqError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
