use thiserror::Error;

/// Rejected system configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field}: expected {expected} entries, got {got}")]
    Length {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field} must be {requirement} (got {value})")]
    Range {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("uplink target {index} is unreachable: gamma*delta2*beta2 = {product} >= 1")]
    UnreachableUplinkTarget { index: usize, product: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index {index} out of range 0..{len}")]
    Index { index: usize, len: usize },
}

/// Failure of one of the transceiver solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    /// The SINR targets (or ADC cap) cannot be met; `stage` names the step that gave up.
    #[error("infeasible ({stage}): {detail}")]
    Infeasible { stage: &'static str, detail: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    FixedPoint(#[from] crate::fixed_point::FixedPointError),
}

impl SolveError {
    pub(crate) fn infeasible(stage: &'static str, detail: impl Into<String>) -> Self {
        SolveError::Infeasible {
            stage,
            detail: detail.into(),
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, SolveError::Infeasible { .. })
    }
}
