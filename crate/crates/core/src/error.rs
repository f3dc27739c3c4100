use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = WfockError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WfockError {
    /// Adaptive refinement ran out of budget before the estimates agreed.
    #[error("quadrature did not converge for {what}: last estimate {last:e}, previous {previous:e}")]
    Quadrature { what: String, last: f64, previous: f64 },
    #[error("certified tail {tail:e} above tolerance for {what} at cutoff radius {cutoff}")]
    TailNotCertified { what: String, tail: f64, cutoff: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported path: {0}")]
    Unsupported(String),
    #[error("gram pivot below regularization at degree {failed_degree}; largest stable degree is {stable_degree}")]
    DegreeTooHigh { failed_degree: usize, stable_degree: usize },
    #[error("point {point} lies outside the certified evaluation radius {radius} (estimated tail {tail:e})")]
    TruncationUnsafe { point: Complex64, radius: f64, tail: f64 },
    #[error("degenerate composition symbol: a = 0 collapses the plane to a point")]
    DegenerateMap,
    #[error("model resolution too low: {0}")]
    ModelResolution(String),
    #[error("hermitian eigen-iteration did not converge (off-diagonal residual {residual:e})")]
    EigenNonConvergence { residual: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below -{tolerance:e}; assembly quadrature is too coarse")]
    NotPsd { eigenvalue: f64, tolerance: f64 },
    #[error("gauge is not convex: second difference {second_difference:e} at t = {t}")]
    NonConvexGauge { t: f64, second_difference: f64 },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },
}

impl WfockError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        WfockError::InvalidInput(msg.into())
    }

    pub(crate) fn quadrature(what: impl Into<String>, last: f64, previous: f64) -> Self {
        WfockError::Quadrature {
            what: what.into(),
            last,
            previous,
        }
    }
}
