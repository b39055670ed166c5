use thiserror::Error;

/// Errors raised by the walk, estimation and case-study routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QwfError {
    #[error("invalid coin parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate coin: sin(theta) = {sin_theta:e} (theta must avoid 0 and pi)")]
    DegenerateCoin { sin_theta: f64 },

    #[error("invalid walker state: {0}")]
    InvalidState(String),

    #[error(
        "k-grid aliasing: {nodes} nodes cannot resolve a support of {width} sites (need at least {required})"
    )]
    Aliasing {
        nodes: usize,
        width: usize,
        required: usize,
    },

    #[error(
        "degenerate k-node at k = {k}: |cos(omega)| = {cos_omega} is within the degeneracy band"
    )]
    DegenerateK { k: f64, cos_omega: f64 },

    #[error("quadrature did not converge: last relative change {change:e} with {nodes} nodes")]
    QuadratureNonConvergence { change: f64, nodes: usize },

    #[error("singular Fisher matrix: parameter '{parameter}' is not identifiable")]
    SingularFisher { parameter: String },

    #[error("model is not compatible: |D| = {d_norm:e} exceeds {threshold:e}")]
    IncompatibleModel { d_norm: f64, threshold: f64 },

    #[error("outside the invertibility window: {0}")]
    OutOfWindow(String),

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("charge is unidentifiable when the vector potential A_x is zero")]
    ChargeUnidentifiable,

    #[error("singular Jacobian (|det| = {det:e})")]
    SingularJacobian { det: f64 },

    #[error("invalid weight matrix: {0}")]
    InvalidWeight(String),

    #[error("invalid estimation setup: {0}")]
    InvalidEstimation(String),

    #[error("likelihood is multimodal on the search grid: a secondary maximum at theta = {theta} lies {gap} below the best")]
    Multimodal { theta: f64, gap: f64 },
}

impl QwfError {
    /// Broad class of the failure, used by front ends to pick exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            QwfError::InvalidParams(_)
            | QwfError::InvalidState(_)
            | QwfError::Aliasing { .. }
            | QwfError::OutOfWindow(_)
            | QwfError::InvalidWeight(_)
            | QwfError::InvalidEstimation(_) => ErrorKind::Validation,
            QwfError::QuadratureNonConvergence { .. }
            | QwfError::NoConvergence { .. }
            | QwfError::Multimodal { .. } => ErrorKind::Numerical,
            QwfError::DegenerateCoin { .. }
            | QwfError::DegenerateK { .. }
            | QwfError::SingularFisher { .. }
            | QwfError::IncompatibleModel { .. }
            | QwfError::ChargeUnidentifiable
            | QwfError::SingularJacobian { .. } => ErrorKind::Model,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Model,
}

pub type Result<T> = std::result::Result<T, QwfError>;
