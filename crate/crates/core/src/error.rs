use thiserror::Error;

use crate::quadrature::QuadratureResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point (theta={theta}, phi={phi}) lies outside the cut domain 0 < theta < 2pi, 0 < phi < pi")]
    OutsideDomain { theta: f64, phi: f64 },

    #[error("radius {0} must be positive")]
    NonPositiveRadius(f64),

    #[error("{op} of zero is singular")]
    SingularValue { op: &'static str },

    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },

    #[error("invalid family index k={k}, m={m}: need m >= 1 and |k| <= m - 1")]
    InvalidIndex { k: i64, m: i64 },

    #[error("stencil reach {reach} at (theta={theta}, phi={phi}) exceeds half the distance to the domain boundary")]
    StencilOutsideDomain { theta: f64, phi: f64, reach: f64 },

    #[error(
        "quadrature did not converge: partial value {}, error estimate {}, {} evaluations",
        .0.value, .0.abs_error_estimate, .0.evaluations
    )]
    NoConvergence(QuadratureResult),

    #[error("degenerate step sequence: {0}")]
    DegenerateSequence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
