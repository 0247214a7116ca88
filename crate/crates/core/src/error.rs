use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tangent vector is not g-unit (norm {norm})")]
    NonUnitTangent { norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("geodesic of length {length} exceeds the chart validity bound {limit}")]
    ChartTransition { length: f64, limit: f64 },

    #[error("points are {distance} apart, beyond the validity radius {limit}")]
    OutOfRange { distance: f64, limit: f64 },

    #[error("half-width {half_width} reaches the focal distance {focal}")]
    FocalPoint { half_width: f64, focal: f64 },

    #[error("family `{family}` is not supported on surface `{surface}`")]
    UnsupportedFamily { family: String, surface: String },

    #[error("exponent p = {0} is outside [2, inf]")]
    InvalidExponent(f64),

    #[error("numerical derivative did not converge: {0}")]
    NumericalDerivative(String),

    #[error(
        "lambda = {lambda} exceeds the quadrature cost bound {bound}; {required_nodes} nodes per side would be needed"
    )]
    CostBound {
        lambda: f64,
        bound: f64,
        required_nodes: usize,
    },

    #[error("quadrature did not reach its accuracy target: {0}")]
    Quadrature(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("L2 normalization certificate {certificate} differs from 1")]
    Normalization { certificate: f64 },

    #[error("two-point shooting failed to converge after {iterations} iterations (residual {residual})")]
    Shooting { iterations: usize, residual: f64 },

    #[error("scaling fit requires positive values, got {0}")]
    NonPositiveValue(f64),

    #[error("{experiment}: cell {cell}: {source}")]
    Cell {
        experiment: String,
        cell: String,
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
