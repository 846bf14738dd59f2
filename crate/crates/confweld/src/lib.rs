//! Numerical side of conformal welding and boundary Liouville fields: conformal
//! series, Beltrami flows, circle fields, welding and SLE traces.
//!
//! Everything numeric is generic over a [`Real`] scalar; the `*64` aliases fix
//! it to `f64`.

pub mod beltrami;
pub mod conformal;
pub mod curve;
pub mod fields;
pub mod quadrature;
pub mod real;
pub mod sle;
pub mod spectral;
pub mod welding;

pub use real::{Cx, Real};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular map: {0}")]
    SingularMap(String),
    #[error("series tail {tail:e} exceeds tolerance")]
    SeriesDivergence { tail: f64 },
    #[error("quadrature did not converge: error estimate {estimate:e} (value {value:e})")]
    Accuracy { estimate: f64, value: f64 },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("value sampled on the unit circle")]
    Boundary,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("solver stalled at residual {residual:e}: {detail}")]
    Solver { residual: f64, detail: String },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("no geometric decay (fitted rate {rate})")]
    Convergence { rate: f64 },
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("map is not injective")]
    Injectivity,
}

pub type Complex64 = num_complex::Complex<f64>;
pub type PowerSeriesMap64 = conformal::PowerSeriesMap<f64>;
pub type BeltramiSpec64 = beltrami::BeltramiSpec<f64>;
pub type Constants64 = conformal::Constants<f64>;
