use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed symbol: {0}")]
    MalformedSymbol(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("incompatible direct sum: {0}")]
    IncompatibleSum(String),
    #[error("normalization error: {0}")]
    Normalization(String),
    #[error("ellipticity margin violated: eigenvalue {eigenvalue} within {tol:e} of the real axis")]
    EllipticityMargin { eigenvalue: Complex64, tol: f64 },
    #[error("eigenvalue {eigenvalue} lies on the spectral cut Re = 0 (tolerance {tol:e})")]
    SpectralCut { eigenvalue: Complex64, tol: f64 },
    #[error("order error: {0}")]
    Order(String),
    #[error("boundary symbol is not invertible (min singular value {min_singular:e}); cannot rotate")]
    CannotRotate { min_singular: f64 },
    #[error("invalid cutoff: {0}")]
    InvalidCutoff(String),
    #[error("unsupported manifold/order combination: {0}")]
    Capability(String),
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("projection is not admissible: {0}")]
    Admissibility(String),
    #[error("unsupported projection class: {0}")]
    UnsupportedClass(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("pairing error: {0}")]
    Pairing(String),
    #[error("tolerance error: {0}")]
    Tolerance(String),
    #[error("frame discontinuity: {0}")]
    Discontinuity(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
