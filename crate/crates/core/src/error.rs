use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain parameters: {0}")]
    InvalidDomain(String),

    #[error("arclength reparametrization did not reach tolerance {tol:e} (speed error {achieved:e})")]
    Reparametrization { tol: f64, achieved: f64 },

    #[error("curve is not strictly convex: minimum curvature {kappa_min:e} at t = {t}")]
    ConvexityViolated { kappa_min: f64, t: f64 },

    #[error("point {z} lies within {distance:e} of the boundary; indicator is undefined")]
    AmbiguousBoundary { z: Complex64, distance: f64 },

    #[error("spectral parameter must be nonzero")]
    ZeroSpectralParameter,

    #[error("expected exactly two critical points of the boundary phase, found {found}")]
    PoleCount { found: usize },

    #[error("extension order {0} outside the supported range 1..=8")]
    InvalidOrder(usize),

    #[error("normal offset s = {s} outside the extension band |s| <= {s_max}")]
    OutOfBand { s: f64, s_max: f64 },

    #[error("contour configuration rejected: {0}")]
    Config(String),

    #[error("point {z} is within {distance:e} of the deformed contour")]
    TooCloseToContour { z: Complex64, distance: f64 },

    #[error("point {z} is within {distance:e} of the swept regions")]
    TooCloseToRegion { z: Complex64, distance: f64 },

    #[error("point {z} is within {distance:e} of the boundary (asymptotics need {required:e})")]
    TooCloseToBoundary {
        z: Complex64,
        distance: f64,
        required: f64,
    },

    #[error("quadrature did not converge: estimated error {est_error:e} > tolerance {tol:e}")]
    NoConvergence { est_error: f64, tol: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
