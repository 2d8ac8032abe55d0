//! Numerical toolkit for the oscillatory Cauchy integral
//! `f(z, k) = \int_\Omega e^{\bar k \bar w - k w} / (z - w) dA(w)`
//! over smooth strictly convex domains, and its large-`|k|` structure.

pub mod almost_holo;
pub mod asymptotics;
pub mod contour;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod oracle;
pub mod phase;
pub mod quadrature;

pub use error::{Error, Result};
pub use num_complex::Complex64;
