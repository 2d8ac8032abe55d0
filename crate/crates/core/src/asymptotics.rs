//! Leading-order large-`|k|` model of `f`.
//!
//! Stationary phase at the two critical points `t+-` of `u0` gives for the
//! boundary integral
//!
//! ```text
//! \oint e^{-i u0} / (z - w) dw
//!   ~ sum_{+-} gamma'(t) e^{-i u0(t)} / (z - w) sqrt(2 pi / |u0''(t)|) e^{-i sgn(u0''(t)) pi / 4},
//! ```
//!
//! so each pole contributes at order `|k|^{-3/2}` after the factor `1/(2i conj k)`,
//! while for `z` inside the jump term `(pi / conj k) e^{-i u0(z)}` is of order `|k|^{-1}`.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::oracle::{f_boundary, plane_term};
use crate::phase::{find_poles, PoleData, SpectralParam};
use crate::quadrature::linear_fit;

/// Default separation from the boundary, as a fraction of the perimeter.
pub const D_MIN_FRACTION: f64 = 0.05;

/// Leading-order model: pole contributions at `w+` and `w-`, and the jump term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticModel {
    /// Contributions of `w+` and `w-`, in that order.
    pub pole_terms: [Complex64; 2],
    pub jump_term: Complex64,
    pub total: Complex64,
}

fn check_separation(domain: &ConvexDomain, z: Complex64) -> Result<bool> {
    let containment = domain.contains(z)?;
    let required = D_MIN_FRACTION * domain.length();
    if containment.distance < required {
        return Err(Error::TooCloseToBoundary {
            z,
            distance: containment.distance,
            required,
        });
    }
    Ok(containment.inside)
}

fn pole_terms(domain: &ConvexDomain, poles: &PoleData, z: Complex64, k: &SpectralParam) -> [Complex64; 2] {
    let prefactor = 1.0 / (Complex64::new(0.0, 2.0) * k.k().conj());
    let curve = domain.boundary();
    [
        (poles.t_plus, poles.w_plus, poles.u0_plus, poles.u0pp_plus),
        (poles.t_minus, poles.w_minus, poles.u0_minus, poles.u0pp_minus),
    ]
    .map(|(t, w, u0, u0pp)| {
        let amplitude = curve.tangent(t) / (z - w) * (2.0 * PI / u0pp.abs()).sqrt();
        let phase = -u0 - u0pp.signum() * FRAC_PI_4;
        prefactor * amplitude * Complex64::from_polar(1.0, phase)
    })
}

/// Sum of the two stationary-phase pole contributions.
pub fn f_leading(domain: &ConvexDomain, z: Complex64, k: Complex64) -> Result<Complex64> {
    let sp = SpectralParam::new(k)?;
    check_separation(domain, z)?;
    let poles = find_poles(domain.boundary(), &sp)?;
    let [plus, minus] = pole_terms(domain, &poles, z, &sp);
    Ok(plus + minus)
}

/// Pole contributions plus the jump term `(pi / conj k) e^{-i u0(z)} 1_Omega(z)`.
pub fn f_asym(domain: &ConvexDomain, z: Complex64, k: Complex64) -> Result<AsymptoticModel> {
    let sp = SpectralParam::new(k)?;
    check_separation(domain, z)?;
    let poles = find_poles(domain.boundary(), &sp)?;
    Ok(model_with_poles(domain, &poles, z, &sp))
}

/// The model for poles found earlier along the same ray of `k`.
pub fn f_asym_with_poles(
    domain: &ConvexDomain,
    poles: &PoleData,
    z: Complex64,
    k: &SpectralParam,
) -> Result<AsymptoticModel> {
    check_separation(domain, z)?;
    Ok(model_with_poles(domain, &poles.with_modulus(k.modulus()), z, k))
}

fn model_with_poles(domain: &ConvexDomain, poles: &PoleData, z: Complex64, k: &SpectralParam) -> AsymptoticModel {
    let pole_terms = pole_terms(domain, poles, z, k);
    // separation from the boundary was checked, so the indicator is well defined
    let jump_term = plane_term(domain, z, k).unwrap_or_default();
    AsymptoticModel {
        pole_terms,
        jump_term,
        total: pole_terms[0] + pole_terms[1] + jump_term,
    }
}

/// How `f` is obtained for [`phi2_leading`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Phi2Mode {
    /// The boundary-integral oracle at the given relative tolerance.
    Exact { tol: f64 },
    /// The leading-order asymptotic model.
    Asymptotic,
}

/// Leading contribution `conj(f(z, k)) / (2 pi)` to `phi_2`.
pub fn phi2_leading(domain: &ConvexDomain, z: Complex64, k: Complex64, mode: Phi2Mode) -> Result<Complex64> {
    let f = match mode {
        Phi2Mode::Exact { tol } => f_boundary(domain, z, k, tol)?.value,
        Phi2Mode::Asymptotic => f_asym(domain, z, k)?.total,
    };
    Ok(f.conj() / (2.0 * PI))
}

/// Least-squares line through `(ln |k|, ln magnitude)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log coordinates.
    pub residual: f64,
}

/// Log-log decay slope of `(|k|, magnitude)` samples.
pub fn decay_slope(samples: &[(f64, f64)]) -> Result<SlopeFit> {
    if samples.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "need at least 4 samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|(k, m)| !(*k > 0.0 && *m > 0.0 && k.is_finite() && m.is_finite())) {
        return Err(Error::DegenerateFit(format!("non-positive sample {bad:?}")));
    }
    let xs: Vec<f64> = samples.iter().map(|(k, _)| k.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, m)| m.ln()).collect();
    let (slope, intercept, residual) = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::DegenerateFit("all |k| values coincide".to_string()))?;
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_circle, make_ellipse, DEFAULT_REPARAM_TOL};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disk_leading_order_against_oracle() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let k = c(0.0, 100.0);
        let lead = f_leading(&disk, c(3.0, 0.0), k).unwrap();
        let exact = f_boundary(&disk, c(3.0, 0.0), k, 1e-12).unwrap().value;
        assert!((lead - exact).norm() / exact.norm() <= 5.0 / 100.0);
    }

    #[test]
    fn pole_terms_scale_as_three_halves() {
        let ell = make_ellipse(1.5, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        let z = c(3.0, 0.5);
        let base = f_asym(&ell, z, Complex64::from_polar(100.0, 0.4)).unwrap();
        for m in [200.0, 800.0] {
            let model = f_asym(&ell, z, Complex64::from_polar(m, 0.4)).unwrap();
            for (p, q) in model.pole_terms.iter().zip(base.pole_terms) {
                let ratio = p.norm() / q.norm() * (m / 100.0f64).powf(1.5);
                assert!((ratio - 1.0).abs() < 1e-9, "{ratio}");
            }
        }
    }

    #[test]
    fn inside_is_jump_dominated() {
        let ell = make_ellipse(2.0, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        for m in [50.0, 200.0] {
            let k = Complex64::from_polar(m, 1.0);
            let model = f_asym(&ell, c(0.2, -0.1), k).unwrap();
            let ratio = model.total.norm() * m / PI;
            assert!((0.8..=1.2).contains(&ratio));
            let phi = phi2_leading(&ell, c(0.2, -0.1), k, Phi2Mode::Asymptotic).unwrap();
            assert_eq!(phi, model.total.conj() / (2.0 * PI));
        }
        let outside = f_asym(&ell, c(3.0, 0.0), c(0.0, 50.0)).unwrap();
        assert_eq!(outside.jump_term, Complex64::new(0.0, 0.0));
        assert_eq!(outside.total, outside.pole_terms[0] + outside.pole_terms[1]);
    }

    #[test]
    fn guards_and_fit_errors() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        assert!(matches!(
            f_leading(&disk, c(1.1, 0.0), c(0.0, 10.0)),
            Err(Error::TooCloseToBoundary { .. })
        ));
        assert!(matches!(decay_slope(&[(1.0, 1.0); 3]), Err(Error::DegenerateFit(_))));
        assert!(matches!(decay_slope(&[(2.0, 1.0); 5]), Err(Error::DegenerateFit(_))));
        let power: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0].iter().map(|&k: &f64| (k, 3.0 * k.powf(-1.5))).collect();
        assert!((decay_slope(&power).unwrap().slope + 1.5).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0].iter().map(|&k| (k, 2.0)).collect();
        assert!(decay_slope(&flat).unwrap().slope.abs() < 1e-12);
        let mixed: Vec<(f64, f64)> = [20.0, 40.0, 80.0, 160.0].iter().map(|&k: &f64| (k, 1.0 / k + 0.01 * k.powf(-1.5))).collect();
        let slope = decay_slope(&mixed).unwrap().slope;
        assert!(slope > -1.1 && slope < -0.9, "{slope}");
    }
}
