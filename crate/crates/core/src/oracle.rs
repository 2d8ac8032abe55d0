//! Reference evaluators of `f(z, k)`.
//!
//! * [`f_area`] integrates the defining area integral directly, in the
//!   coordinates `w = c + rho (gamma(t) - c)` with `c = z` when `z` is inside
//!   (the Jacobian cancels the `1/(z - w)` singularity).
//! * [`f_boundary`] uses the boundary form obtained from Stokes' formula,
//!   `f = (1/(2i conj k)) \oint e^{-i u0} / (z - w) dw + (pi / conj k) e^{-i u0(z)} 1_Omega(z)`,
//!   with the periodic trapezoidal rule.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::phase::SpectralParam;
use crate::quadrature::GaussRule;

const AREA_BUDGET: usize = 1 << 27;
const BOUNDARY_MAX_NODES: usize = 1 << 24;

/// A quadrature value with its error estimate and cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: Complex64,
    pub est_error: f64,
    pub nodes_used: usize,
}

/// The jump term `(pi / conj k) exp(-i u0(z)) 1_Omega(z)`.
pub fn plane_term(domain: &ConvexDomain, z: Complex64, k: &SpectralParam) -> Result<Complex64> {
    if domain.indicator(z)? {
        Ok(PI / k.k().conj() * k.plane_wave(z))
    } else {
        Ok(Complex64::new(0.0, 0.0))
    }
}

/// Node count of the boundary rule before the error-estimating doubling.
pub fn boundary_rule_nodes(length: f64, modulus: f64) -> usize {
    let per_wave = (8.0 * modulus * length / (2.0 * PI)).ceil() as usize * 2;
    512.max(per_wave)
}

/// The periodic trapezoidal approximation of `\oint e^{-i u0} / (z - w) dw` with `n` nodes.
pub fn boundary_trapezoid(
    domain: &ConvexDomain,
    z: Complex64,
    k: &SpectralParam,
    n: usize,
) -> Complex64 {
    let (g, dg) = domain.boundary().sample_uniform(n);
    trapezoid_sum(&g, &dg, z, k, 1) * (domain.length() / n as f64)
}

fn trapezoid_sum(
    g: &[Complex64],
    dg: &[Complex64],
    z: Complex64,
    k: &SpectralParam,
    stride: usize,
) -> Complex64 {
    g.iter()
        .zip(dg)
        .step_by(stride)
        .map(|(w, dw)| k.plane_wave(*w) * dw / (z - w))
        .sum()
}

/// Boundary-integral form of `f`, with the error estimated by comparing `N` and `2N` nodes.
pub fn f_boundary(
    domain: &ConvexDomain,
    z: Complex64,
    k: Complex64,
    tol: f64,
) -> Result<QuadResult> {
    let sp = SpectralParam::new(k)?;
    let plane = plane_term(domain, z, &sp)?;
    let prefactor = 1.0 / (Complex64::new(0.0, 2.0) * k.conj());
    // the exponential has unit modulus on the boundary, so L / dist bounds the sum of |terms|
    let magnitude = prefactor.norm() * domain.length() / domain.contains(z)?.distance;
    let mut n = boundary_rule_nodes(domain.length(), sp.modulus());
    loop {
        let (g, dg) = domain.boundary().sample_uniform(2 * n);
        let h_fine = domain.length() / (2 * n) as f64;
        let fine = trapezoid_sum(&g, &dg, z, &sp, 1) * h_fine * prefactor;
        let coarse = trapezoid_sum(&g, &dg, z, &sp, 2) * (2.0 * h_fine) * prefactor;
        let value = fine + plane;
        let est_error = (fine - coarse).norm();
        let floor = 16.0 * f64::EPSILON * ((2 * n) as f64).sqrt() * magnitude;
        if est_error <= tol * value.norm() || est_error <= floor {
            return Ok(QuadResult {
                value,
                est_error,
                nodes_used: 2 * n,
            });
        }
        if 4 * n > BOUNDARY_MAX_NODES {
            return Err(Error::NoConvergence { est_error, tol });
        }
        n *= 2;
    }
}

/// Fewest trapezoidal nodes (on a 5% geometric ladder) for which the boundary
/// integral matches the converged value to relative accuracy `tol`.
pub fn boundary_nodes_for_accuracy(
    domain: &ConvexDomain,
    z: Complex64,
    k: Complex64,
    tol: f64,
) -> Result<usize> {
    let sp = SpectralParam::new(k)?;
    domain.contains(z)?;
    let reference = boundary_trapezoid(domain, z, &sp, 2 * boundary_rule_nodes(domain.length(), sp.modulus()));
    let mut n = 8;
    while n <= BOUNDARY_MAX_NODES {
        let value = boundary_trapezoid(domain, z, &sp, n);
        if (value - reference).norm() <= tol * reference.norm() {
            return Ok(n);
        }
        n = (n + 1).max((n as f64 * 1.05) as usize);
    }
    Err(Error::NoConvergence {
        est_error: f64::NAN,
        tol,
    })
}

/// Direct area integral `\int_Omega e^{conj(k w) - k w} / (z - w) dA(w)`; `k = 0` is allowed.
pub fn f_area(domain: &ConvexDomain, z: Complex64, k: Complex64, tol: f64) -> Result<QuadResult> {
    let inside = domain.indicator(z)?;
    let center = if inside { z } else { domain.interior_point() };
    let modulus = k.norm();
    let length = domain.length();
    let reach = (0..256)
        .map(|j| (domain.boundary().point(j as f64 * length / 256.0) - center).norm())
        .fold(0.0, f64::max);

    let rule = GaussRule::new(16);
    let mut n_t = 64 + (4.0 * modulus * length).ceil() as usize;
    let mut panels = 1 + (modulus * reach / 2.0).ceil() as usize;
    if !inside {
        // 1/(z - w) is sharper in rho when z is close to the domain.
        let gap = domain.contains(z)?.distance;
        panels = panels.max((2.0 * reach / gap).ceil().min(64.0) as usize);
    }
    let mut previous: Option<Complex64> = None;
    let mut used = 0;
    loop {
        let value = area_rule(domain, z, k, center, inside, n_t, panels, &rule);
        used += n_t * panels * rule.order();
        if let Some(prev) = previous {
            let est_error = (value - prev).norm();
            if est_error <= tol * value.norm().max(1e-300) {
                return Ok(QuadResult {
                    value,
                    est_error,
                    nodes_used: used,
                });
            }
            if 4 * n_t * panels * rule.order() > AREA_BUDGET {
                return Err(Error::NoConvergence { est_error, tol });
            }
        }
        previous = Some(value);
        n_t *= 2;
        panels *= 2;
    }
}

#[allow(clippy::too_many_arguments)]
fn area_rule(
    domain: &ConvexDomain,
    z: Complex64,
    k: Complex64,
    center: Complex64,
    inside: bool,
    n_t: usize,
    panels: usize,
    rule: &GaussRule,
) -> Complex64 {
    let (g, dg) = domain.boundary().sample_uniform(n_t);
    let h_t = domain.length() / n_t as f64;
    let rho_nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            rule.on_interval(p as f64 / panels as f64, (p + 1) as f64 / panels as f64)
                .collect::<Vec<_>>()
        })
        .collect();
    let plane = |w: Complex64| ((k * w).conj() - k * w).exp();
    g.iter()
        .zip(&dg)
        .map(|(gamma, dgamma)| {
            let radial = gamma - center;
            // dA = rho J dt drho
            let jac = (radial.conj() * dgamma).im;
            let sum: Complex64 = if inside {
                rho_nodes
                    .iter()
                    .map(|&(rho, wt)| plane(center + radial * rho) * wt)
                    .sum::<Complex64>()
                    * (-jac / radial)
            } else {
                rho_nodes
                    .iter()
                    .map(|&(rho, wt)| {
                        let w = center + radial * rho;
                        plane(w) / (z - w) * (rho * jac * wt)
                    })
                    .sum()
            };
            sum * h_t
        })
        .sum()
}

/// One row of a cross-validation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCase {
    pub z: Complex64,
    pub k: Complex64,
    pub f_area: Complex64,
    pub f_boundary: Complex64,
    pub rel_diff: f64,
    pub nodes: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tol: f64,
    pub cases: Vec<ValidationCase>,
    pub all_pass: bool,
}

/// Compares the two evaluators on every `(z, k)` pair.
pub fn cross_validate(
    domain: &ConvexDomain,
    z_list: &[Complex64],
    k_list: &[Complex64],
    tol: f64,
) -> Result<ValidationReport> {
    let mut cases = Vec::with_capacity(z_list.len() * k_list.len());
    for &z in z_list {
        for &k in k_list {
            cases.push(validate_case(domain, z, k, tol)?);
        }
    }
    let all_pass = cases.iter().all(|c| c.pass);
    Ok(ValidationReport {
        tol,
        cases,
        all_pass,
    })
}

/// Cross-validates a single `(z, k)`; the evaluators run at `tol / 100`.
pub fn validate_case(
    domain: &ConvexDomain,
    z: Complex64,
    k: Complex64,
    tol: f64,
) -> Result<ValidationCase> {
    let area = f_area(domain, z, k, tol * 1e-2)?;
    let boundary = f_boundary(domain, z, k, tol * 1e-2)?;
    let rel_diff = (area.value - boundary.value).norm() / area.value.norm();
    Ok(ValidationCase {
        z,
        k,
        f_area: area.value,
        f_boundary: boundary.value,
        rel_diff,
        nodes: area.nodes_used + boundary.nodes_used,
        pass: rel_diff <= tol,
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
    fn small_k_limit_is_cauchy_transform_of_disk() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let r = f_area(&disk, c(2.0, 0.0), c(1e-6, 0.0), 1e-10).unwrap();
        assert!((r.value - c(PI / 2.0, 0.0)).norm() < 2e-5);
        // inside: pi conj(z)
        let z = c(0.3, 0.4);
        let r = f_area(&disk, z, c(0.0, 0.0), 1e-10).unwrap();
        assert!((r.value - PI * z.conj()).norm() < 1e-9);
    }

    #[test]
    fn plane_term_modulus_at_unit_k() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let sp = SpectralParam::new(c(1.0, 0.0)).unwrap();
        let term = plane_term(&disk, c(0.0, 0.0), &sp).unwrap();
        assert!((term.norm() - PI).abs() < 1e-14);
        assert_eq!(plane_term(&disk, c(3.0, 0.0), &sp).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn evaluators_agree_on_ellipse() {
        let ell = make_ellipse(1.5, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        for z in [c(0.0, 0.0), c(2.0, 0.5)] {
            for k in [c(1.0, 0.0), c(3.0, 4.0), c(-6.0, 8.0)] {
                let case = validate_case(&ell, z, k, 1e-6).unwrap();
                assert!(case.pass, "{case:?}");
            }
        }
    }

    #[test]
    fn boundary_form_needs_nonzero_k_and_clear_boundary() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        assert!(matches!(
            f_boundary(&disk, c(2.0, 0.0), c(0.0, 0.0), 1e-8),
            Err(Error::ZeroSpectralParameter)
        ));
        assert!(matches!(
            f_boundary(&disk, c(0.0, 1.0), c(1.0, 0.0), 1e-8),
            Err(Error::AmbiguousBoundary { .. })
        ));
        assert!(matches!(
            cross_validate(&disk, &[c(1.0, 0.0)], &[c(1.0, 0.0)], 1e-6),
            Err(Error::AmbiguousBoundary { .. })
        ));
    }

    #[test]
    fn rotation_equivariance_on_disk() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let theta = PI / 3.0;
        let rot = Complex64::from_polar(1.0, theta);
        for (z, k) in [(c(0.2, -0.3), c(2.0, 1.0)), (c(1.7, 0.4), c(-3.0, 0.5))] {
            let base = f_boundary(&disk, z, k, 1e-13).unwrap().value;
            let turned = f_boundary(&disk, rot * z, k / rot, 1e-13).unwrap().value;
            assert!((turned - base / rot).norm() < 1e-8 * base.norm());
            let area = f_area(&disk, rot * z, k / rot, 1e-11).unwrap().value;
            assert!((area - base / rot).norm() < 1e-8 * base.norm());
        }
    }

    #[test]
    fn rule_size_scales_with_k() {
        assert_eq!(boundary_rule_nodes(2.0 * PI, 1.0), 512);
        assert_eq!(boundary_rule_nodes(2.0 * PI, 1000.0), 16000);
    }
}
