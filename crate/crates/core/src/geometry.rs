//! Smooth strictly convex domains described by unit-speed boundary curves.
//!
//! A boundary is stored as a truncated Fourier series in arclength `t`, with
//! `t -> gamma(t)` positively oriented. The interior unit normal is
//! `nu(t) = i gamma'(t)` and `gamma''(t) = kappa(t) nu(t)` with `kappa > 0`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;

/// Default tolerance on `| |gamma'| - 1 |`.
pub const DEFAULT_REPARAM_TOL: f64 = 1e-10;
/// Curvature floor used to certify strict convexity.
pub const KAPPA_MIN: f64 = 1e-6;
/// Points closer than `DIST_TOL_FACTOR * L` to the boundary are not classified.
pub const DIST_TOL_FACTOR: f64 = 1e-8;

const MAX_REPARAM_SAMPLES: usize = 1 << 15;
const INVARIANT_SAMPLES: usize = 4096;

/// Position and first two derivatives of the boundary at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub gamma: Complex64,
    pub dgamma: Complex64,
    pub ddgamma: Complex64,
}

impl CurvePoint {
    /// Interior unit normal `i gamma'`.
    pub fn normal(&self) -> Complex64 {
        Complex64::i() * self.dgamma
    }

    /// Signed curvature `<gamma'', nu>`; positive for convex, positively oriented curves.
    pub fn curvature(&self) -> f64 {
        (self.dgamma.conj() * self.ddgamma).im / self.dgamma.norm().powi(3)
    }
}

/// Closed, positively oriented, unit-speed curve of length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    gamma: FourierSeries,
    dgamma: FourierSeries,
    ddgamma: FourierSeries,
    length: f64,
}

impl BoundaryCurve {
    /// Wraps an already unit-speed Fourier series; the period is the length.
    pub fn from_series(gamma: FourierSeries) -> Self {
        let dgamma = gamma.derivative(1);
        let ddgamma = gamma.derivative(2);
        let length = gamma.period();
        Self {
            gamma,
            dgamma,
            ddgamma,
            length,
        }
    }

    /// Reparametrizes a `2 pi`-periodic curve `theta -> (gamma, dgamma/dtheta)` by arclength.
    ///
    /// The arclength function is integrated spectrally from sampled speeds and
    /// inverted by Newton's method; the sample count doubles until the unit-speed
    /// error on a dense sample is below `tol`.
    pub fn arclength_from<F>(param: F, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> (Complex64, Complex64),
    {
        let mut samples = 64usize;
        let mut achieved = f64::INFINITY;
        while samples <= MAX_REPARAM_SAMPLES {
            let curve = Self::reparametrize(&param, samples);
            achieved = curve.speed_error(INVARIANT_SAMPLES.max(4 * curve.max_mode()));
            let tail = curve.gamma.tail_magnitude(0.9) / curve.gamma.coeff(1).norm().max(1e-300);
            if achieved <= tol && tail < 1e-15 {
                return Ok(curve.trimmed(1e-17));
            }
            samples *= 2;
        }
        Err(Error::Reparametrization { tol, achieved })
    }

    fn reparametrize<F>(param: &F, samples: usize) -> Self
    where
        F: Fn(f64) -> (Complex64, Complex64),
    {
        let thetas: Vec<f64> = (0..samples).map(|j| TAU * j as f64 / samples as f64).collect();
        let speeds: Vec<Complex64> = thetas
            .iter()
            .map(|&th| Complex64::new(param(th).1.norm(), 0.0))
            .collect();
        let speed = FourierSeries::from_samples(&speeds, TAU);
        let mean_speed = speed.coeff(0).re;
        let length = TAU * mean_speed;
        // Periodic part of the arclength primitive.
        let m = speed.max_mode() as isize;
        let mut periodic = speed.clone();
        for n in -m..=m {
            *periodic.coeff_mut(n) = if n == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                speed.coeff(n) / Complex64::new(0.0, n as f64)
            };
        }
        let arclength = |th: f64| mean_speed * th + periodic.eval(th).re;

        let points: Vec<Complex64> = (0..samples)
            .map(|j| {
                let target = length * j as f64 / samples as f64;
                let mut theta = target / mean_speed;
                for _ in 0..50 {
                    let step = (arclength(theta) - target) / param(theta).1.norm();
                    theta -= step;
                    if step.abs() < 1e-15 * (1.0 + theta.abs()) {
                        break;
                    }
                }
                param(theta).0
            })
            .collect();
        Self::from_series(FourierSeries::from_samples(&points, length))
    }

    fn trimmed(&self, rel: f64) -> Self {
        let scale = self.gamma.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let m = self.gamma.max_mode() as isize;
        let keep = (1..=m)
            .rev()
            .find(|&n| self.gamma.coeff(n).norm().max(self.gamma.coeff(-n).norm()) > rel * scale)
            .unwrap_or(1)
            .max(1) as usize;
        Self::from_series(self.gamma.truncated(keep))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn series(&self) -> &FourierSeries {
        &self.gamma
    }

    pub fn max_mode(&self) -> usize {
        self.gamma.max_mode()
    }

    pub fn point(&self, t: f64) -> Complex64 {
        self.gamma.eval(t)
    }

    pub fn tangent(&self, t: f64) -> Complex64 {
        self.dgamma.eval(t)
    }

    pub fn acceleration(&self, t: f64) -> Complex64 {
        self.ddgamma.eval(t)
    }

    pub fn eval(&self, t: f64) -> CurvePoint {
        CurvePoint {
            t,
            gamma: self.gamma.eval(t),
            dgamma: self.dgamma.eval(t),
            ddgamma: self.ddgamma.eval(t),
        }
    }

    /// `gamma` and `gamma'` at `count` equispaced parameters `j L / count`.
    pub fn sample_uniform(&self, count: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        (
            self.gamma.sample_uniform(count),
            self.dgamma.sample_uniform(count),
        )
    }

    /// Curvature `kappa(t) = <gamma'', i gamma'>`.
    pub fn curvature(&self, t: f64) -> f64 {
        self.eval(t).curvature()
    }

    /// Curvature sampled at `count` equispaced parameters.
    pub fn curvature_samples(&self, count: usize) -> Vec<f64> {
        let d1 = self.dgamma.sample_uniform(count);
        let d2 = self.ddgamma.sample_uniform(count);
        d1.iter()
            .zip(&d2)
            .map(|(a, b)| (a.conj() * b).im / a.norm().powi(3))
            .collect()
    }

    /// Max of `| |gamma'(t)| - 1 |` over `count` equispaced samples.
    pub fn speed_error(&self, count: usize) -> f64 {
        self.dgamma
            .sample_uniform(count)
            .iter()
            .map(|d| (d.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Reduces `t` to `[0, L)`.
    pub fn wrap(&self, t: f64) -> f64 {
        t.rem_euclid(self.length)
    }

    /// Same curve rotated about the origin by `theta`; the parametrization is unchanged.
    pub fn rotated(&self, theta: f64) -> Self {
        Self::from_series(self.gamma.scale(Complex64::from_polar(1.0, theta)))
    }

    /// Same curve translated by `shift`.
    pub fn translated(&self, shift: Complex64) -> Self {
        let mut gamma = self.gamma.clone();
        *gamma.coeff_mut(0) += shift;
        Self::from_series(gamma)
    }

    /// Signed enclosed area.
    pub fn area(&self) -> f64 {
        let count = INVARIANT_SAMPLES.max(4 * self.max_mode());
        let (g, dg) = self.sample_uniform(count);
        0.5 * g.iter().zip(&dg).map(|(a, b)| (a.conj() * b).im).sum::<f64>() * self.length
            / count as f64
    }
}

/// Axis-aligned rectangle `[min.re, max.re] x [min.im, max.im]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Complex64,
    pub max: Complex64,
}

impl BoundingBox {
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.min.re && z.re <= self.max.re && z.im >= self.min.im && z.im <= self.max.im
    }
}

/// Result of an interior test: membership and the estimated distance to the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub inside: bool,
    pub distance: f64,
    /// Parameter of the closest boundary point.
    pub closest_t: f64,
}

impl Containment {
    /// Distance with a positive sign inside the domain.
    pub fn signed_distance(&self) -> f64 {
        if self.inside {
            self.distance
        } else {
            -self.distance
        }
    }
}

/// Strictly convex domain with a smooth boundary.
#[derive(Debug, Clone)]
pub struct ConvexDomain {
    boundary: BoundaryCurve,
    bbox: BoundingBox,
    /// Dense boundary sample used by the interior test.
    cache_t: Vec<f64>,
    cache_pts: Vec<Complex64>,
    dist_tol: f64,
}

impl ConvexDomain {
    /// Validates orientation, unit speed and strict convexity of `boundary`.
    pub fn new(boundary: BoundaryCurve, reparam_tol: f64) -> Result<Self> {
        let samples = INVARIANT_SAMPLES.max(8 * boundary.max_mode());
        let speed_err = boundary.speed_error(samples);
        if speed_err > reparam_tol {
            return Err(Error::Reparametrization {
                tol: reparam_tol,
                achieved: speed_err,
            });
        }
        if boundary.area() <= 0.0 {
            return Err(Error::InvalidDomain(
                "boundary must be positively oriented".into(),
            ));
        }
        check_strict_convexity(&boundary)?;

        let count = 1024.max(8 * boundary.max_mode());
        let h = boundary.length() / count as f64;
        let cache_pts = boundary.series().sample_uniform(count);
        let cache_t = (0..count).map(|j| j as f64 * h).collect();
        // Pad the box by the largest sagitta between samples.
        let kappa_max = boundary
            .curvature_samples(count)
            .into_iter()
            .fold(0.0, f64::max);
        let pad = kappa_max * h * h;
        let (mut min, mut max) = (cache_pts[0], cache_pts[0]);
        for p in &cache_pts {
            min = Complex64::new(min.re.min(p.re), min.im.min(p.im));
            max = Complex64::new(max.re.max(p.re), max.im.max(p.im));
        }
        let bbox = BoundingBox {
            min: min - Complex64::new(pad, pad),
            max: max + Complex64::new(pad, pad),
        };
        let dist_tol = DIST_TOL_FACTOR * boundary.length();
        Ok(Self {
            boundary,
            bbox,
            cache_t,
            cache_pts,
            dist_tol,
        })
    }

    pub fn boundary(&self) -> &BoundaryCurve {
        &self.boundary
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn dist_tol(&self) -> f64 {
        self.dist_tol
    }

    pub fn length(&self) -> f64 {
        self.boundary.length()
    }

    /// Rotation about the origin by `theta`.
    pub fn rotated(&self, theta: f64) -> Result<Self> {
        Self::new(self.boundary.rotated(theta), DEFAULT_REPARAM_TOL.max(self.speed_error()))
    }

    fn speed_error(&self) -> f64 {
        self.boundary.speed_error(INVARIANT_SAMPLES)
    }

    /// Centroid of the boundary sample; interior for convex domains.
    pub fn interior_point(&self) -> Complex64 {
        self.cache_pts.iter().sum::<Complex64>() / self.cache_pts.len() as f64
    }

    /// Largest curvature on a dense sample.
    pub fn kappa_max(&self) -> f64 {
        self.boundary
            .curvature_samples(self.cache_pts.len())
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Closest boundary parameter and distance, refined by Newton's method.
    pub fn closest_point(&self, z: Complex64) -> (f64, f64) {
        let (idx, _) = self
            .cache_pts
            .iter()
            .enumerate()
            .map(|(j, p)| (j, (p - z).norm_sqr()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty cache");
        let h = self.cache_t[1];
        let mut t = self.cache_t[idx];
        for _ in 0..30 {
            let p = self.boundary.eval(t);
            let diff = p.gamma - z;
            let g = (diff.conj() * p.dgamma).re;
            let dg = p.dgamma.norm_sqr() + (diff.conj() * p.ddgamma).re;
            if dg <= 0.0 {
                break;
            }
            let step = (g / dg).clamp(-h, h);
            t -= step;
            if step.abs() < 1e-15 * self.length() {
                break;
            }
        }
        let t = self.boundary.wrap(t);
        let d = (self.boundary.point(t) - z).norm();
        let d_cache = (self.cache_pts[idx] - z).norm();
        if d <= d_cache {
            (t, d)
        } else {
            (self.cache_t[idx], d_cache)
        }
    }

    /// Interior test by winding number, with the boundary distance estimate.
    pub fn contains(&self, z: Complex64) -> Result<Containment> {
        let (closest_t, distance) = self.closest_point(z);
        if distance < self.dist_tol {
            return Err(Error::AmbiguousBoundary { z, distance });
        }
        let winding = self.winding_number(z);
        Ok(Containment {
            inside: winding == 1,
            distance,
            closest_t,
        })
    }

    /// Indicator of the domain; `AmbiguousBoundary` near the boundary.
    pub fn indicator(&self, z: Complex64) -> Result<bool> {
        Ok(self.contains(z)?.inside)
    }

    /// Winding number of the boundary about `z`, summing angle increments over
    /// arcs short enough that none of them can wind around `z`.
    pub fn winding_number(&self, z: Complex64) -> i64 {
        let n = self.cache_pts.len();
        let h = self.cache_t[1];
        let mut total = 0.0;
        for j in 0..n {
            let (ta, pa) = (self.cache_t[j], self.cache_pts[j]);
            let (tb, pb) = if j + 1 < n {
                (self.cache_t[j + 1], self.cache_pts[j + 1])
            } else {
                (self.length(), self.cache_pts[0])
            };
            total += self.angle_increment(z, ta, pa, tb, pb, h, 0);
        }
        (total / TAU).round() as i64
    }

    #[allow(clippy::too_many_arguments)]
    fn angle_increment(
        &self,
        z: Complex64,
        ta: f64,
        pa: Complex64,
        tb: f64,
        pb: Complex64,
        h: f64,
        depth: u32,
    ) -> f64 {
        // Unit speed: an arc shorter than the distance from its start to z stays
        // in a disk that excludes z, so its angle change is below pi.
        let reach = (pa - z).norm().min((pb - z).norm());
        if (tb - ta) < 0.5 * reach || depth > 60 {
            return ((pb - z) / (pa - z)).arg();
        }
        let tm = 0.5 * (ta + tb);
        let pm = self.boundary.point(tm);
        self.angle_increment(z, ta, pa, tm, pm, h * 0.5, depth + 1)
            + self.angle_increment(z, tm, pm, tb, pb, h * 0.5, depth + 1)
    }

    /// Normal coordinates `(t, s)` with `z = gamma(t) + i s gamma'(t)`; `s > 0` inside.
    pub fn tube_coords(&self, z: Complex64) -> (f64, f64) {
        let (t, _) = self.closest_point(z);
        let p = self.boundary.eval(t);
        let s = ((z - p.gamma) * p.normal().conj()).re;
        (t, s)
    }
}

fn check_strict_convexity(curve: &BoundaryCurve) -> Result<()> {
    let count = INVARIANT_SAMPLES.max(8 * curve.max_mode());
    let kappa = curve.curvature_samples(count);
    let (jmin, kmin) = kappa
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty sample");
    if kmin <= KAPPA_MIN {
        return Err(Error::ConvexityViolated {
            kappa_min: kmin,
            t: jmin as f64 * curve.length() / count as f64,
        });
    }
    // Positive curvature alone admits multiply-wound curves; the total turning must be 2 pi.
    let turning = kappa.iter().sum::<f64>() * curve.length() / count as f64;
    if (turning - TAU).abs() > 1e-6 {
        return Err(Error::InvalidDomain(format!(
            "total turning {turning} differs from 2 pi"
        )));
    }
    Ok(())
}

/// Unit-speed ellipse `x^2/a^2 + y^2/b^2 = 1`, starting at `(a, 0)`.
pub fn make_ellipse(a: f64, b: f64, reparam_tol: f64) -> Result<ConvexDomain> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidDomain(format!(
            "ellipse semi-axes must be positive, got ({a}, {b})"
        )));
    }
    let curve = BoundaryCurve::arclength_from(
        |th| {
            let (s, c) = th.sin_cos();
            (Complex64::new(a * c, b * s), Complex64::new(-a * s, b * c))
        },
        reparam_tol,
    )?;
    ConvexDomain::new(curve, reparam_tol)
}

/// One term `Re(coeff * exp(i mode theta))` of a radial perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMode {
    pub mode: i32,
    pub coeff: Complex64,
}

/// Star-shaped curve `r(theta) = radius + sum Re(c_m exp(i m theta))`, checked for strict convexity.
pub fn make_perturbed_circle(
    radius: f64,
    perturbation: &[RadialMode],
    reparam_tol: f64,
) -> Result<ConvexDomain> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidDomain(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let modes = perturbation.to_vec();
    let radial = move |th: f64| {
        let mut r = radius;
        let mut dr = 0.0;
        for m in &modes {
            let e = Complex64::from_polar(1.0, m.mode as f64 * th) * m.coeff;
            r += e.re;
            dr += (e * Complex64::new(0.0, m.mode as f64)).re;
        }
        (r, dr)
    };
    let r_min = (0..4096)
        .map(|j| radial(TAU * j as f64 / 4096.0).0)
        .fold(f64::INFINITY, f64::min);
    if r_min <= 0.0 {
        return Err(Error::InvalidDomain(format!(
            "perturbed radius becomes non-positive ({r_min})"
        )));
    }
    let curve = BoundaryCurve::arclength_from(
        |th| {
            let (r, dr) = radial(th);
            let e = Complex64::from_polar(1.0, th);
            (e * r, e * Complex64::new(dr, r))
        },
        reparam_tol,
    )?;
    ConvexDomain::new(curve, reparam_tol)
}

/// Exact circle of radius `radius` centred at `center` (a single Fourier mode).
pub fn make_circle(center: Complex64, radius: f64) -> Result<ConvexDomain> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidDomain(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let length = TAU * radius;
    let coeffs = vec![
        Complex64::new(0.0, 0.0),
        center,
        Complex64::new(radius, 0.0),
    ];
    let curve = BoundaryCurve::from_series(FourierSeries::new(coeffs, length));
    ConvexDomain::new(curve, DEFAULT_REPARAM_TOL)
}

/// Serializable description of a test domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reparam_tol: Option<f64>,
    },
    PerturbedCircle {
        radius: f64,
        /// Entries `[mode, re, im]`.
        #[serde(default)]
        perturbation: Vec<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reparam_tol: Option<f64>,
    },
}

impl DomainSpec {
    pub fn build(&self) -> Result<ConvexDomain> {
        match self {
            DomainSpec::Ellipse { a, b, reparam_tol } => {
                if a == b {
                    make_circle(Complex64::new(0.0, 0.0), *a)
                } else {
                    make_ellipse(*a, *b, reparam_tol.unwrap_or(DEFAULT_REPARAM_TOL))
                }
            }
            DomainSpec::PerturbedCircle {
                radius,
                perturbation,
                reparam_tol,
            } => {
                let modes = perturbation
                    .iter()
                    .map(|&[mode, re, im]| {
                        if mode.fract() != 0.0 {
                            return Err(Error::InvalidDomain(format!(
                                "perturbation mode must be an integer, got {mode}"
                            )));
                        }
                        Ok(RadialMode {
                            mode: mode as i32,
                            coeff: Complex64::new(re, im),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if modes.iter().all(|m| m.coeff.norm() == 0.0) {
                    make_circle(Complex64::new(0.0, 0.0), *radius)
                } else {
                    make_perturbed_circle(
                        *radius,
                        &modes,
                        reparam_tol.unwrap_or(DEFAULT_REPARAM_TOL),
                    )
                }
            }
        }
    }
}

/// Perimeter of the ellipse by composite Gauss-Legendre on the closed-form integrand.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let rule = crate::quadrature::GaussRule::new(32);
    let panels = 64;
    (0..panels)
        .map(|j| {
            let lo = TAU * j as f64 / panels as f64;
            let hi = TAU * (j + 1) as f64 / panels as f64;
            rule.on_interval(lo, hi)
                .map(|(th, w)| w * (a * a * th.sin().powi(2) + b * b * th.cos().powi(2)).sqrt())
                .sum::<f64>()
        })
        .sum()
}
