//! The boundary phase `u0(t) = |k| Re(gamma(t) conj(omega))`, its critical
//! points (the poles `w+-`) and the arcs between them.
//!
//! With `omega = 2 i conj(k) / |k|` the plane wave of the integrand is
//! `exp(conj(k w) - k w) = exp(-i |k| Re(w conj(omega)))`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::BoundaryCurve;

/// Nonzero spectral parameter with `h = 1/|k|` and the unit-modulus-2 direction `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParam {
    k: Complex64,
    h: f64,
    omega: Complex64,
}

impl SpectralParam {
    pub fn new(k: Complex64) -> Result<Self> {
        let modulus = k.norm();
        if !(modulus > 0.0 && modulus.is_finite()) {
            return Err(Error::ZeroSpectralParameter);
        }
        Ok(Self {
            k,
            h: 1.0 / modulus,
            omega: Complex64::new(0.0, 2.0) * k.conj() / modulus,
        })
    }

    /// Parameter with the given modulus whose `omega` points along `direction`.
    pub fn from_omega(direction: Complex64, modulus: f64) -> Result<Self> {
        if direction.norm() == 0.0 {
            return Err(Error::ZeroSpectralParameter);
        }
        let unit = direction / direction.norm();
        // omega = 2 i conj(k)/|k|  <=>  k = i |k| conj(omega) / 2
        Self::new(Complex64::new(0.0, modulus) * unit.conj())
    }

    /// Same direction, new modulus.
    pub fn with_modulus(&self, modulus: f64) -> Result<Self> {
        Self::new(self.k / self.modulus() * modulus)
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    pub fn modulus(&self) -> f64 {
        1.0 / self.h
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    /// `exp(conj(k w) - k w)`, the plane wave in the definition of `f`.
    pub fn plane_wave(&self, w: Complex64) -> Complex64 {
        Complex64::new(0.0, -self.phase(w)).exp()
    }

    /// Real phase `|k| Re(w conj(omega))` at any point of the plane.
    pub fn phase(&self, w: Complex64) -> f64 {
        self.modulus() * (w * self.omega.conj()).re
    }
}

fn dot(a: Complex64, b: Complex64) -> f64 {
    (a * b.conj()).re
}

/// `u0(t)`.
pub fn u0(curve: &BoundaryCurve, k: &SpectralParam, t: f64) -> f64 {
    k.phase(curve.point(t))
}

/// `(du0/dt, d2u0/dt2) = (|k| <gamma', omega>, |k| <gamma'', omega>)`.
pub fn u0_derivatives(curve: &BoundaryCurve, k: &SpectralParam, t: f64) -> (f64, f64) {
    let p = curve.eval(t);
    (
        k.modulus() * dot(p.dgamma, k.omega()),
        k.modulus() * dot(p.ddgamma, k.omega()),
    )
}

/// The two critical points of `u0`: the south pole `w-` (maximum) and the
/// north pole `w+` (minimum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleData {
    pub t_minus: f64,
    pub t_plus: f64,
    pub w_minus: Complex64,
    pub w_plus: Complex64,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub u0_minus: f64,
    pub u0_plus: f64,
    pub u0pp_minus: f64,
    pub u0pp_plus: f64,
    modulus: f64,
}

impl PoleData {
    /// Same poles for another `|k|` along the same ray; only the phase values scale.
    pub fn with_modulus(&self, modulus: f64) -> Self {
        let r = modulus / self.modulus;
        Self {
            u0_minus: self.u0_minus * r,
            u0_plus: self.u0_plus * r,
            u0pp_minus: self.u0pp_minus * r,
            u0pp_plus: self.u0pp_plus * r,
            modulus,
            ..*self
        }
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn points(&self) -> [Complex64; 2] {
        [self.w_plus, self.w_minus]
    }

    /// Euclidean distance from `w` to the nearer pole.
    pub fn distance(&self, w: Complex64) -> f64 {
        (w - self.w_plus).norm().min((w - self.w_minus).norm())
    }
}

/// Locates the poles by a sign-change scan of `<gamma', omega>`, bisection and one Newton polish.
pub fn find_poles(curve: &BoundaryCurve, k: &SpectralParam) -> Result<PoleData> {
    let length = curve.length();
    let count = 256.max(8 * curve.max_mode());
    let (_, dg) = curve.sample_uniform(count);
    let omega = k.omega();
    let g: Vec<f64> = dg.iter().map(|d| dot(*d, omega)).collect();
    let h = length / count as f64;

    let mut roots = Vec::new();
    for j in 0..count {
        let (ga, gb) = (g[j], g[(j + 1) % count]);
        if ga == 0.0 {
            roots.push(j as f64 * h);
        } else if ga * gb < 0.0 {
            roots.push(bisect(curve, omega, j as f64 * h, (j + 1) as f64 * h, ga));
        }
    }
    if roots.len() != 2 {
        return Err(Error::PoleCount { found: roots.len() });
    }

    let mut t_minus = None;
    let mut t_plus = None;
    for t in roots {
        let p = curve.eval(t);
        let gp = dot(p.ddgamma, omega);
        let t = curve.wrap(t - dot(p.dgamma, omega) / gp);
        if gp > 0.0 {
            t_plus = Some(t);
        } else if gp < 0.0 {
            t_minus = Some(t);
        }
    }
    let (Some(t_minus), Some(t_plus)) = (t_minus, t_plus) else {
        return Err(Error::PoleCount { found: 1 });
    };
    let (pm, pp) = (curve.eval(t_minus), curve.eval(t_plus));
    let modulus = k.modulus();
    Ok(PoleData {
        t_minus,
        t_plus,
        w_minus: pm.gamma,
        w_plus: pp.gamma,
        kappa_minus: pm.curvature(),
        kappa_plus: pp.curvature(),
        u0_minus: k.phase(pm.gamma),
        u0_plus: k.phase(pp.gamma),
        u0pp_minus: modulus * dot(pm.ddgamma, omega),
        u0pp_plus: modulus * dot(pp.ddgamma, omega),
        modulus,
    })
}

fn bisect(curve: &BoundaryCurve, omega: Complex64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        let gm = dot(curve.tangent(m), omega);
        if gm == 0.0 {
            return m;
        }
        if ga * gm < 0.0 {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
    }
    0.5 * (a + b)
}

/// Open parameter interval `(start, end)` taken modulo the curve length; `end > start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamInterval {
    pub start: f64,
    pub end: f64,
}

impl ParamInterval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Whether `t` (mod `period`) lies strictly inside.
    pub fn contains(&self, t: f64, period: f64) -> bool {
        let shifted = self.start + (t - self.start).rem_euclid(period);
        shifted > self.start && shifted < self.end
    }
}

/// `Gamma_+` runs from `w-` to `w+` in the positive direction, `Gamma_-` from `w+` back to `w-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySplit {
    pub gamma_plus: ParamInterval,
    pub gamma_minus: ParamInterval,
}

pub fn split_boundary(curve: &BoundaryCurve, poles: &PoleData) -> BoundarySplit {
    let length = curve.length();
    let plus_len = (poles.t_plus - poles.t_minus).rem_euclid(length);
    let plus = ParamInterval {
        start: poles.t_minus,
        end: poles.t_minus + plus_len,
    };
    let minus = ParamInterval {
        start: plus.end,
        end: poles.t_minus + length,
    };
    BoundarySplit {
        gamma_plus: plus,
        gamma_minus: minus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_circle, make_ellipse, DEFAULT_REPARAM_TOL};
    use std::f64::consts::{PI, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spectral_param_invariants() {
        for k in [c(1.0, 0.0), c(0.0, 1.0), c(30.0, 40.0), c(-1e-3, 2e-3)] {
            let sp = SpectralParam::new(k).unwrap();
            assert!((sp.omega().norm() - 2.0).abs() < 1e-15);
            assert!((sp.h() * k.norm() - 1.0).abs() < 1e-15);
            // exp(conj(k w) - k w) == exp(-i |k| Re(w conj(omega)))
            let w = c(0.3, -1.7);
            let direct = ((k * w).conj() - k * w).exp();
            assert!((direct - sp.plane_wave(w)).norm() < 1e-12);
        }
        assert!(matches!(SpectralParam::new(c(0.0, 0.0)), Err(Error::ZeroSpectralParameter)));
        let sp = SpectralParam::from_omega(c(2.0, 0.0), 5.0).unwrap();
        assert!((sp.omega() - c(2.0, 0.0)).norm() < 1e-15);
        assert!((sp.k() - c(0.0, 5.0)).norm() < 1e-15);
    }

    #[test]
    fn u0_on_unit_circle() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let curve = disk.boundary();
        // omega = 2 (k = i): u0 = 2 cos t
        let sp = SpectralParam::from_omega(c(1.0, 0.0), 1.0).unwrap();
        for t in [0.0, 0.4, 2.0, 5.5] {
            assert!((u0(curve, &sp, t) - 2.0 * t.cos()).abs() < 1e-14);
        }
        // omega = -2i (k = -1): u0 = -2 sin t
        let sp = SpectralParam::new(c(-1.0, 0.0)).unwrap();
        assert!((sp.omega() - c(0.0, -2.0)).norm() < 1e-15);
        assert!((u0(curve, &sp, 1.1) + 2.0 * 1.1f64.sin()).abs() < 1e-14);
        // doubling k doubles u0
        let sp2 = sp.with_modulus(2.0).unwrap();
        assert!((u0(curve, &sp2, 1.1) - 2.0 * u0(curve, &sp, 1.1)).abs() < 1e-14);
    }

    #[test]
    fn u0_derivatives_at_poles_and_by_finite_differences() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let sp = SpectralParam::from_omega(c(1.0, 0.0), 3.0).unwrap();
        let (d1, d2) = u0_derivatives(disk.boundary(), &sp, 0.0);
        assert!(d1.abs() < 1e-14 && (d2 + 6.0).abs() < 1e-13);
        let (d1, d2) = u0_derivatives(disk.boundary(), &sp, PI);
        assert!(d1.abs() < 1e-13 && (d2 - 6.0).abs() < 1e-13);

        let ell = make_ellipse(2.0, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        let sp = SpectralParam::new(c(0.6, -0.8)).unwrap();
        let eps = 1e-5;
        for t in [0.1, 1.3, 4.0, 7.7] {
            let f = |t| u0(ell.boundary(), &sp, t);
            let fd1 = (f(t + eps) - f(t - eps)) / (2.0 * eps);
            let fd2 = (f(t + eps) - 2.0 * f(t) + f(t - eps)) / (eps * eps);
            let (d1, d2) = u0_derivatives(ell.boundary(), &sp, t);
            assert!((d1 - fd1).abs() < 1e-6);
            assert!((d2 - fd2).abs() < 1e-4);
        }
    }

    #[test]
    fn disk_poles() {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let sp = SpectralParam::from_omega(c(1.0, 0.0), 1.0).unwrap();
        let poles = find_poles(disk.boundary(), &sp).unwrap();
        assert!((poles.w_minus - c(1.0, 0.0)).norm() < 1e-12);
        assert!((poles.w_plus - c(-1.0, 0.0)).norm() < 1e-12);
        // k = 1 gives omega = 2i: poles on the imaginary axis
        let sp = SpectralParam::new(c(1.0, 0.0)).unwrap();
        let poles = find_poles(disk.boundary(), &sp).unwrap();
        assert!((poles.w_minus - c(0.0, 1.0)).norm() < 1e-12);
        assert!((poles.w_plus - c(0.0, -1.0)).norm() < 1e-12);
        assert!((poles.u0_minus - 2.0).abs() < 1e-12 && (poles.u0_plus + 2.0).abs() < 1e-12);
    }

    #[test]
    fn ellipse_poles_match_normal_alignment() {
        let (a, b) = (2.0, 1.0);
        let ell = make_ellipse(a, b, DEFAULT_REPARAM_TOL).unwrap();
        let sp = SpectralParam::new(Complex64::from_polar(1.0, PI / 4.0)).unwrap();
        let poles = find_poles(ell.boundary(), &sp).unwrap();
        let om = sp.omega();
        // Outward normal (cos th / a, sin th / b) parallel to omega at the maximum.
        let th = (b * om.im).atan2(a * om.re);
        let expected = c(a * th.cos(), b * th.sin());
        assert!((poles.w_minus - expected).norm() < 1e-10);
        assert!((poles.w_plus + expected).norm() < 1e-10);
        for (t, pp, kappa) in [
            (poles.t_minus, poles.u0pp_minus, poles.kappa_minus),
            (poles.t_plus, poles.u0pp_plus, poles.kappa_plus),
        ] {
            assert!(u0_derivatives(ell.boundary(), &sp, t).0.abs() < 1e-10);
            assert!((pp.abs() / (2.0 * sp.modulus() * kappa) - 1.0).abs() < 1e-8);
        }
        assert!(poles.u0pp_plus > 0.0 && poles.u0pp_minus < 0.0);
        let samples: Vec<f64> = (0..4096)
            .map(|j| u0(ell.boundary(), &sp, j as f64 * ell.length() / 4096.0))
            .collect();
        let max = samples.iter().copied().fold(f64::MIN, f64::max);
        let min = samples.iter().copied().fold(f64::MAX, f64::min);
        assert!(poles.u0_minus >= max - 1e-12 && poles.u0_plus <= min + 1e-12);
    }

    #[test]
    fn split_signs() {
        let ell = make_ellipse(1.5, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        let sp = SpectralParam::new(c(3.0, 1.0)).unwrap();
        let poles = find_poles(ell.boundary(), &sp).unwrap();
        let split = split_boundary(ell.boundary(), &poles);
        assert!((split.gamma_plus.len() + split.gamma_minus.len() - ell.length()).abs() < 1e-12);
        for j in 1..200 {
            let t = split.gamma_plus.start + split.gamma_plus.len() * j as f64 / 200.0;
            assert!(u0_derivatives(ell.boundary(), &sp, t).0 < 0.0);
            assert!(split.gamma_plus.contains(t, ell.length()));
            let t = split.gamma_minus.start + split.gamma_minus.len() * j as f64 / 200.0;
            assert!(u0_derivatives(ell.boundary(), &sp, t).0 > 0.0);
            assert!(split.gamma_minus.contains(t + 3.0 * ell.length(), ell.length()));
        }
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let sp = SpectralParam::from_omega(c(1.0, 0.0), 1.0).unwrap();
        let split = split_boundary(disk.boundary(), &find_poles(disk.boundary(), &sp).unwrap());
        assert!(split.gamma_plus.start.abs() < 1e-12 && (split.gamma_plus.end - PI).abs() < 1e-12);
        assert!((split.gamma_minus.end - TAU).abs() < 1e-12);
    }

    #[test]
    fn poles_rotate_with_domain() {
        let ell = make_ellipse(2.0, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        let sp = SpectralParam::new(c(1.0, 2.0)).unwrap();
        let theta = 0.9;
        let rot = ell.boundary().rotated(theta);
        let sp_rot = SpectralParam::new(sp.k() * Complex64::from_polar(1.0, -theta)).unwrap();
        let p = find_poles(ell.boundary(), &sp).unwrap();
        let q = find_poles(&rot, &sp_rot).unwrap();
        let r = Complex64::from_polar(1.0, theta);
        assert!((q.w_plus - r * p.w_plus).norm() < 1e-10);
        assert!((q.w_minus - r * p.w_minus).norm() < 1e-10);
        assert!((q.t_plus - p.t_plus).abs() < 1e-9);
    }
}
