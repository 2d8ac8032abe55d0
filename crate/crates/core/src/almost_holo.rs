//! Almost holomorphic extensions of the boundary phase into a tubular band.
//!
//! Points near the boundary are written `w = gamma(t) + i s gamma'(t)`. Since
//! `gamma'' = i kappa gamma'`, a function `u(t, s)` is holomorphic in `w` iff
//!
//! ```text
//! T[u] = du/dt + i (1 - kappa(t) s) du/ds = 0,
//! ```
//!
//! and in general `d u / d conj(w) = gamma'(t) T[u] / (2 (1 - kappa s))`.
//! Writing `u = sum_j s^j u_j(t)` and matching powers of `s` gives
//! `u_{j+1} = (i u_j' + j kappa u_j) / (j + 1)`; truncating after `u_N`
//! leaves `T[u] = s^N (u_N' - i N kappa u_N)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::geometry::{BoundaryCurve, ConvexDomain};
use crate::phase::SpectralParam;

pub const DEFAULT_ORDER: usize = 4;
pub const MAX_ORDER: usize = 8;

/// Extension value and first partials at one tube point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeJet {
    pub t: f64,
    pub s: f64,
    pub w: Complex64,
    /// `dw/dt = gamma' (1 - kappa s)`.
    pub w_t: Complex64,
    /// `dw/ds = i gamma'`.
    pub w_s: Complex64,
    pub u: Complex64,
    pub u_t: Complex64,
    pub u_s: Complex64,
    pub kappa: f64,
}

impl TubeJet {
    /// Transport residual `u_t + i (1 - kappa s) u_s`.
    pub fn transport(&self) -> Complex64 {
        transport_operator(self.kappa, self.s, self.u_t, self.u_s)
    }

    /// `d u / d conj(w)` from the chain rule in `(t, s)`.
    pub fn dbar(&self) -> Complex64 {
        let gamma_dot = -Complex64::i() * self.w_s;
        gamma_dot * self.transport() / (2.0 * (1.0 - self.kappa * self.s))
    }

    /// `d u / d w` from the chain rule in `(t, s)`.
    pub fn d_w(&self) -> Complex64 {
        let gamma_dot = -Complex64::i() * self.w_s;
        let jac = 1.0 - self.kappa * self.s;
        gamma_dot.conj() * (self.u_t - Complex64::i() * jac * self.u_s) / (2.0 * jac)
    }
}

/// `f_t + i (1 - kappa s) f_s`.
pub fn transport_operator(kappa: f64, s: f64, f_t: Complex64, f_s: Complex64) -> Complex64 {
    f_t + Complex64::i() * (1.0 - kappa * s) * f_s
}

/// Point `w = gamma(t) + i s gamma'(t)` of the tubular neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubePoint {
    pub t: f64,
    pub s: f64,
    pub w: Complex64,
}

impl TubePoint {
    pub fn new(curve: &BoundaryCurve, t: f64, s: f64) -> Self {
        let p = curve.eval(t);
        Self {
            t,
            s,
            w: p.gamma + Complex64::new(0.0, s) * p.dgamma,
        }
    }
}

/// Half-width of the band in which normal coordinates are used.
pub fn band_half_width(domain: &ConvexDomain) -> f64 {
    (0.5 / domain.kappa_max()).min(0.2 * domain.length())
}

/// A smooth extension `u(t, s)` of the boundary phase, possibly only almost holomorphic.
pub trait PhaseExtension: Send + Sync {
    fn s_max(&self) -> f64;

    fn modulus(&self) -> f64;

    /// Jets at one `t` for several offsets `s`; shares the `t`-dependent work.
    fn jets_at(&self, t: f64, offsets: &[f64]) -> Result<Vec<TubeJet>>;

    fn jet(&self, t: f64, s: f64) -> Result<TubeJet> {
        Ok(self.jets_at(t, &[s])?[0])
    }

    fn check_band(&self, s: f64) -> Result<()> {
        if s.abs() > self.s_max() {
            Err(Error::OutOfBand {
                s,
                s_max: self.s_max(),
            })
        } else {
            Ok(())
        }
    }
}

/// Truncated extension `u = |k| sum_{j<=N} s^j v_j(t)`, with `v_j` stored for unit `|k|`.
#[derive(Debug, Clone)]
pub struct HoloExtension {
    order: usize,
    modulus: f64,
    s_max: f64,
    curve: BoundaryCurve,
    kappa: FourierSeries,
    coeffs: Vec<FourierSeries>,
    coeff_derivs: Vec<FourierSeries>,
}

impl HoloExtension {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient `u_j` (including the factor `|k|`) as a Fourier series.
    pub fn coeff(&self, j: usize) -> FourierSeries {
        self.coeffs[j].scale(Complex64::new(self.modulus, 0.0))
    }

    pub fn coeff_at(&self, j: usize, t: f64) -> Complex64 {
        self.coeffs[j].eval(t) * self.modulus
    }

    /// Same extension for another `|k|` on the ray; the coefficients are linear in `|k|`.
    pub fn with_modulus(&self, modulus: f64) -> Self {
        Self {
            modulus,
            ..self.clone()
        }
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }
}

impl PhaseExtension for HoloExtension {
    fn s_max(&self) -> f64 {
        self.s_max
    }

    fn modulus(&self) -> f64 {
        self.modulus
    }

    fn jets_at(&self, t: f64, offsets: &[f64]) -> Result<Vec<TubeJet>> {
        for &s in offsets {
            self.check_band(s)?;
        }
        let p = self.curve.eval(t);
        let kappa = self.kappa.eval(t).re;
        let vals: Vec<Complex64> = self.coeffs.iter().map(|c| c.eval(t)).collect();
        let ders: Vec<Complex64> = self.coeff_derivs.iter().map(|c| c.eval(t)).collect();
        let scale = self.modulus;
        Ok(offsets
            .iter()
            .map(|&s| {
                // Horner in s for u, u_t and u_s.
                let mut u = Complex64::new(0.0, 0.0);
                let mut u_t = Complex64::new(0.0, 0.0);
                let mut u_s = Complex64::new(0.0, 0.0);
                for j in (0..=self.order).rev() {
                    u = u * s + vals[j];
                    u_t = u_t * s + ders[j];
                    if j > 0 {
                        u_s = u_s * s + vals[j] * j as f64;
                    }
                }
                TubeJet {
                    t,
                    s,
                    w: p.gamma + Complex64::new(0.0, s) * p.dgamma,
                    w_t: p.dgamma * (1.0 - kappa * s),
                    w_s: Complex64::i() * p.dgamma,
                    u: u * scale,
                    u_t: u_t * scale,
                    u_s: u_s * scale,
                    kappa,
                }
            })
            .collect())
    }
}

/// Builds `u_0, ..., u_N` by the transport recursion, pseudo-spectrally in `t`.
pub fn extension_coeffs(
    domain: &ConvexDomain,
    k: &SpectralParam,
    order: usize,
) -> Result<HoloExtension> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidOrder(order));
    }
    let curve = domain.boundary().clone();
    let length = curve.length();
    let omega = k.omega();
    let gamma = curve.series();
    let m = gamma.max_mode() as isize;

    // u_0 / |k| = Re(gamma conj(omega)) = (gamma conj(omega) + conj(gamma) omega) / 2
    let mut v0 = FourierSeries::zero(m as usize, length);
    for n in -m..=m {
        *v0.coeff_mut(n) = 0.5 * (gamma.coeff(n) * omega.conj() + gamma.coeff(-n).conj() * omega);
    }

    let grid = (8 * m as usize + 64).next_power_of_two().max(256);
    let kappa_samples: Vec<Complex64> = curve
        .curvature_samples(grid)
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    let kappa = FourierSeries::from_samples(&kappa_samples, length);

    let mut coeffs = vec![v0.padded(grid / 2 - 1)];
    for j in 0..order {
        let prev = &coeffs[j];
        let dprev = prev.derivative(1).sample_uniform(grid);
        let vals = prev.sample_uniform(grid);
        let next: Vec<Complex64> = dprev
            .iter()
            .zip(&vals)
            .zip(&kappa_samples)
            .map(|((d, v), kap)| (Complex64::i() * d + kap * v * j as f64) / (j + 1) as f64)
            .collect();
        coeffs.push(FourierSeries::from_samples(&next, length));
    }
    let coeffs: Vec<FourierSeries> = coeffs.into_iter().map(|c| trim(&c)).collect();
    let coeff_derivs = coeffs.iter().map(|c| c.derivative(1)).collect();
    Ok(HoloExtension {
        order,
        modulus: k.modulus(),
        s_max: band_half_width(domain),
        curve,
        kappa: trim(&kappa),
        coeffs,
        coeff_derivs,
    })
}

fn trim(series: &FourierSeries) -> FourierSeries {
    let scale = series.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let m = series.max_mode() as isize;
    let keep = (1..=m)
        .rev()
        .find(|&n| series.coeff(n).norm().max(series.coeff(-n).norm()) > 1e-17 * scale)
        .unwrap_or(1) as usize;
    series.truncated(keep)
}

/// `u(t, s)`; at `s = 0` this is exactly the series of `u_0`.
pub fn eval_u(ext: &dyn PhaseExtension, t: f64, s: f64) -> Result<Complex64> {
    Ok(ext.jet(t, s)?.u)
}

/// `d u / d conj(w)` at the tube point `(t, s)`.
pub fn dbar_residual(ext: &dyn PhaseExtension, t: f64, s: f64) -> Result<Complex64> {
    Ok(ext.jet(t, s)?.dbar())
}

/// Exact holomorphic extension for a circle, via its Schwarz function
/// `S(w) = c_bar + R^2 / (w - c)`: `u(w) = |k| (w conj(omega) + S(w) omega) / 2`.
#[derive(Debug, Clone)]
pub struct SchwarzCircleExtension {
    center: Complex64,
    radius: f64,
    omega: Complex64,
    modulus: f64,
    s_max: f64,
    curve: BoundaryCurve,
}

impl SchwarzCircleExtension {
    /// Fails unless the domain is a circle to within `1e-10` relative.
    pub fn new(domain: &ConvexDomain, k: &SpectralParam) -> Result<Self> {
        let curve = domain.boundary().clone();
        let length = curve.length();
        let radius = length / std::f64::consts::TAU;
        let center = curve.series().coeff(0);
        let deviation = (0..256)
            .map(|j| ((curve.point(j as f64 * length / 256.0) - center).norm() - radius).abs())
            .fold(0.0, f64::max);
        if deviation > 1e-10 * radius {
            return Err(Error::InvalidDomain(format!(
                "Schwarz extension needs a circle (radial deviation {deviation:e})"
            )));
        }
        Ok(Self {
            center,
            radius,
            omega: k.omega(),
            modulus: k.modulus(),
            s_max: band_half_width(domain),
            curve,
        })
    }

    /// `u` and `du/dw` at an arbitrary point off the centre.
    pub fn eval_w(&self, w: Complex64) -> (Complex64, Complex64) {
        let z = w - self.center;
        let r2 = self.radius * self.radius;
        let shift = self.modulus * (self.center * self.omega.conj()).re;
        let u = 0.5 * self.modulus * (z * self.omega.conj() + r2 * self.omega / z) + shift;
        let du = 0.5 * self.modulus * (self.omega.conj() - r2 * self.omega / (z * z));
        (u, du)
    }

    pub fn with_modulus(&self, modulus: f64) -> Self {
        Self {
            modulus,
            ..self.clone()
        }
    }
}

impl PhaseExtension for SchwarzCircleExtension {
    fn s_max(&self) -> f64 {
        self.s_max
    }

    fn modulus(&self) -> f64 {
        self.modulus
    }

    fn jets_at(&self, t: f64, offsets: &[f64]) -> Result<Vec<TubeJet>> {
        let p = self.curve.eval(t);
        let kappa = 1.0 / self.radius;
        offsets
            .iter()
            .map(|&s| {
                self.check_band(s)?;
                let w = p.gamma + Complex64::new(0.0, s) * p.dgamma;
                let w_t = p.dgamma * (1.0 - kappa * s);
                let w_s = Complex64::i() * p.dgamma;
                let (u, du) = self.eval_w(w);
                Ok(TubeJet {
                    t,
                    s,
                    w,
                    w_t,
                    w_s,
                    u,
                    u_t: du * w_t,
                    u_s: du * w_s,
                    kappa,
                })
            })
            .collect()
    }
}
