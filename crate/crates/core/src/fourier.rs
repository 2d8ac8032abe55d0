//! Truncated Fourier series of smooth periodic complex-valued functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// `f(t) = sum_{n=-m}^{m} c_n exp(2 pi i n t / period)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    /// Coefficients ordered from mode `-m` to mode `m`.
    coeffs: Vec<Complex64>,
    period: f64,
}

impl FourierSeries {
    pub fn new(coeffs: Vec<Complex64>, period: f64) -> Self {
        assert!(coeffs.len() % 2 == 1, "coefficient vector must be centred on mode 0");
        assert!(period > 0.0);
        Self { coeffs, period }
    }

    pub fn zero(max_mode: usize, period: f64) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); 2 * max_mode + 1], period)
    }

    /// Interpolating series through `values[j] = f(j * period / M)`.
    ///
    /// Modes with `|n| >= M/2` are discarded, so the Nyquist mode of an even
    /// sample count is dropped.
    pub fn from_samples(values: &[Complex64], period: f64) -> Self {
        let len = values.len();
        assert!(len >= 3);
        let mut buf = values.to_vec();
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let max_mode = (len - 1) / 2;
        let scale = 1.0 / len as f64;
        let coeffs = (-(max_mode as isize)..=max_mode as isize)
            .map(|n| buf[n.rem_euclid(len as isize) as usize] * scale)
            .collect();
        Self { coeffs, period }
    }

    pub fn max_mode(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `n` (zero outside the stored range).
    pub fn coeff(&self, n: isize) -> Complex64 {
        let m = self.max_mode() as isize;
        if n.abs() > m {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + m) as usize]
        }
    }

    pub fn coeff_mut(&mut self, n: isize) -> &mut Complex64 {
        let m = self.max_mode() as isize;
        assert!(n.abs() <= m);
        &mut self.coeffs[(n + m) as usize]
    }

    fn wavenumber(&self, n: isize) -> f64 {
        2.0 * PI * n as f64 / self.period
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let m = self.max_mode();
        let x = self.wavenumber(1) * t;
        let z = Complex64::new(x.cos(), x.sin());
        let zc = z.conj();
        // Horner on the non-negative and negative halves separately.
        let mut pos = Complex64::new(0.0, 0.0);
        for c in self.coeffs[m..].iter().rev() {
            pos = pos * z + c;
        }
        let mut neg = Complex64::new(0.0, 0.0);
        for c in self.coeffs[..m].iter() {
            neg = (neg + c) * zc;
        }
        pos + neg
    }

    /// Values of the series and its first `d` derivatives at `t`.
    pub fn eval_with_derivatives(&self, t: f64, d: usize) -> Vec<Complex64> {
        let m = self.max_mode() as isize;
        let x = self.wavenumber(1) * t;
        let z = Complex64::new(x.cos(), x.sin());
        let mut out = vec![Complex64::new(0.0, 0.0); d + 1];
        // Forward accumulation of z^n; |z| = 1 so the powers stay bounded.
        let mut zn = Complex64::new(1.0, 0.0);
        let mut zmn = Complex64::new(1.0, 0.0);
        let zc = z.conj();
        for n in 0..=m {
            for (sign, power) in [(1isize, zn), (-1isize, zmn)] {
                if n == 0 && sign < 0 {
                    continue;
                }
                let mode = sign * n;
                let term = self.coeff(mode) * power;
                let ik = Complex64::new(0.0, self.wavenumber(mode));
                let mut factor = Complex64::new(1.0, 0.0);
                for slot in out.iter_mut() {
                    *slot += term * factor;
                    factor *= ik;
                }
            }
            zn *= z;
            zmn *= zc;
        }
        out
    }

    pub fn derivative(&self, order: u32) -> Self {
        let m = self.max_mode() as isize;
        let coeffs = (-m..=m)
            .map(|n| {
                let ik = Complex64::new(0.0, self.wavenumber(n));
                self.coeff(n) * ik.powu(order)
            })
            .collect();
        Self {
            coeffs,
            period: self.period,
        }
    }

    /// Values at the `count` equispaced points `j * period / count`.
    pub fn sample_uniform(&self, count: usize) -> Vec<Complex64> {
        let m = self.max_mode();
        if count < 2 * m + 1 {
            let h = self.period / count as f64;
            return (0..count).map(|j| self.eval(j as f64 * h)).collect();
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); count];
        for n in -(m as isize)..=m as isize {
            buf[n.rem_euclid(count as isize) as usize] = self.coeff(n);
        }
        FftPlanner::new().plan_fft_inverse(count).process(&mut buf);
        buf
    }

    /// Same function with more (zero) modes.
    pub fn padded(&self, max_mode: usize) -> Self {
        let m = self.max_mode() as isize;
        let new_m = max_mode.max(self.max_mode()) as isize;
        let coeffs = (-new_m..=new_m)
            .map(|n| if n.abs() <= m { self.coeff(n) } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self {
            coeffs,
            period: self.period,
        }
    }

    /// Largest coefficient magnitude among modes with `|n| > fraction * m`.
    pub fn tail_magnitude(&self, fraction: f64) -> f64 {
        let m = self.max_mode() as isize;
        let cut = (fraction * m as f64) as isize;
        (-m..=m)
            .filter(|n| n.abs() > cut)
            .map(|n| self.coeff(n).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            period: self.period,
        }
    }

    /// Series of `conj(f(t))`.
    pub fn conj(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().rev().map(|c| c.conj()).collect(),
            period: self.period,
        }
    }

    /// Pointwise product computed on a grid fine enough to be alias-free.
    pub fn mul(&self, other: &Self) -> Self {
        let m = self.max_mode().max(other.max_mode());
        let count = (4 * m + 3).next_power_of_two();
        let a = self.sample_uniform(count);
        let b = other.sample_uniform(count);
        let prod: Vec<_> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let full = Self::from_samples(&prod, self.period);
        full.truncated(self.max_mode() + other.max_mode())
    }

    pub fn truncated(&self, max_mode: usize) -> Self {
        let m = max_mode.min(self.max_mode()) as isize;
        Self {
            coeffs: (-m..=m).map(|n| self.coeff(n)).collect(),
            period: self.period,
        }
    }
}

impl std::ops::Add for &FourierSeries {
    type Output = FourierSeries;

    fn add(self, rhs: &FourierSeries) -> FourierSeries {
        let m = self.max_mode().max(rhs.max_mode()) as isize;
        FourierSeries {
            coeffs: (-m..=m).map(|n| self.coeff(n) + rhs.coeff(n)).collect(),
            period: self.period,
        }
    }
}
