//! Trigonometric interpolation of periodic samples.
//!
//! A [`Spectrum`] holds the Fourier coefficients of the unique trigonometric
//! polynomial of degree <= N/2 through N equispaced samples, with the Nyquist
//! coefficient split evenly between +N/2 and -N/2 so that real data yields a
//! real interpolant. Coefficients below 1e-16 of the largest one are dropped,
//! which keeps evaluation cheap for band-limited data.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

const TRUNCATION: f64 = 2e-15;

/// Forward/inverse FFT plans for one grid size.
#[derive(Clone)]
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FftPair(len={})", self.forward.len())
    }
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Normalized DFT coefficients `C_k = (1/N) sum_j s_j e^{-2 pi i jk/N}`.
    pub fn coefficients(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / buf.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Inverse of [`FftPair::coefficients`].
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf
    }
}

/// Signed wavenumber of DFT slot `k` for an `n`-point transform (Nyquist maps to 0
/// when differentiating, see [`derivative_samples`]).
fn signed_mode(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Spectral derivative of periodic samples on a grid of period `length`.
pub fn derivative_samples(fft: &FftPair, samples: &[Complex64], length: f64) -> Vec<Complex64> {
    let n = samples.len();
    let mut c = fft.coefficients(samples);
    let omega = 2.0 * PI / length;
    for (k, ck) in c.iter_mut().enumerate() {
        if n.is_multiple_of(2) && k == n / 2 {
            *ck = Complex64::new(0.0, 0.0);
        } else {
            *ck *= Complex64::new(0.0, omega * signed_mode(k, n) as f64);
        }
    }
    fft.synthesize(&c)
}

/// Coefficients of the trigonometric interpolant, evaluable anywhere on the line.
#[derive(Clone, Debug)]
pub struct Spectrum {
    length: f64,
    /// c_0, c_1, ..., c_K
    pos: Vec<Complex64>,
    /// c_{-1}, c_{-2}, ..., c_{-K}
    neg: Vec<Complex64>,
    /// Coefficients are Hermitian (real samples).
    real: bool,
}

impl Spectrum {
    pub fn from_samples(fft: &FftPair, samples: &[Complex64], length: f64) -> Self {
        let n = samples.len();
        let c = fft.coefficients(samples);
        let half = n / 2;
        let mut pos = vec![Complex64::new(0.0, 0.0); half + 1];
        let mut neg = vec![Complex64::new(0.0, 0.0); half];
        for (k, &ck) in c.iter().enumerate() {
            if n.is_multiple_of(2) && k == half {
                pos[half] += 0.5 * ck;
                neg[half - 1] += 0.5 * ck;
            } else if k <= half {
                pos[k] = ck;
            } else {
                neg[n - k - 1] = ck;
            }
        }
        let real = samples.iter().all(|z| z.im == 0.0);
        let mut s = Self { length, pos, neg, real };
        s.truncate();
        s
    }

    fn truncate(&mut self) {
        let peak = self
            .pos
            .iter()
            .chain(self.neg.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let cut = peak * TRUNCATION;
        let mut kmax = 0;
        for k in 1..self.pos.len() {
            let n = self.neg.get(k - 1).map_or(0.0, |c| c.norm());
            if self.pos[k].norm() > cut || n > cut {
                kmax = k;
            }
        }
        self.pos.truncate(kmax + 1);
        self.neg.truncate(kmax);
    }

    /// Highest retained wavenumber.
    pub fn bandwidth(&self) -> usize {
        self.pos.len() - 1
    }

    pub fn mean(&self) -> Complex64 {
        self.pos[0]
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let theta = 2.0 * PI * x / self.length;
        let z = Complex64::new(theta.cos(), theta.sin());
        let zc = z.conj();
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.pos.iter().rev() {
            acc = acc * z + c;
        }
        let mut accn = Complex64::new(0.0, 0.0);
        for c in self.neg.iter().rev() {
            accn = accn * zc + c;
        }
        acc + accn * zc
    }

    pub fn eval_re(&self, x: f64) -> f64 {
        if !self.real {
            return self.eval(x).re;
        }
        let theta = 2.0 * PI * x / self.length;
        let z = Complex64::new(theta.cos(), theta.sin());
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.pos.iter().rev() {
            acc = acc * z + c;
        }
        2.0 * acc.re - self.pos[0].re
    }

    /// Spectrum of the derivative of the interpolant.
    pub fn derivative(&self) -> Spectrum {
        let omega = 2.0 * PI / self.length;
        let pos = self
            .pos
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::new(0.0, omega * k as f64))
            .collect();
        let neg = self
            .neg
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::new(0.0, -omega * (k + 1) as f64))
            .collect();
        Spectrum {
            length: self.length,
            pos,
            neg,
            real: self.real,
        }
    }

    /// Periodic antiderivative of the mean-free part (zero mean).
    pub fn periodic_antiderivative(&self) -> Spectrum {
        let omega = 2.0 * PI / self.length;
        let mut pos: Vec<Complex64> = self
            .pos
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c / Complex64::new(0.0, omega * k as f64)
                }
            })
            .collect();
        pos[0] = Complex64::new(0.0, 0.0);
        let neg = self
            .neg
            .iter()
            .enumerate()
            .map(|(k, c)| c / Complex64::new(0.0, -omega * (k + 1) as f64))
            .collect();
        Spectrum {
            length: self.length,
            pos,
            neg,
            real: self.real,
        }
    }
}

/// Cardinal function of node `x_j` for the even-N symmetric trigonometric
/// interpolant, evaluated at offset `y - x_j` on a grid of period `length`.
pub fn cardinal(n: usize, length: f64, offset: f64) -> f64 {
    let theta = 2.0 * PI * offset / length;
    let half = 0.5 * theta;
    let s = half.sin();
    let nf = n as f64;
    if s.abs() < 1e-13 {
        (0.5 * nf * theta).cos() * half.cos() * half.cos()
    } else {
        (0.5 * nf * theta).sin() * half.cos() / (nf * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize, l: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * l / n as f64).collect()
    }

    #[test]
    fn reproduces_trig_polynomial_off_grid() {
        let n = 32;
        let l = 3.0;
        let fft = FftPair::new(n);
        let f = |x: f64| {
            let t = 2.0 * PI * x / l;
            1.0 + (3.0 * t).cos() - 0.5 * (7.0 * t).sin() + 0.25 * (16.0 * t).cos()
        };
        let samples: Vec<Complex64> = grid(n, l).iter().map(|&x| f(x).into()).collect();
        let s = Spectrum::from_samples(&fft, &samples, l);
        for &x in &[0.013, 0.77, 1.5, 2.999] {
            assert_abs_diff_eq!(s.eval_re(x), f(x), epsilon = 1e-13);
            assert!(s.eval(x).im.abs() < 1e-13);
        }
    }

    #[test]
    fn cardinal_matches_spectrum() {
        let n = 16;
        let l = 2.0 * PI;
        let fft = FftPair::new(n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[3] = Complex64::new(1.0, 0.0);
        let s = Spectrum::from_samples(&fft, &e, l);
        let xj = 3.0 * l / n as f64;
        for &y in &[0.0, 0.4, xj, 2.2, 5.9] {
            assert_abs_diff_eq!(s.eval_re(y), cardinal(n, l, y - xj), epsilon = 1e-13);
        }
    }

    #[test]
    fn derivative_of_exponential() {
        let n = 64;
        let l = 2.0 * PI;
        let fft = FftPair::new(n);
        let samples: Vec<Complex64> = grid(n, l).iter().map(|&x| Complex64::new(0.0, 3.0 * x).exp()).collect();
        let d = derivative_samples(&fft, &samples, l);
        assert_abs_diff_eq!(d[0].re, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d[0].im, 3.0, epsilon = 1e-10);
        let sd = Spectrum::from_samples(&fft, &samples, l).derivative();
        let v = sd.eval(0.3);
        let want = Complex64::new(0.0, 3.0) * Complex64::new(0.0, 0.9).exp();
        assert_abs_diff_eq!((v - want).norm(), 0.0, epsilon = 1e-10);
    }
}
