//! FFT helpers and real trigonometric series on the circle.

use crate::real::{cis, Cx, Real};
use crate::ConfError;
use num_complex::Complex;
use rustfft::FftPlanner;

/// In-place forward DFT, `X_k = sum_j x_j e^{-2 pi i jk/N}`.
pub fn fft<T: Real>(x: &mut [Cx<T>]) {
    if x.is_empty() {
        return;
    }
    FftPlanner::<T>::new().plan_fft_forward(x.len()).process(x);
}

/// In-place inverse DFT without the `1/N` factor.
pub fn ifft<T: Real>(x: &mut [Cx<T>]) {
    if x.is_empty() {
        return;
    }
    FftPlanner::<T>::new().plan_fft_inverse(x.len()).process(x);
}

/// Uniform grid `2 pi j / n`.
pub fn grid<T: Real>(n: usize) -> Vec<T> {
    (0..n).map(|j| T::two_pi() * T::lit(j as f64) / T::lit(n as f64)).collect()
}

/// Real `2 pi`-periodic function `mean + 2 Re sum_{m >= 1} modes[m-1] e^{i m theta}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries<T> {
    pub mean: T,
    pub modes: Vec<Cx<T>>,
}

impl<T: Real> TrigSeries<T> {
    pub fn zero() -> Self {
        TrigSeries { mean: T::zero(), modes: Vec::new() }
    }

    /// Interpolant of samples on the uniform grid; the Nyquist mode is dropped.
    pub fn from_samples(samples: &[T]) -> Self {
        let n = samples.len();
        let mut buf: Vec<Cx<T>> = samples.iter().map(|&s| Complex::new(s, T::zero())).collect();
        fft(&mut buf);
        let inv = T::one() / T::lit(n as f64);
        let top = if n % 2 == 0 { n / 2 - 1 } else { n / 2 };
        let modes = (1..=top).map(|k| buf[k] * inv).collect();
        TrigSeries { mean: buf[0].re * inv, modes }
    }

    /// Drops trailing modes below `tol` relative to the largest.
    pub fn trimmed(mut self, tol: T) -> Self {
        let peak = self.modes.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a.max(b)).sqrt();
        while let Some(last) = self.modes.last() {
            if last.norm_sqr().sqrt() <= tol * peak {
                self.modes.pop();
            } else {
                break;
            }
        }
        self
    }

    pub fn eval(&self, theta: T) -> T {
        let step = cis(theta);
        let mut e = step;
        let mut acc = Complex::new(T::zero(), T::zero());
        for &c in &self.modes {
            acc += c * e;
            e *= step;
        }
        self.mean + T::lit(2.0) * acc.re
    }

    pub fn deriv(&self, theta: T) -> T {
        let step = cis(theta);
        let mut e = step;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (k, &c) in self.modes.iter().enumerate() {
            acc += c * e * T::lit((k + 1) as f64);
            e *= step;
        }
        // d/dtheta 2 Re(c e^{i m theta}) = 2 Re(i m c e^{i m theta}) = -2 m Im(c e^{i m theta})
        -T::lit(2.0) * acc.im
    }

    /// Values on the uniform `n`-point grid by an inverse FFT with aliasing folded in.
    pub fn samples(&self, n: usize) -> Vec<T> {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        buf[0] = Complex::new(self.mean, T::zero());
        for (k, &c) in self.modes.iter().enumerate() {
            let m = k + 1;
            buf[m % n] += c;
            buf[(n - m % n) % n] += c.conj();
        }
        ifft(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Solves `x + self(x) = theta` by Newton iteration, returning `x` and `1/(1 + self'(x))`.
    pub fn invert_shift(&self, theta: T) -> Result<(T, T), ConfError> {
        let mut x = theta - self.mean;
        for _ in 0..60 {
            let d = T::one() + self.deriv(x);
            if !(d > T::zero()) {
                return Err(ConfError::Domain("angle map is not increasing".into()));
            }
            let step = (x + self.eval(x) - theta) / d;
            x -= step;
            if step.abs() < T::lit(1e-15) * (T::one() + theta.abs()) {
                return Ok((x, T::one() / (T::one() + self.deriv(x))));
            }
        }
        Err(ConfError::Solver { residual: (x + self.eval(x) - theta).abs().f64(), detail: "circle inverse".into() })
    }
}

/// Harmonic conjugate on the uniform grid: the imaginary part of the boundary
/// values of the holomorphic function in the disc whose real part has these
/// samples and whose value at 0 is real.
pub fn conjugate<T: Real>(samples: &[T]) -> Vec<T> {
    let n = samples.len();
    let mut buf: Vec<Cx<T>> = samples.iter().map(|&s| Complex::new(s, T::zero())).collect();
    fft(&mut buf);
    let inv = T::one() / T::lit(n as f64);
    // keep 2 c_k e^{ik theta} for 0 < k < n/2 and drop the rest
    for (k, b) in buf.iter_mut().enumerate() {
        *b = if k == 0 || 2 * k >= n { Complex::new(T::zero(), T::zero()) } else { *b * inv * T::lit(2.0) };
    }
    ifft(&mut buf);
    buf.into_iter().map(|z| z.im).collect()
}
