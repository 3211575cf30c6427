//! FFT helpers for real periodic fields on the unit interval.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse transforms of a fixed length, shareable across threads.
#[derive(Clone)]
pub struct Fft1d {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft1d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft1d").field("len", &self.len).finish()
    }
}

impl Fft1d {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Signed integer wave number of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.len / 2 {
            j as i64
        } else {
            j as i64 - self.len as i64
        }
    }

    fn is_nyquist(&self, j: usize) -> bool {
        self.len % 2 == 0 && j == self.len / 2
    }

    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.len, "field length mismatch");
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform keeping the real part, normalized by `1/N`.
    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        assert_eq!(spec.len(), self.len, "spectrum length mismatch");
        self.inverse.process(&mut spec);
        let scale = 1.0 / self.len as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    /// Multiplies each mode by `multiplier(k)` (a real, even symbol).
    pub fn filter<F>(&self, x: &[f64], multiplier: F) -> Vec<f64>
    where
        F: Fn(i64) -> f64,
    {
        let mut spec = self.forward(x);
        for (j, c) in spec.iter_mut().enumerate() {
            *c *= multiplier(self.wavenumber(j));
        }
        self.inverse_real(spec)
    }

    /// `d/dx` on the unit torus, scaled by `multiplier(k)`. The Nyquist
    /// mode is dropped since its derivative is not representable.
    pub fn filtered_derivative<F>(&self, x: &[f64], multiplier: F) -> Vec<f64>
    where
        F: Fn(i64) -> f64,
    {
        let mut spec = self.forward(x);
        for (j, c) in spec.iter_mut().enumerate() {
            if self.is_nyquist(j) {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let k = self.wavenumber(j);
            *c *= Complex64::new(0.0, 2.0 * PI * k as f64) * multiplier(k);
        }
        self.inverse_real(spec)
    }

    pub fn derivative(&self, x: &[f64]) -> Vec<f64> {
        self.filtered_derivative(x, |_| 1.0)
    }

    /// Energy `|c_k|^2 + |c_-k|^2` per mode `k = 0..=N/2`.
    pub fn mode_energies(&self, x: &[f64]) -> Vec<f64> {
        let spec = self.forward(x);
        let half = self.len / 2;
        (0..=half)
            .map(|k| {
                let mut e = spec[k].norm_sqr();
                if k != 0 && !self.is_nyquist(k) {
                    e += spec[self.len - k].norm_sqr();
                }
                e
            })
            .collect()
    }
}

/// Cell-center coordinates of a uniform grid on `[0, 1)`.
pub fn cell_centers(n: usize) -> Vec<f64> {
    (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect()
}

/// Coefficients `(a, b)` of `a cos(2 pi k x) + b sin(2 pi k x)` in a
/// cell-centered field, by discrete projection.
pub fn mode_coefficients(x: &[f64], k: i64) -> (f64, f64) {
    let n = x.len() as f64;
    let (mut a, mut b) = (0.0, 0.0);
    for (j, v) in x.iter().enumerate() {
        let arg = 2.0 * PI * k as f64 * (j as f64 + 0.5) / n;
        a += v * arg.cos();
        b += v * arg.sin();
    }
    (2.0 * a / n, 2.0 * b / n)
}

/// Fraction of the non-mean energy of `x` carried by modes other than `k`.
pub fn off_mode_energy_fraction(fft: &Fft1d, x: &[f64], k: usize) -> f64 {
    let e = fft.mode_energies(x);
    let total: f64 = e.iter().skip(1).sum();
    if total == 0.0 {
        return 0.0;
    }
    let seed = e.get(k).copied().unwrap_or(0.0);
    (total - seed) / total
}
