//! Uniform discretization of the ring `θ ∈ [0, 2π)` and its Fourier transforms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Periodic grid with cached FFT plans. Cloning is cheap.
#[derive(Clone)]
pub struct RingGrid {
    n_points: usize,
    theta: Arc<[f64]>,
    wavenumbers: Arc<[f64]>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for RingGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RingGrid")
            .field("n_points", &self.n_points)
            .finish()
    }
}

impl PartialEq for RingGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_points == other.n_points
    }
}

impl RingGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(invalid(
                "n_points",
                format!("must be a power of two >= 8, got {n_points}"),
            ));
        }
        let d_theta = 2.0 * PI / n_points as f64;
        let theta: Arc<[f64]> = (0..n_points).map(|j| j as f64 * d_theta).collect();
        let half = (n_points / 2) as i64;
        let wavenumbers: Arc<[f64]> = (0..n_points as i64)
            .map(|j| if j < half { j } else { j - n_points as i64 } as f64)
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            n_points,
            theta,
            wavenumbers,
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        })
    }

    /// Grid for modes up to `l_max`, checking the anti-aliasing margin.
    pub fn for_modes(n_points: usize, l_max: usize) -> Result<Self> {
        if n_points < 8 * l_max {
            return Err(Error::GridTooCoarse { n_points, l_max });
        }
        Self::new(n_points)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn d_theta(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Signed integer wavenumbers in FFT order `0, 1, …, n/2-1, -n/2, …, -1`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// FFT-order index holding momentum `l`, if the grid resolves it.
    pub fn index_of(&self, l: i64) -> Option<usize> {
        let n = self.n_points as i64;
        if l >= n / 2 || l < -n / 2 {
            return None;
        }
        Some(l.rem_euclid(n) as usize)
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    /// Unnormalized forward transform `Σ_j f_j e^{-ikθ_j}`.
    pub fn fft_forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Unnormalized inverse transform; `fft_inverse ∘ fft_forward = n_points · id`.
    pub fn fft_inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
    }

    /// Momentum amplitudes `⟨l|f⟩` with `|l⟩ = e^{ilθ}/√(2π)`, in FFT order.
    pub fn momentum_amplitudes(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        let mut scratch = self.scratch();
        self.fft_forward(&mut buf, &mut scratch);
        let scale = (2.0 * PI).sqrt() / self.n_points as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Inverse of [`momentum_amplitudes`](Self::momentum_amplitudes).
    pub fn from_momentum_amplitudes(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut buf = amps.to_vec();
        let mut scratch = self.scratch();
        self.fft_inverse(&mut buf, &mut scratch);
        let scale = 1.0 / (2.0 * PI).sqrt();
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// `⟨f|h⟩ = ∫ f* h dθ` by the (spectrally exact) rectangle rule.
    pub fn inner(&self, f: &[Complex64], h: &[Complex64]) -> Complex64 {
        f.iter().zip(h).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.d_theta()
    }

    pub fn norm_sqr(&self, f: &[Complex64]) -> f64 {
        f.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.d_theta()
    }

    /// Spectral first derivative `∂_θ f`.
    pub fn derivative(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        let mut scratch = self.scratch();
        self.fft_forward(&mut buf, &mut scratch);
        let n = self.n_points;
        for (c, &k) in buf.iter_mut().zip(self.wavenumbers.iter()) {
            // The Nyquist coefficient has no odd partner; drop it.
            let k = if k == -((n / 2) as f64) { 0.0 } else { k };
            *c *= Complex64::new(0.0, k / n as f64);
        }
        self.fft_inverse(&mut buf, &mut scratch);
        buf
    }
}
