//! Chebyshev type I lowpass design and zero-phase decimation.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::Complex;
// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

pub const DECIMATION_ORDER: usize = 6;
pub const DECIMATION_RIPPLE_DB: f64 = 0.05;
/// Cutoff as a fraction of the decimated Nyquist frequency.
pub const DECIMATION_CUTOFF: f64 = 0.8;

/// Transposed direct form II biquad, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Filter state for a constant input `level` held forever.
    fn steady_state(&self, level: f64) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = (self.b[2] - self.a[1] * g) * level;
        let z1 = (self.b[1] - self.a[0] * g) * level + z2;
        [z1, z2]
    }

    pub fn response(&self, omega: f64) -> Complex<f64> {
        let z1 = Complex::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (z1 * self.b[1] + z2 * self.b[2] + self.b[0]) / (z1 * self.a[0] + z2 * self.a[1] + 1.0)
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Chebyshev type I lowpass of even `order` with `ripple_db` passband
    /// ripple and edge `cutoff` in radians/sample, via the bilinear
    /// transform. Each section is scaled to unit DC gain.
    pub fn chebyshev1_lowpass(order: usize, ripple_db: f64, cutoff: f64) -> Result<Self> {
        if order == 0 || !order.is_multiple_of(2) {
            return Err(Error::InvalidConfig("filter order must be even and positive"));
        }
        if !(cutoff > 0.0 && cutoff < PI) {
            return Err(Error::InvalidConfig("cutoff must lie in (0, π)"));
        }
        let eps = (10f64.powf(ripple_db / 10.0) - 1.0).sqrt();
        let mu = (1.0 / eps).asinh() / order as f64;
        let warped = 2.0 * (cutoff / 2.0).tan();
        let sections = (1..=order / 2)
            .map(|k| {
                let theta = PI * (2 * k - 1) as f64 / (2 * order) as f64;
                let s = Complex::new(-mu.sinh() * theta.sin(), mu.cosh() * theta.cos()) * warped;
                let z = (Complex::new(2.0, 0.0) + s) / (Complex::new(2.0, 0.0) - s);
                let a = [-2.0 * z.re, z.norm_sqr()];
                let g = (1.0 + a[0] + a[1]) / 4.0;
                Biquad { b: [g, 2.0 * g, g], a }
            })
            .collect();
        Ok(Self { sections })
    }

    pub fn response(&self, omega: f64) -> Complex<f64> {
        self.sections.iter().fold(Complex::new(1.0, 0.0), |acc, s| acc * s.response(omega))
    }

    /// Causal filtering starting from the steady state for `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut level = x.first().copied().unwrap_or(0.0);
        for s in &self.sections {
            let [mut z1, mut z2] = s.steady_state(level);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * out + z2;
                z2 = s.b[2] * input - s.a[1] * out;
                *v = out;
            }
            level *= s.dc_gain();
        }
        y
    }

    /// Forward-backward (zero-phase) filtering with odd reflection padding
    /// at both ends.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        if x.len() < 2 {
            return x.to_vec();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(x.len() - 1);
        let (first, last) = (x[0], x[x.len() - 1]);
        let mut ext = Vec::with_capacity(x.len() + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[x.len() - 1 - i]));
        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y[pad..pad + x.len()].to_vec()
    }
}

/// Lowpass for decimation by `factor`: edge at 0.8 of the new Nyquist.
pub fn decimation_filter(factor: usize) -> Result<Sos> {
    Sos::chebyshev1_lowpass(
        DECIMATION_ORDER,
        DECIMATION_RIPPLE_DB,
        PI * DECIMATION_CUTOFF / factor as f64,
    )
}

/// Zero-phase lowpass then keep every `factor`-th sample. Returns the
/// decimated samples and the new sample rate.
pub fn decimate(signal: &[f64], sample_rate: f64, factor: usize) -> Result<(Vec<f64>, f64)> {
    if factor == 0 {
        return Err(Error::InvalidFactor(factor));
    }
    if factor == 1 {
        return Ok((signal.to_vec(), sample_rate));
    }
    let filtered = decimation_filter(factor)?.filtfilt(signal);
    let out = filtered.into_iter().step_by(factor).collect();
    Ok((out, sample_rate / factor as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Closed-form squared magnitude of the bilinear-transformed
    /// Chebyshev I response, scaled to unit DC gain (even order).
    fn chebyshev_oracle_db(omega: f64, cutoff: f64) -> f64 {
        let eps2 = 10f64.powf(DECIMATION_RIPPLE_DB / 10.0) - 1.0;
        let x = (omega / 2.0).tan() / (cutoff / 2.0).tan();
        let n = DECIMATION_ORDER as f64;
        let t = if x <= 1.0 { (n * x.acos()).cos() } else { (n * x.acosh()).cosh() };
        let mag2 = (1.0 + eps2) / (1.0 + eps2 * t * t);
        10.0 * mag2.log10()
    }

    #[test]
    fn design_matches_closed_form() {
        let r = 4;
        let sos = decimation_filter(r).unwrap();
        let cutoff = PI * 0.8 / r as f64;
        for i in 1..100 {
            let w = PI * i as f64 / 100.0;
            let got = 20.0 * sos.response(w).norm().log10();
            let want = chebyshev_oracle_db(w, cutoff);
            assert!((got - want).abs() < 1e-6 * want.abs().max(1.0), "w={w}: {got} vs {want}");
        }
        assert!((sos.response(0.0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_and_rate() {
        let (y, rate) = decimate(&vec![0.1; 1000], 44100.0, 4).unwrap();
        assert_eq!(y.len(), 250);
        assert_eq!(rate, 11025.0);
        let (y, _) = decimate(&vec![0.1; 1001], 44100.0, 4).unwrap();
        assert_eq!(y.len(), 251);
        assert_eq!(decimate(&[1.0, 2.0], 100.0, 1).unwrap(), (vec![1.0, 2.0], 100.0));
        assert_eq!(decimate(&[1.0], 100.0, 0), Err(Error::InvalidFactor(0)));
    }

    #[test]
    fn dc_passes_with_unit_gain() {
        let (y, _) = decimate(&vec![0.5; 4000], 44100.0, 20).unwrap();
        assert!(y.iter().all(|v| (v - 0.5).abs() <= 0.005), "{:?}", &y[..5]);
    }

    #[test]
    fn aliasing_tone_is_suppressed() {
        let r = 4;
        let fs = 44100.0;
        let fs_new = fs / r as f64;
        for &ratio in &[0.5, 0.55] {
            let f = ratio * fs_new;
            let omega = 2.0 * PI * f / fs;
            let x: Vec<f64> = (0..20000).map(|n| (omega * n as f64).sin()).collect();
            let filtered = decimation_filter(r).unwrap().filtfilt(&x);
            let rms = |v: &[f64]| (v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64).sqrt();
            let interior = 2000..18000;
            let atten_db = 20.0 * (rms(&filtered[interior.clone()]) / rms(&x[interior])).log10();
            // zero-phase filtering applies the magnitude response twice
            let want = 2.0 * chebyshev_oracle_db(omega, PI * 0.8 / r as f64);
            assert!((atten_db - want).abs() < 0.5, "{ratio}: {atten_db} vs {want}");
            assert!(atten_db <= -20.0);
            let (y, _) = decimate(&x, fs, r).unwrap();
            assert!(rms(&y[500..4500]) <= 0.1 * rms(&x));
        }
    }
}
