//! Short-time Fourier analysis and overlap-add resynthesis.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::fft::Fft;
use crate::{AudioBuffer, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum WindowKind {
    /// Periodic raised cosine sampled at half-sample offsets,
    /// `w[n] = sin²(π (n + ½) / N)`. Overlap-adds to a constant at hops of
    /// N/2, N/4, ... and has no zero taps, so every input sample is
    /// recoverable, including the first and last.
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| {
                    let s = (PI * (n as f64 + 0.5) / len as f64).sin();
                    s * s
                })
                .collect(),
            WindowKind::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct StftConfig {
    pub window_length: usize,
    pub hop: usize,
    pub window: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { window_length: 1024, hop: 512, window: WindowKind::Hann }
    }
}

/// Window duration that the default 1024-sample window has at 44.1 kHz.
pub const DEFAULT_WINDOW_SECONDS: f64 = 1024.0 / 44100.0;

impl StftConfig {
    /// Hann window whose length is the power of two nearest to
    /// [`DEFAULT_WINDOW_SECONDS`] at `sample_rate`, with half-window hop.
    /// Equals [`StftConfig::default`] at 44.1 and 48 kHz.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        let target = (DEFAULT_WINDOW_SECONDS * sample_rate as f64).max(2.0);
        let exponent = target.log2().round() as u32;
        let window_length = 1usize << exponent.clamp(1, 16);
        Self { window_length, hop: window_length / 2, window: WindowKind::Hann }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_length < 2 || !self.window_length.is_power_of_two() {
            return Err(Error::InvalidConfig("window length must be a power of two"));
        }
        if self.hop == 0 || self.hop > self.window_length {
            return Err(Error::InvalidConfig("hop must be in 1..=window_length"));
        }
        if !is_cola(&self.window.coefficients(self.window_length), self.hop) {
            return Err(Error::InvalidConfig("window does not overlap-add to a constant at this hop"));
        }
        Ok(())
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len <= self.window_length {
            1
        } else {
            1 + (len - self.window_length).div_ceil(self.hop)
        }
    }

    /// Signal length after tail zero-padding.
    pub fn padded_length(&self, len: usize) -> usize {
        self.window_length + (self.frame_count(len) - 1) * self.hop
    }
}

fn is_cola(window: &[f64], hop: usize) -> bool {
    let sums: Vec<f64> = (0..hop).map(|n| window.iter().skip(n).step_by(hop).sum()).collect();
    let peak = sums.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    peak > 0.0 && sums.iter().all(|s| (s - sums[0]).abs() <= 1e-9 * peak)
}

/// Complex time-frequency matrix: one column per frame, `window_length/2 + 1`
/// rows of non-negative frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    bins: DMatrix<Complex<f64>>,
    config: StftConfig,
    sample_rate: u32,
    original_length: usize,
}

impl Spectrogram {
    pub fn from_parts(
        bins: DMatrix<Complex<f64>>,
        config: StftConfig,
        sample_rate: u32,
        original_length: usize,
    ) -> Result<Self> {
        config.validate()?;
        if bins.nrows() != config.window_length / 2 + 1 {
            return Err(Error::DimensionMismatch {
                expected: config.window_length / 2 + 1,
                actual: bins.nrows(),
            });
        }
        if bins.ncols() != config.frame_count(original_length) {
            return Err(Error::DimensionMismatch {
                expected: config.frame_count(original_length),
                actual: bins.ncols(),
            });
        }
        Ok(Self { bins, config, sample_rate, original_length })
    }

    pub fn bins(&self) -> &DMatrix<Complex<f64>> {
        &self.bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn original_length(&self) -> usize {
        self.original_length
    }

    pub fn bin_count(&self) -> usize {
        self.bins.nrows()
    }

    pub fn frame_count(&self) -> usize {
        self.bins.ncols()
    }

    /// Element-wise modulus.
    pub fn magnitude(&self) -> DMatrix<f64> {
        self.bins.map(|z| z.norm())
    }

    /// A spectrogram with the given magnitudes and this spectrogram's phase.
    /// Bins with zero modulus take phase zero.
    pub fn with_magnitude(&self, magnitude: &DMatrix<f64>) -> Result<Spectrogram> {
        if magnitude.shape() != self.bins.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.bins.len(),
                actual: magnitude.len(),
            });
        }
        let bins = self.bins.zip_map(magnitude, |z, m| {
            let r = z.norm();
            if r > 0.0 {
                z * (m / r)
            } else {
                Complex::new(m, 0.0)
            }
        });
        Ok(Spectrogram { bins, ..self.clone() })
    }
}

/// Element-wise modulus of a spectrogram.
pub fn magnitude(spec: &Spectrogram) -> DMatrix<f64> {
    spec.magnitude()
}

pub fn stft(signal: &AudioBuffer, config: &StftConfig) -> Result<Spectrogram> {
    config.validate()?;
    if signal.channel_count() != 1 {
        return Err(Error::InvalidBuffer("STFT input must be mono"));
    }
    let x = signal.samples();
    let w = config.window_length;
    let window = config.window.coefficients(w);
    let frames = config.frame_count(x.len());
    let fft = Fft::new(w);
    let mut bins = DMatrix::from_element(w / 2 + 1, frames, Complex::new(0.0, 0.0));
    let mut buf = vec![Complex::new(0.0, 0.0); w];
    for t in 0..frames {
        let start = t * config.hop;
        for (n, slot) in buf.iter_mut().enumerate() {
            let s = x.get(start + n).copied().unwrap_or(0.0);
            *slot = Complex::new(s * window[n], 0.0);
        }
        fft.forward(&mut buf);
        bins.column_mut(t).copy_from_slice(&buf[..w / 2 + 1]);
    }
    Ok(Spectrogram {
        bins,
        config: *config,
        sample_rate: signal.sample_rate(),
        original_length: x.len(),
    })
}

/// Overlap-add inverse. Each output sample is normalised by the summed
/// window weight that covers it, so the tails invert exactly as well.
pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    overlap_add(spec, 1e-12)
}

/// Overlap-add inverse for spectrograms that were modified after
/// analysis. Near the ends of the signal only one tapered frame covers a
/// sample, and dividing a modified frame by that near-zero weight would
/// amplify it without bound; here the weight is floored at
/// `relative_floor` times the window peak, fading the ends instead.
pub fn istft_floored(spec: &Spectrogram, relative_floor: f64) -> Result<AudioBuffer> {
    if !(relative_floor > 0.0 && relative_floor <= 1.0) {
        return Err(Error::InvalidConfig("relative floor must lie in (0, 1]"));
    }
    overlap_add(spec, relative_floor)
}

fn overlap_add(spec: &Spectrogram, relative_floor: f64) -> Result<AudioBuffer> {
    let config = spec.config;
    config.validate()?;
    let w = config.window_length;
    let half = w / 2;
    let window = config.window.coefficients(w);
    let fft = Fft::new(fft_len_check(w, spec.bin_count())?);
    let frames = spec.frame_count();
    let padded = w + frames.saturating_sub(1) * config.hop;
    let mut acc = vec![0.0; padded];
    let mut weight = vec![0.0; padded];
    let mut buf = vec![Complex::new(0.0, 0.0); w];
    for t in 0..frames {
        let col = spec.bins.column(t);
        for k in 0..=half {
            buf[k] = col[k];
        }
        for k in 1..half {
            buf[w - k] = col[k].conj();
        }
        fft.inverse(&mut buf);
        let start = t * config.hop;
        for n in 0..w {
            acc[start + n] += buf[n].re;
            weight[start + n] += window[n];
        }
    }
    let floor = relative_floor * window.iter().fold(0.0f64, |m, v| m.max(*v));
    let samples = if relative_floor <= 1e-12 {
        acc.iter().zip(&weight).take(spec.original_length).map(|(a, wt)| if *wt > floor { a / wt } else { 0.0 }).collect()
    } else {
        acc.iter().zip(&weight).take(spec.original_length).map(|(a, wt)| a / wt.max(floor)).collect()
    };
    AudioBuffer::mono(samples, spec.sample_rate)
}

fn fft_len_check(w: usize, bins: usize) -> Result<usize> {
    if bins != w / 2 + 1 {
        return Err(Error::InvalidConfig("bin count does not match window length"));
    }
    Ok(w)
}
