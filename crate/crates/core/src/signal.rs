//! In-memory PCM signal.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Uniformly sampled signal with amplitudes nominally in [-1, 1].
///
/// Samples are stored de-interleaved: all of channel 0, then all of
/// channel 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
    channel_count: usize,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32, channel_count: usize) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidBuffer("sample rate must be positive"));
        }
        if channel_count == 0 {
            return Err(Error::InvalidBuffer("channel count must be positive"));
        }
        if !samples.len().is_multiple_of(channel_count) {
            return Err(Error::InvalidBuffer(
                "sample count is not a multiple of the channel count",
            ));
        }
        Ok(Self { samples, sample_rate, channel_count })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(samples, sample_rate, 1)
    }

    /// Builds a buffer from per-channel slices of equal length.
    pub fn from_channels(channels: &[&[f64]], sample_rate: u32) -> Result<Self> {
        let Some(first) = channels.first() else {
            return Err(Error::InvalidBuffer("channel count must be positive"));
        };
        if channels.iter().any(|c| c.len() != first.len()) {
            return Err(Error::InvalidBuffer("channels differ in length"));
        }
        let samples = channels.iter().flat_map(|c| c.iter().copied()).collect();
        Self::new(samples, sample_rate, channels.len())
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    /// Number of samples per channel.
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channel_count
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.frames() as f64 / f64::from(self.sample_rate)
    }

    /// All samples, de-interleaved.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        let n = self.frames();
        &self.samples[index * n..(index + 1) * n]
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Mixes down to one channel by averaging. Mono input is returned as is.
    pub fn to_mono(&self) -> AudioBuffer {
        if self.channel_count == 1 {
            return self.clone();
        }
        let n = self.frames();
        let scale = 1.0 / self.channel_count as f64;
        let samples = (0..n)
            .map(|i| (0..self.channel_count).map(|c| self.samples[c * n + i]).sum::<f64>() * scale)
            .collect();
        AudioBuffer { samples, sample_rate: self.sample_rate, channel_count: 1 }
    }

    /// Peak absolute amplitude over all channels.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}
