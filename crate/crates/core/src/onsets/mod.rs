//! Onset detection on a single separated stream.
//!
//! The stream is half-wave rectified, decimated by `R` with a zero-phase
//! Chebyshev lowpass, and smoothed with a causal raised-cosine window. Onset
//! candidates are peaks of the relative difference function (the
//! difference of the log envelope) normalised to its maximum; each
//! candidate's loudness is the Gaussian-weighted first-order difference
//! around it. Candidates are then pruned by loudness and spacing.

mod envelope;
mod filter;
mod peaks;

use alloc::vec::Vec;

// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

pub use envelope::{
    decaying_raised_cosine, fod, half_wave_rectify, raised_cosine, rdf, smooth, window_samples, SmoothingShape,
    DEFAULT_RDF_FLOOR,
};
pub use filter::{decimate, decimation_filter, Biquad, Sos};
pub use peaks::{detect_peaks, loudness_at, prune, Candidate};

use crate::{AudioBuffer, Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OnsetConfig {
    pub decimation_factor: usize,
    pub smoothing_window_ms: f64,
    pub smoothing_shape: SmoothingShape,
    /// Log floor of the relative difference function, as a fraction of
    /// the envelope maximum.
    pub rdf_floor: f64,
    /// Peak threshold on the max-normalised relative difference function.
    pub threshold: f64,
    pub min_spacing_s: f64,
    pub loudness_window_ms: f64,
    /// Candidates quieter than this fraction of the loudest envelope peak
    /// are discarded before spacing is enforced.
    pub min_relative_loudness: f64,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self {
            decimation_factor: 20,
            smoothing_window_ms: 200.0,
            smoothing_shape: SmoothingShape::Decaying,
            rdf_floor: DEFAULT_RDF_FLOOR,
            threshold: 0.3,
            min_spacing_s: 0.05,
            loudness_window_ms: 200.0,
            min_relative_loudness: 0.1,
        }
    }
}

impl OnsetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.decimation_factor == 0 {
            return Err(Error::InvalidFactor(0));
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::InvalidConfig("threshold must be non-negative"));
        }
        if !(self.rdf_floor > 0.0 && self.rdf_floor < 1.0) {
            return Err(Error::InvalidConfig("rdf_floor must lie in (0, 1)"));
        }
        if !(self.min_spacing_s >= 0.0) {
            return Err(Error::InvalidConfig("min_spacing_s must be non-negative"));
        }
        if !(self.smoothing_window_ms > 0.0) || !(self.loudness_window_ms > 0.0) {
            return Err(Error::InvalidConfig("window lengths must be positive"));
        }
        if !(0.0..=1.0).contains(&self.min_relative_loudness) {
            return Err(Error::InvalidConfig("min_relative_loudness must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Onset times in seconds of the original stream with their loudness.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetList {
    times: Vec<f64>,
    loudness: Vec<f64>,
    config_used: OnsetConfig,
}

impl OnsetList {
    /// Checks that times are strictly increasing and finite, loudness is
    /// non-negative and both have the same length.
    pub fn new(times: Vec<f64>, loudness: Vec<f64>, config_used: OnsetConfig) -> Result<Self> {
        if times.len() != loudness.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), actual: loudness.len() });
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidConfig("onset times must be non-negative and strictly increasing"));
        }
        if loudness.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::InvalidConfig("loudness must be finite and non-negative"));
        }
        Ok(Self { times, loudness, config_used })
    }

    pub fn empty(config_used: OnsetConfig) -> Self {
        Self { times: Vec::new(), loudness: Vec::new(), config_used }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn loudness(&self) -> &[f64] {
        &self.loudness
    }

    pub fn config_used(&self) -> &OnsetConfig {
        &self.config_used
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_loudness(&self) -> f64 {
        self.loudness.iter().fold(0.0, |m, l| m.max(*l))
    }
}

/// Intermediate signals of the detector, all at the decimated rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeTrace {
    /// Decimated sample rate in Hz.
    pub rate: f64,
    /// Seconds of original audio per envelope sample, `R / sample_rate`.
    pub step_s: f64,
    pub envelope: Vec<f64>,
    pub fod: Vec<f64>,
    /// Relative difference function scaled so its maximum is one (all
    /// zeros when it never rises).
    pub rdf: Vec<f64>,
}

impl EnvelopeTrace {
    pub fn time_of(&self, index: usize) -> f64 {
        index as f64 * self.step_s
    }
}

/// Runs the rectify, decimate, smooth and difference stages.
pub fn envelope_trace(stream: &AudioBuffer, config: &OnsetConfig) -> Result<EnvelopeTrace> {
    config.validate()?;
    if stream.channel_count() != 1 {
        return Err(Error::InvalidBuffer("onset detection needs a mono stream"));
    }
    let sr = stream.sample_rate() as f64;
    let needed = (config.smoothing_window_ms * sr / 1000.0).ceil() as usize;
    if stream.frames() < needed.max(2) {
        return Err(Error::TooShort { needed: needed.max(2), actual: stream.frames() });
    }
    let rectified = half_wave_rectify(stream.samples());
    let (decimated, rate) = decimate(&rectified, sr, config.decimation_factor)?;
    let decimated: Vec<f64> = decimated.into_iter().map(|v| v.max(0.0)).collect();
    let envelope = smooth(&decimated, rate, config.smoothing_window_ms, config.smoothing_shape).map_err(|e| match e {
        Error::WindowTooLong { .. } => Error::TooShort { needed, actual: stream.frames() },
        other => other,
    })?;
    let dt = 1.0 / rate;
    let fod = fod(&envelope, dt);
    let mut rdf = rdf(&envelope, dt, config.rdf_floor);
    let top = rdf.iter().fold(0.0f64, |m, v| m.max(*v));
    if top > 0.0 {
        rdf.iter_mut().for_each(|v| *v /= top);
    } else {
        rdf.iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(EnvelopeTrace { rate, step_s: config.decimation_factor as f64 / sr, envelope, fod, rdf })
}

/// Detects onsets in a mono stream.
///
/// Loudness pruning is relative to the loudest local maximum of the RDF
/// regardless of `threshold`, so raising the threshold only ever removes
/// candidates.
pub fn detect_onsets(stream: &AudioBuffer, config: &OnsetConfig) -> Result<OnsetList> {
    let trace = envelope_trace(stream, config)?;
    let loud = |i: usize| loudness_at(&trace.fod, i, trace.rate, config.loudness_window_ms);
    let reference = detect_peaks(&trace.rdf, 0.0).into_iter().map(loud).fold(0.0, f64::max);
    if reference == 0.0 {
        return Ok(OnsetList::empty(config.clone()));
    }
    let candidates: Vec<Candidate> = detect_peaks(&trace.rdf, config.threshold)
        .into_iter()
        .map(|i| Candidate { time: trace.time_of(i), loudness: loud(i) })
        .filter(|c| c.loudness > 0.0)
        .collect();
    let kept = prune(&candidates, config.min_spacing_s, config.min_relative_loudness * reference);
    let (times, loudness) = kept.into_iter().map(|c| (c.time, c.loudness)).unzip();
    OnsetList::new(times, loudness, config.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn click_track(sr: u32, times: &[f64], dur: f64, seed: u64) -> AudioBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (dur * sr as f64) as usize;
        let mut x = vec![0.0; n];
        for &t in times {
            let start = (t * sr as f64).round() as usize;
            for k in 0..(0.1 * sr as f64) as usize {
                if start + k < n {
                    x[start + k] += 0.8 * (-(k as f64) / (0.01 * sr as f64)).exp() * rng.gen_range(-1.0..1.0);
                }
            }
        }
        AudioBuffer::mono(x, sr).unwrap()
    }

    fn matches(found: &[f64], truth: &[f64], tol: f64) -> usize {
        truth.iter().filter(|t| found.iter().any(|f| (f - *t).abs() <= tol)).count()
    }

    #[test]
    fn click_track_is_recovered() {
        let truth: Vec<f64> = (0..8).map(|i| 0.25 + 0.5 * i as f64).collect();
        let x = click_track(44100, &truth, 4.5, 1);
        let onsets = detect_onsets(&x, &OnsetConfig::default()).unwrap();
        assert_eq!(onsets.len(), 8, "{:?}", onsets.times());
        assert_eq!(matches(onsets.times(), &truth, 0.01), 8);
        assert!(onsets.loudness().iter().all(|l| *l > 0.0));
    }

    #[test]
    fn silence_and_short_input() {
        let silent = AudioBuffer::mono(vec![0.0; 44100], 44100).unwrap();
        assert!(detect_onsets(&silent, &OnsetConfig::default()).unwrap().is_empty());
        let short = AudioBuffer::mono(vec![0.1; 1000], 44100).unwrap();
        assert!(matches!(detect_onsets(&short, &OnsetConfig::default()), Err(Error::TooShort { .. })));
        let stereo = AudioBuffer::from_channels(&[&[0.0; 10000][..], &[0.0; 10000][..]], 44100).unwrap();
        assert!(detect_onsets(&stereo, &OnsetConfig::default()).is_err());
    }

    #[test]
    fn slow_attack_is_detected_early_by_rdf() {
        let sr = 22050u32;
        let n = 2 * sr as usize;
        let start = 0.5;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / sr as f64;
                let env = ((t - start) / 0.3).clamp(0.0, 1.0);
                0.5 * env * (2.0 * PI * 1000.0 * t).sin()
            })
            .collect();
        let buf = AudioBuffer::mono(x, sr).unwrap();
        let config = OnsetConfig::default();
        let trace = envelope_trace(&buf, &config).unwrap();
        let argmax = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
        let fod_time = trace.time_of(argmax(&trace.fod));
        let onsets = detect_onsets(&buf, &config).unwrap();
        assert!(!onsets.is_empty());
        let rdf_time = onsets.times()[0];
        assert!(fod_time - rdf_time >= 0.05, "rdf {rdf_time} fod {fod_time}");
    }

    #[test]
    fn gain_does_not_move_onsets() {
        let truth = [0.3, 0.9, 1.4];
        let x = click_track(22050, &truth, 2.0, 4);
        let loud = AudioBuffer::mono(x.samples().iter().map(|v| v * 0.01).collect(), 22050).unwrap();
        let a = detect_onsets(&x, &OnsetConfig::default()).unwrap();
        let b = detect_onsets(&loud, &OnsetConfig::default()).unwrap();
        assert_eq!(a.times(), b.times());
    }

    #[test]
    fn raising_threshold_never_adds_onsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let truth: Vec<f64> = (0..12).map(|i| 0.2 + 0.3 * i as f64 + rng.gen_range(0.0..0.05)).collect();
        let x = click_track(22050, &truth, 4.0, 11);
        let mut last = usize::MAX;
        for step in 0..=10 {
            let config = OnsetConfig { threshold: step as f64 / 10.0, ..OnsetConfig::default() };
            let found = detect_onsets(&x, &config).unwrap();
            assert!(found.len() <= last);
            last = found.len();
            assert_eq!(detect_onsets(&x, &config).unwrap(), found);
        }
    }

    #[test]
    fn config_validation() {
        assert_eq!(
            OnsetConfig { decimation_factor: 0, ..Default::default() }.validate(),
            Err(Error::InvalidFactor(0))
        );
        assert!(OnsetConfig { threshold: -1.0, ..Default::default() }.validate().is_err());
        assert!(OnsetConfig { min_spacing_s: -0.1, ..Default::default() }.validate().is_err());
        assert!(OnsetList::new(vec![0.2, 0.1], vec![1.0, 1.0], OnsetConfig::default()).is_err());
        assert!(OnsetList::new(vec![0.1], vec![], OnsetConfig::default()).is_err());
    }
}
