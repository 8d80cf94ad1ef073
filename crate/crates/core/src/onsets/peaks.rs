//! Peak picking, loudness estimation and pruning of onset candidates.

use alloc::vec::Vec;

// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Indices of strict local maxima at or above `threshold`. A plateau of
/// equal values counts once, at its first index, when both of its
/// neighbours are lower. The first and last samples are never peaks.
pub fn detect_peaks(signal: &[f64], threshold: f64) -> Vec<usize> {
    let mut peaks = Vec::new();
    let n = signal.len();
    let mut i = 1;
    while i + 1 < n {
        if signal[i] > signal[i - 1] {
            let mut j = i;
            while j + 1 < n && signal[j + 1] == signal[i] {
                j += 1;
            }
            if j + 1 < n && signal[j + 1] < signal[i] && signal[i] >= threshold {
                peaks.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Unit-peak Gaussian of odd length with `σ = len / 6`.
fn gaussian(len: usize) -> Vec<f64> {
    let len = len | 1;
    let centre = (len / 2) as f64;
    let sigma = len as f64 / 6.0;
    (0..len).map(|k| (-0.5 * ((k as f64 - centre) / sigma).powi(2)).exp()).collect()
}

/// Dot product of `fod` around `peak` with a unit-peak Gaussian
/// `window_ms` long, zero beyond the signal, clamped at zero.
pub fn loudness_at(fod: &[f64], peak: usize, sample_rate: f64, window_ms: f64) -> f64 {
    let len = super::envelope::window_samples(window_ms, sample_rate).max(1);
    let g = gaussian(len);
    let half = g.len() / 2;
    let dot: f64 = g
        .iter()
        .enumerate()
        .filter_map(|(k, w)| {
            let idx = (peak + k).checked_sub(half)?;
            fod.get(idx).map(|v| v * w)
        })
        .sum();
    dot.max(0.0)
}

/// An onset candidate: time in seconds and loudness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub time: f64,
    pub loudness: f64,
}

/// Drops candidates quieter than `threshold_loudness`, then scans left to
/// right: a candidate closer than `min_spacing` to the last kept one
/// replaces it only when strictly louder.
pub fn prune(candidates: &[Candidate], min_spacing: f64, threshold_loudness: f64) -> Vec<Candidate> {
    let mut kept: Vec<Candidate> = Vec::with_capacity(candidates.len());
    for c in candidates.iter().filter(|c| c.loudness >= threshold_loudness) {
        match kept.last_mut() {
            Some(last) if c.time - last.time < min_spacing => {
                if c.loudness > last.loudness {
                    *last = *c;
                }
            }
            _ => kept.push(*c),
        }
    }
    kept
}
