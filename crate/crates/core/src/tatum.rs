//! Lowest-level pulse (tatum) estimation from inter-onset intervals.
//!
//! IOIs are binned into a leaky histogram that is updated once per frame.
//! The pulse candidate for a histogram is found on the modular error
//!
//! ```text
//! e(q) = Σ_k h[k] · ((k + q/2) mod q − q/2)² / Σ_k h[k]
//! ```
//!
//! which vanishes when `q` divides every occupied bin. Among the local
//! minima of `e` that come close to the smallest error, the largest `q`
//! wins: it is the coarsest pulse that still explains all intervals.

use alloc::vec;
use alloc::vec::Vec;

// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::{Euclid, Float};

use crate::onsets::OnsetList;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TatumConfig {
    pub frame_s: f64,
    /// Weight kept by old histogram mass at each new frame, in `(0, 1]`.
    pub decay: f64,
    /// Histogram bins per second.
    pub histogram_rate: f64,
    pub max_ioi_s: f64,
    pub min_q_s: f64,
    pub minima_rel_tolerance: f64,
}

impl Default for TatumConfig {
    fn default() -> Self {
        Self {
            frame_s: 0.5,
            decay: 0.8,
            histogram_rate: 1000.0,
            max_ioi_s: 1.0,
            min_q_s: 0.05,
            minima_rel_tolerance: 0.15,
        }
    }
}

impl TatumConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_s > 0.0) {
            return Err(Error::InvalidConfig("frame_s must be positive"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::InvalidConfig("decay must lie in (0, 1]"));
        }
        if !(self.histogram_rate > 0.0) || !(self.max_ioi_s > 0.0) || self.bins() < 2 {
            return Err(Error::InvalidConfig("histogram needs at least two bins"));
        }
        if !(self.min_q_s >= 0.0) || !(self.minima_rel_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("min_q_s and minima_rel_tolerance must be non-negative"));
        }
        Ok(())
    }

    /// Number of histogram bins `M`.
    pub fn bins(&self) -> usize {
        (self.max_ioi_s * self.histogram_rate).round() as usize
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.histogram_rate
    }

    fn min_q_bins(&self) -> usize {
        ((self.min_q_s * self.histogram_rate).round() as usize).max(1)
    }
}

/// Greatest common divisor of a non-empty set of positive integers.
pub fn exact_gcd(values: &[u64]) -> Result<u64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.contains(&0) {
        return Err(Error::InvalidConfig("gcd inputs must be positive"));
    }
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    Ok(values.iter().fold(0, |acc, v| gcd(acc, *v)))
}

/// Successive differences of the onset times.
pub fn iois(onsets: &OnsetList) -> Vec<f64> {
    onsets.times().windows(2).map(|p| p[1] - p[0]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IoiHistogram {
    counts: Vec<f64>,
    bin_width: f64,
}

impl IoiHistogram {
    pub fn new(bins: usize, bin_width: f64) -> Self {
        Self { counts: vec![0.0; bins], bin_width }
    }

    pub fn for_config(config: &TatumConfig) -> Self {
        Self::new(config.bins(), config.bin_width())
    }

    pub fn from_counts(counts: Vec<f64>, bin_width: f64) -> Result<Self> {
        if counts.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::InvalidConfig("histogram counts must be non-negative"));
        }
        Ok(Self { counts, bin_width })
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn mass(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Adds one count per interval at bin `round(ioi / bin_width)`;
    /// intervals that land past the last bin are dropped.
    pub fn add(&mut self, iois: &[f64]) {
        for &ioi in iois {
            if !(ioi >= 0.0) {
                continue;
            }
            let k = (ioi / self.bin_width).round();
            if k < self.counts.len() as f64 {
                self.counts[k as usize] += 1.0;
            }
        }
    }

    pub fn decay(&mut self, factor: f64) {
        self.counts.iter_mut().for_each(|c| *c *= factor);
    }
}

/// One leaky-integrator step: decays `hist` and adds the frame's IOIs.
pub fn accumulate_frame(hist: &IoiHistogram, frame_iois: &[f64], config: &TatumConfig) -> IoiHistogram {
    let mut next = hist.clone();
    next.decay(config.decay);
    next.add(frame_iois);
    next
}

/// The modular error `e(q)` with each bin index standing for its IOI.
pub fn error_function(hist: &IoiHistogram, q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidConfig("q must be at least one bin"));
    }
    let mass = hist.mass();
    if !(mass > 0.0) {
        return Err(Error::EmptyHistogram);
    }
    let occupied: Vec<(usize, f64)> =
        hist.counts.iter().enumerate().filter(|(_, h)| **h > 0.0).map(|(k, h)| (k, *h)).collect();
    Ok(error_sparse(&occupied, q) / mass)
}

fn error_sparse(occupied: &[(usize, f64)], q: usize) -> f64 {
    let qf = q as f64;
    occupied
        .iter()
        .map(|&(k, h)| {
            let r = Euclid::rem_euclid(&(k as f64 + qf / 2.0), &qf) - qf / 2.0;
            h * (r * r)
        })
        .sum()
}

/// The tatum in bins: the largest local minimum of `e(q)` over
/// `min_q ..= M - 1` whose error is within `minima_rel_tolerance` of the
/// smallest error in that range. `None` when `e` has no local minimum.
pub fn pick_tatum(hist: &IoiHistogram, config: &TatumConfig) -> Result<Option<usize>> {
    let mass = hist.mass();
    if !(mass > 0.0) {
        return Err(Error::EmptyHistogram);
    }
    let m = hist.counts.len();
    let lo = config.min_q_bins();
    if lo + 1 > m {
        return Ok(None);
    }
    let occupied: Vec<(usize, f64)> =
        hist.counts.iter().enumerate().filter(|(_, h)| **h > 0.0).map(|(k, h)| (k, *h)).collect();
    // e over lo-1 ..= M so that both ends of the scan have neighbours
    let first = lo.saturating_sub(1).max(1);
    let e: Vec<f64> = (first..=m).map(|q| error_sparse(&occupied, q) / mass).collect();
    let at = |q: usize| e[q - first];
    let floor = (lo..m).map(at).fold(f64::INFINITY, f64::min);
    let limit = floor * (1.0 + config.minima_rel_tolerance);

    let mut best = None;
    let mut q = lo;
    while q < m {
        let value = at(q);
        let mut end = q;
        while end < m && at(end + 1) == value {
            end += 1;
        }
        let falls_in = q == first || at(q - 1) > value;
        let rises_out = end < m && at(end + 1) > value;
        if falls_in && rises_out && value <= limit {
            // every q on a flat minimum qualifies; the largest wins
            best = Some(end);
        }
        q = end + 1;
    }
    Ok(best)
}

/// Per-frame pulse estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrajectory {
    /// End time of each frame in seconds.
    pub frame_times: Vec<f64>,
    /// Estimated pulse in seconds, `None` while the histogram is empty or
    /// the error has no local minimum.
    pub pulse_s: Vec<Option<f64>>,
}

impl PulseTrajectory {
    pub fn len(&self) -> usize {
        self.frame_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame_times.is_empty()
    }

    pub fn estimates(&self) -> impl Iterator<Item = f64> + '_ {
        self.pulse_s.iter().flatten().copied()
    }
}

/// Runs the leaky histogram over `[0, duration_s)` in frames of
/// `frame_s`. Each IOI is credited to the frame holding its later onset.
pub fn trajectory(onsets: &OnsetList, duration_s: f64, config: &TatumConfig) -> Result<PulseTrajectory> {
    trajectory_from_times(onsets.times(), duration_s, config)
}

pub fn trajectory_from_times(times: &[f64], duration_s: f64, config: &TatumConfig) -> Result<PulseTrajectory> {
    config.validate()?;
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::InvalidConfig("duration must be positive"));
    }
    let frames = ((duration_s / config.frame_s) - 1e-9).ceil().max(1.0) as usize;
    let mut per_frame: Vec<Vec<f64>> = vec![Vec::new(); frames];
    for pair in times.windows(2) {
        let frame = (pair[1] / config.frame_s).floor();
        if frame >= 0.0 && (frame as usize) < frames {
            per_frame[frame as usize].push(pair[1] - pair[0]);
        }
    }
    let mut hist = IoiHistogram::for_config(config);
    let mut frame_times = Vec::with_capacity(frames);
    let mut pulse_s = Vec::with_capacity(frames);
    for (i, iois) in per_frame.iter().enumerate() {
        hist = accumulate_frame(&hist, iois, config);
        frame_times.push((i + 1) as f64 * config.frame_s);
        let pick = if hist.mass() > 0.0 { pick_tatum(&hist, config)? } else { None };
        pulse_s.push(pick.map(|q| q as f64 * hist.bin_width()));
    }
    Ok(PulseTrajectory { frame_times, pulse_s })
}
