//! Amplitude envelope and its difference functions.

use alloc::vec::Vec;
use core::f64::consts::PI;

// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Default floor added to the envelope before taking logarithms, relative
/// to the envelope maximum (-40 dB).
pub const DEFAULT_RDF_FLOOR: f64 = 1e-2;

pub fn half_wave_rectify(signal: &[f64]) -> Vec<f64> {
    signal.iter().map(|x| x.max(0.0)).collect()
}

/// Symmetric raised-cosine window of `len` taps without zero endpoints,
/// normalised to unit sum.
pub fn raised_cosine(len: usize) -> Vec<f64> {
    let raw: Vec<f64> =
        (0..len).map(|k| 0.5 * (1.0 - (2.0 * PI * (k + 1) as f64 / (len + 1) as f64).cos())).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Raised cosine falling from its peak at lag zero towards zero at lag
/// `len`, normalised to unit sum. As a causal smoother it weights the most
/// recent input highest, so an attack shows up in the envelope at once; its
/// jump at the far end gives a 6 dB/octave high-frequency rolloff.
pub fn decaying_raised_cosine(len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|k| 0.5 * (1.0 + (PI * k as f64 / len as f64).cos())).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Shape of the envelope smoothing window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SmoothingShape {
    /// [`decaying_raised_cosine`].
    #[default]
    Decaying,
    /// [`raised_cosine`].
    Symmetric,
}

impl SmoothingShape {
    pub fn taps(self, len: usize) -> Vec<f64> {
        match self {
            SmoothingShape::Decaying => decaying_raised_cosine(len),
            SmoothingShape::Symmetric => raised_cosine(len),
        }
    }
}

/// Window length in samples for a duration in milliseconds.
pub fn window_samples(window_ms: f64, sample_rate: f64) -> usize {
    (window_ms * sample_rate / 1000.0).round() as usize
}

/// Causal convolution with a unit-gain window of `window_ms`. Output
/// sample `n` sums the window over `x[n-k]`; samples before the start are
/// taken equal to `x[0]`, so a constant input passes through unchanged.
pub fn smooth(signal: &[f64], sample_rate: f64, window_ms: f64, shape: SmoothingShape) -> Result<Vec<f64>> {
    if !(window_ms > 0.0) || !(sample_rate > 0.0) {
        return Err(Error::InvalidConfig("smoothing window and rate must be positive"));
    }
    let len = window_samples(window_ms, sample_rate).max(1);
    if len > signal.len() {
        return Err(Error::WindowTooLong { window: len, len: signal.len() });
    }
    let w = shape.taps(len);
    let first = signal[0];
    Ok((0..signal.len())
        .map(|n| {
            w.iter()
                .enumerate()
                .map(|(k, wk)| wk * if k <= n { signal[n - k] } else { first })
                .sum()
        })
        .collect())
}

/// First-order difference `(S[t] - S[t-1]) / dt`, with a leading zero.
pub fn fod(envelope: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(envelope.len());
    if !envelope.is_empty() {
        out.push(0.0);
    }
    out.extend(envelope.windows(2).map(|p| (p[1] - p[0]) / dt));
    out
}

/// Relative difference function: the first-order difference of
/// `ln(S + ε)`, with `ε` = `relative_floor` times the envelope maximum.
///
/// The floor bounds how far an attack out of silence can dominate the
/// function: rising from digital silence spans `ln(1/relative_floor)`
/// rather than an unbounded log ratio.
pub fn rdf(envelope: &[f64], dt: f64, relative_floor: f64) -> Vec<f64> {
    let peak = envelope.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = relative_floor * peak;
    if peak == 0.0 {
        return alloc::vec![0.0; envelope.len()];
    }
    let logs: Vec<f64> = envelope.iter().map(|s| (s.max(0.0) + eps).ln()).collect();
    fod(&logs, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rectify_examples() {
        assert_eq!(half_wave_rectify(&[1.0, -2.0, 3.0]), vec![1.0, 0.0, 3.0]);
        assert_eq!(half_wave_rectify(&[-1.0, -0.5]), vec![0.0, 0.0]);
        assert_eq!(half_wave_rectify(&[0.0, 2.0]), vec![0.0, 2.0]);
    }

    #[test]
    fn smooth_impulse_gives_window() {
        let mut x = vec![0.0; 50];
        x[10] = 3.0;
        for shape in [SmoothingShape::Decaying, SmoothingShape::Symmetric] {
            let y = smooth(&x, 1000.0, 9.0, shape).unwrap();
            let w = shape.taps(9);
            for (n, v) in y.iter().enumerate() {
                let want = if (10..19).contains(&n) { 3.0 * w[n - 10] } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
            assert!(w.iter().all(|v| *v > 0.0));
        }
        let sym = raised_cosine(9);
        assert!((sym[0] - sym[8]).abs() < 1e-15);
        let dec = decaying_raised_cosine(9);
        assert!(dec.windows(2).all(|p| p[0] > p[1]));
    }

    /// Magnitude response in dB of a unit-sum FIR at `freq`, evaluated
    /// directly from its taps.
    fn response_db(taps: &[f64], freq: f64, rate: f64) -> f64 {
        let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, w)| {
            let ph = 2.0 * PI * freq * k as f64 / rate;
            (re + w * ph.cos(), im - w * ph.sin())
        });
        10.0 * (re * re + im * im).log10()
    }

    #[test]
    fn decaying_window_rolls_off_at_six_db_per_octave() {
        let rate = 1102.5;
        let taps = decaying_raised_cosine(window_samples(200.0, rate));
        let db: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|f| response_db(&taps, *f, rate)).collect();
        assert!(db[0] < -10.0, "{db:?}");
        for p in db.windows(2) {
            assert!((p[0] - p[1] - 6.0).abs() < 1.0, "{db:?}");
        }
        // the symmetric window falls away far faster
        let sym = raised_cosine(window_samples(200.0, rate));
        assert!(response_db(&sym, 10.0, rate) < -40.0);
    }

    #[test]
    fn smooth_dc_and_noise() {
        for shape in [SmoothingShape::Decaying, SmoothingShape::Symmetric] {
            let y = smooth(&vec![0.7; 1000], 2205.0, 200.0, shape).unwrap();
            assert!(y.iter().all(|v| (v - 0.7).abs() < 1e-9));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..5000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = smooth(&x, 2205.0, 200.0, SmoothingShape::default()).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / v.len() as f64
        };
        assert!(var(&y[500..]) < var(&x[500..]));
    }

    #[test]
    fn smooth_rejects_long_window() {
        assert_eq!(
            smooth(&[1.0; 10], 1000.0, 20.0, SmoothingShape::default()),
            Err(Error::WindowTooLong { window: 20, len: 10 })
        );
        assert!(smooth(&[1.0; 10], 1000.0, 0.0, SmoothingShape::default()).is_err());
    }

    #[test]
    fn fod_examples() {
        assert_eq!(fod(&[1.0, 3.0, 6.0], 1.0), vec![0.0, 2.0, 3.0]);
        assert_eq!(fod(&[2.0; 4], 0.1), vec![0.0; 4]);
        let ramp: Vec<f64> = (0..10).map(|i| 0.5 * i as f64).collect();
        assert!(fod(&ramp, 1.0)[1..].iter().all(|v| (*v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn rdf_examples() {
        let r = rdf(&[1.0, 2.0, 4.0, 8.0], 1.0, 1e-6);
        assert_eq!(r[0], 0.0);
        for v in &r[1..] {
            assert!((v - 2f64.ln()).abs() < 1e-5);
        }
        assert_eq!(rdf(&[3.0; 5], 0.01, DEFAULT_RDF_FLOOR), vec![0.0; 5]);
        assert_eq!(rdf(&[0.0; 3], 0.01, DEFAULT_RDF_FLOOR), vec![0.0; 3]);
    }

    proptest! {
        #[test]
        fn rdf_is_scale_invariant(s in prop::collection::vec(0.0f64..10.0, 2..64), c in 1e-3f64..1e3) {
            let scaled: Vec<f64> = s.iter().map(|v| v * c).collect();
            let (a, b) = (rdf(&s, 0.01, DEFAULT_RDF_FLOOR), rdf(&scaled, 0.01, DEFAULT_RDF_FLOOR));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
        }

        #[test]
        fn rectify_is_nonnegative_and_idempotent(s in prop::collection::vec(-5.0f64..5.0, 0..64)) {
            let once = half_wave_rectify(&s);
            prop_assert!(once.iter().all(|v| *v >= 0.0));
            prop_assert_eq!(half_wave_rectify(&once), once);
        }
    }
}
