#![allow(dead_code)]

use std::f64::consts::PI;

use isa_rhythm_core::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kick-like burst: a sine sweeping from 120 Hz down to 60 Hz with a 5 ms
/// linear attack and exponential decay.
pub fn kick(out: &mut [f64], sr: u32, start_s: f64) {
    let start = (start_s * sr as f64).round() as usize;
    let mut phase = 0.0;
    for (k, v) in out.iter_mut().enumerate().skip(start) {
        let dt = (k - start) as f64 / sr as f64;
        let freq = 60.0 + 60.0 * (-dt / 0.04).exp();
        phase += 2.0 * PI * freq / sr as f64;
        *v += 0.6 * (dt / 0.005).min(1.0) * (-dt / 0.08).exp() * phase.sin();
    }
}

/// Hat-like burst: inharmonic partials between 4 and 8 kHz.
pub fn hat(out: &mut [f64], sr: u32, start_s: f64, phases: &[f64; 4]) {
    const PARTIALS: [f64; 4] = [4300.0, 5200.0, 6350.0, 7400.0];
    let start = (start_s * sr as f64).round() as usize;
    for (k, v) in out.iter_mut().enumerate().skip(start) {
        let dt = (k - start) as f64 / sr as f64;
        let env = (dt / 0.002).min(1.0) * (-dt / 0.03).exp();
        if dt > 0.002 && env < 1e-9 {
            break;
        }
        let s: f64 = PARTIALS.iter().zip(phases).map(|(f, p)| (2.0 * PI * f * dt + p).sin()).sum();
        *v += 0.15 * env * s;
    }
}

pub struct DrumMix {
    pub mixture: AudioBuffer,
    pub kick_times: Vec<f64>,
    pub hat_times: Vec<f64>,
}

/// Kicks every 0.5 s from 0, hats every 0.25 s from 0.125 s.
pub fn drum_mix(seconds: f64, sr: u32, seed: u64) -> DrumMix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (seconds * sr as f64) as usize;
    let mut x = vec![0.0; len];
    let kick_times: Vec<f64> = (0..).map(|i| 0.5 * i as f64).take_while(|t| *t < seconds - 0.1).collect();
    let hat_times: Vec<f64> = (0..).map(|i| 0.125 + 0.25 * i as f64).take_while(|t| *t < seconds - 0.1).collect();
    for &t in &kick_times {
        kick(&mut x, sr, t);
    }
    for &t in &hat_times {
        let phases = [0; 4].map(|_| rng.gen_range(0.0..2.0 * PI));
        hat(&mut x, sr, t, &phases);
    }
    DrumMix { mixture: AudioBuffer::mono(x, sr).unwrap(), kick_times, hat_times }
}

/// Exponentially decaying noise clicks at the given times.
pub fn click_track(times: &[f64], seconds: f64, sr: u32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; (seconds * sr as f64) as usize];
    for &t in times {
        let start = (t * sr as f64).round() as usize;
        for (k, v) in x.iter_mut().enumerate().skip(start).take(sr as usize / 5) {
            let dt = (k - start) as f64 / sr as f64;
            *v += 0.8 * (-dt / 0.01).exp() * rng.gen_range(-1.0..1.0);
        }
    }
    AudioBuffer::mono(x, sr).unwrap()
}

/// Matches each reference onset to at most one detection within `tol`,
/// greedily in time order; returns (precision, recall, f1).
pub fn onset_scores(detected: &[f64], reference: &[f64], tol: f64) -> (f64, f64, f64) {
    let mut used = vec![false; detected.len()];
    let mut hits = 0usize;
    for r in reference {
        let best = detected
            .iter()
            .enumerate()
            .filter(|(i, d)| !used[*i] && (*d - r).abs() <= tol)
            .min_by(|a, b| (a.1 - r).abs().total_cmp(&(b.1 - r).abs()));
        if let Some((i, _)) = best {
            used[i] = true;
            hits += 1;
        }
    }
    let p = if detected.is_empty() { 0.0 } else { hits as f64 / detected.len() as f64 };
    let r = if reference.is_empty() { 0.0 } else { hits as f64 / reference.len() as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}
