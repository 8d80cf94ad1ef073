//! Standard MIDI File, click-track and CSV exports.

use std::fmt::Write as _;

use isa_rhythm_core::onsets::OnsetList;
use isa_rhythm_core::tatum::PulseTrajectory;
use isa_rhythm_core::{AudioBuffer, Warning};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How onset loudness becomes note velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityMap {
    /// `clamp(round(127 · loudness / max_loudness), 1, 127)`.
    Linear,
    /// Every note gets the same velocity.
    Fixed(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MidiRenderConfig {
    pub ppq: u16,
    pub tempo_bpm: f64,
    pub note_number: u8,
    pub note_length_ticks: u32,
    /// Zero-based MIDI channel; 9 is the General MIDI percussion channel.
    pub channel: u8,
    pub velocity_map: VelocityMap,
}

impl Default for MidiRenderConfig {
    fn default() -> Self {
        Self {
            ppq: 480,
            tempo_bpm: 120.0,
            note_number: 38,
            note_length_ticks: 120,
            channel: 9,
            velocity_map: VelocityMap::Linear,
        }
    }
}

impl MidiRenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ppq == 0 || self.ppq > 0x7fff {
            return Err(Error::Config("ppq must lie in 1..=32767".into()));
        }
        if !(self.tempo_bpm > 0.0) || 60e6 / self.tempo_bpm >= (1 << 24) as f64 {
            return Err(Error::Config("tempo_bpm out of range".into()));
        }
        if self.note_number > 127 || self.channel > 15 || self.note_length_ticks == 0 {
            return Err(Error::Config("note number, channel or note length out of range".into()));
        }
        if let VelocityMap::Fixed(v) = self.velocity_map {
            if !(1..=127).contains(&v) {
                return Err(Error::Config("fixed velocity must lie in 1..=127".into()));
            }
        }
        Ok(())
    }

    pub fn tick_of(&self, time_s: f64) -> u32 {
        (time_s * self.tempo_bpm / 60.0 * self.ppq as f64).round() as u32
    }
}

fn velocity(loudness: f64, max: f64, map: VelocityMap) -> u8 {
    match map {
        VelocityMap::Fixed(v) => v,
        VelocityMap::Linear if max > 0.0 => (127.0 * loudness / max).round().clamp(1.0, 127.0) as u8,
        VelocityMap::Linear => 1,
    }
}

fn push_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut bytes = [0u8; 5];
    let mut n = 0;
    loop {
        bytes[n] = (value & 0x7f) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(bytes[i] | if i > 0 { 0x80 } else { 0 });
    }
}

/// Encodes the onsets as a format-0 Standard MIDI File: a tempo event,
/// then one note per onset. A note ends after `note_length_ticks` or at the
/// next onset, whichever is first.
pub fn to_midi(onsets: &OnsetList, config: &MidiRenderConfig) -> Result<Vec<u8>> {
    config.validate()?;
    let max = onsets.max_loudness();
    let ticks: Vec<u32> = onsets.times().iter().map(|t| config.tick_of(*t)).collect();
    // (tick, status, velocity); each note ends no later than the next
    // starts, so emission order is already tick order
    let mut events: Vec<(u32, u8, u8)> = Vec::with_capacity(2 * ticks.len());
    for (i, (&tick, &loud)) in ticks.iter().zip(onsets.loudness()).enumerate() {
        let end = ticks.get(i + 1).map_or(tick + config.note_length_ticks, |&next| {
            next.min(tick + config.note_length_ticks)
        });
        events.push((tick, 0x90 | config.channel, velocity(loud, max, config.velocity_map)));
        events.push((end, 0x80 | config.channel, 0));
    }

    let mut track = Vec::new();
    let tempo = (60e6 / config.tempo_bpm).round() as u32;
    track.extend_from_slice(&[0x00, 0xff, 0x51, 0x03]);
    track.extend_from_slice(&tempo.to_be_bytes()[1..]);
    let mut now = 0;
    for (tick, status, vel) in events {
        push_vlq(&mut track, tick - now);
        now = tick;
        track.extend_from_slice(&[status, config.note_number, vel]);
    }
    track.extend_from_slice(&[0x00, 0xff, 0x2f, 0x00]);

    let mut smf = Vec::with_capacity(22 + track.len());
    smf.extend_from_slice(b"MThd");
    smf.extend_from_slice(&6u32.to_be_bytes());
    smf.extend_from_slice(&0u16.to_be_bytes());
    smf.extend_from_slice(&1u16.to_be_bytes());
    smf.extend_from_slice(&config.ppq.to_be_bytes());
    smf.extend_from_slice(b"MTrk");
    smf.extend_from_slice(&(track.len() as u32).to_be_bytes());
    smf.extend_from_slice(&track);
    Ok(smf)
}

/// Click-track rendering result.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub audio: AudioBuffer,
    pub warning: Option<Warning>,
}

/// Mixes `sample` into silence at every onset, scaled by loudness relative
/// to the loudest onset, and clips the sum to `[-1, 1]`.
pub fn render_clicks(onsets: &OnsetList, sample: &AudioBuffer, duration_s: f64, sample_rate: u32) -> Result<Rendered> {
    if sample.is_empty() || sample.channel_count() != 1 {
        return Err(Error::Config("click sample must be mono and non-empty".into()));
    }
    if !(duration_s >= 0.0) || sample_rate == 0 {
        return Err(Error::Config("duration and sample rate must be positive".into()));
    }
    let len = (duration_s * sample_rate as f64).round() as usize;
    let mut out = vec![0.0; len];
    let max = onsets.max_loudness();
    for (&t, &loud) in onsets.times().iter().zip(onsets.loudness()) {
        let gain = if max > 0.0 { loud / max } else { 1.0 };
        let start = (t * sample_rate as f64).round() as usize;
        for (slot, s) in out.iter_mut().skip(start).zip(sample.samples()) {
            *slot += gain * s;
        }
    }
    let clipped = out.iter().filter(|v| v.abs() > 1.0).count();
    out.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    let warning = (clipped > 0).then(|| {
        log::warn!("{clipped} rendered samples clipped");
        Warning::Clipped { samples: clipped }
    });
    Ok(Rendered { audio: AudioBuffer::mono(out, sample_rate)?, warning })
}

pub const ONSETS_HEADER: &str = "time_s,loudness";
pub const PULSE_HEADER: &str = "frame_end_s,pulse_s";

/// `time_s,loudness` rows; times with six decimals, loudness in shortest
/// round-trip form.
pub fn onsets_csv(onsets: &OnsetList) -> String {
    let mut out = format!("{ONSETS_HEADER}\n");
    for (t, l) in onsets.times().iter().zip(onsets.loudness()) {
        writeln!(out, "{t:.6},{l}").expect("writing to a String");
    }
    out
}

/// `frame_end_s,pulse_s` rows with six decimals; an absent pulse leaves the
/// field empty.
pub fn trajectory_csv(trajectory: &PulseTrajectory) -> String {
    let mut out = format!("{PULSE_HEADER}\n");
    for (t, p) in trajectory.frame_times.iter().zip(&trajectory.pulse_s) {
        match p {
            Some(p) => writeln!(out, "{t:.6},{p:.6}"),
            None => writeln!(out, "{t:.6},"),
        }
        .expect("writing to a String");
    }
    out
}

fn records(text: &str, header: &str) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let found: Vec<&str> = reader.headers()?.iter().collect();
    if found.join(",") != header {
        return Err(Error::Csv(format!("expected header `{header}`, found `{}`", found.join(","))));
    }
    Ok(reader.records().collect::<std::result::Result<_, _>>()?)
}

fn number(field: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Csv(format!("not a number: `{field}`")))
}

/// Parses an onsets CSV into `(times, loudness)`.
pub fn parse_onsets_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    records(text, ONSETS_HEADER)?.iter().map(|r| Ok((number(&r[0])?, number(&r[1])?))).collect()
}

pub fn parse_trajectory_csv(text: &str) -> Result<PulseTrajectory> {
    let mut trajectory = PulseTrajectory { frame_times: Vec::new(), pulse_s: Vec::new() };
    for r in records(text, PULSE_HEADER)? {
        trajectory.frame_times.push(number(&r[0])?);
        trajectory.pulse_s.push(if r[1].trim().is_empty() { None } else { Some(number(&r[1])?) });
    }
    Ok(trajectory)
}
