//! The analysis pipeline over files: separation, onsets and pulse
//! trajectories, with every intermediate written as a plain file so any
//! stage can be re-run alone.
//!
//! Stream audio is kept at `f32` precision and onset times at microsecond
//! precision, exactly what the WAV and CSV intermediates hold, so a stage
//! re-run from files reproduces the full run byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use isa_rhythm_core::onsets::{detect_onsets, OnsetConfig, OnsetList};
use isa_rhythm_core::separate::isa_separate;
use isa_rhythm_core::tatum::{trajectory, PulseTrajectory, TatumConfig};
use isa_rhythm_core::{AudioBuffer, Warning};

use crate::audio_io::{read_wav, write_wav, SampleFormat};
use crate::config::{AnalysisConfig, OnsetOverride};
use crate::error::{Error, Result};
use crate::render::{onsets_csv, parse_onsets_csv, to_midi, trajectory_csv, MidiRenderConfig};

/// Everything computed for one separated stream.
#[derive(Debug, Clone)]
pub struct StreamResult {
    pub audio: AudioBuffer,
    pub onsets: OnsetList,
    pub trajectory: PulseTrajectory,
}

/// Rounds every sample to `f32`, the precision of the stream WAV files.
pub fn quantize_f32(buffer: &AudioBuffer) -> AudioBuffer {
    let samples = buffer.samples().iter().map(|v| *v as f32 as f64).collect();
    AudioBuffer::new(samples, buffer.sample_rate(), buffer.channel_count()).expect("shape unchanged")
}

/// Rounds onset times to the microsecond grid of the CSV format.
pub fn quantize_onsets(onsets: OnsetList) -> Result<OnsetList> {
    let times = onsets.times().iter().map(|t| (t * 1e6).round() / 1e6).collect();
    Ok(OnsetList::new(times, onsets.loudness().to_vec(), onsets.config_used().clone())?)
}

/// Separates a (possibly stereo) mixture into `f32`-exact mono streams.
pub fn separate_streams(mixture: &AudioBuffer, config: &AnalysisConfig) -> Result<(Vec<AudioBuffer>, Vec<Warning>)> {
    let mono = mixture.to_mono();
    let separation = isa_separate(&mono, &config.isa())?;
    let streams = separation.streams.iter().map(|s| quantize_f32(&s.audio)).collect();
    Ok((streams, separation.warnings))
}

pub fn stream_onsets(stream: &AudioBuffer, config: &OnsetConfig) -> Result<OnsetList> {
    quantize_onsets(detect_onsets(stream, config)?)
}

pub fn stream_trajectory(onsets: &OnsetList, duration_s: f64, config: &TatumConfig) -> Result<PulseTrajectory> {
    Ok(trajectory(onsets, duration_s, config)?)
}

/// Runs the whole pipeline in memory.
pub fn analyze(mixture: &AudioBuffer, config: &AnalysisConfig, flags: &OnsetOverride) -> Result<Vec<StreamResult>> {
    config.validate()?;
    let (streams, _) = separate_streams(mixture, config)?;
    streams
        .into_iter()
        .enumerate()
        .map(|(i, audio)| {
            let onsets = stream_onsets(&audio, &config.onsets_for(i, flags))?;
            let trajectory = stream_trajectory(&onsets, audio.duration_s(), &config.tatum)?;
            Ok(StreamResult { audio, onsets, trajectory })
        })
        .collect()
}

/// File names of stream `index` inside an output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamPaths {
    pub wav: PathBuf,
    pub onsets: PathBuf,
    pub pulse: PathBuf,
    pub midi: PathBuf,
}

impl StreamPaths {
    pub fn new(dir: &Path, index: usize) -> Self {
        let stem = format!("stream_{index}");
        Self {
            wav: dir.join(format!("{stem}.wav")),
            onsets: dir.join(format!("{stem}.onsets.csv")),
            pulse: dir.join(format!("{stem}.pulse.csv")),
            midi: dir.join(format!("{stem}.mid")),
        }
    }
}

pub const CONFIG_FILE: &str = "config.json";

/// Files written so far; removed again unless the run is committed.
struct Outputs {
    written: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn in_dir(dir: &Path) -> Result<Self> {
        let created_dir = if dir.exists() {
            None
        } else {
            fs::create_dir_all(dir)?;
            Some(dir.to_path_buf())
        };
        Ok(Self { written: Vec::new(), created_dir, committed: false })
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        self.written.push(path.to_path_buf());
        fs::write(path, bytes)?;
        Ok(())
    }

    fn wav(&mut self, path: &Path, audio: &AudioBuffer) -> Result<()> {
        self.written.push(path.to_path_buf());
        write_wav(audio, path, SampleFormat::Float32)?;
        Ok(())
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        if let Some(dir) = &self.created_dir {
            let _ = fs::remove_dir(dir);
        }
    }
}

/// Runs the full pipeline on `input` and writes per-stream WAV, onset CSV,
/// pulse CSV and MIDI files plus the effective configuration into `out`.
/// Nothing is left behind when any step fails.
pub fn analyze_to_dir(input: &Path, out: &Path, config: &AnalysisConfig, flags: &OnsetOverride) -> Result<Vec<StreamPaths>> {
    config.validate()?;
    let mixture = read_wav(input)?;
    let mut outputs = Outputs::in_dir(out)?;
    let results = analyze(&mixture, config, flags)?;
    let mut paths = Vec::with_capacity(results.len());
    for (i, r) in results.iter().enumerate() {
        let p = StreamPaths::new(out, i);
        outputs.wav(&p.wav, &r.audio)?;
        outputs.write(&p.onsets, onsets_csv(&r.onsets).as_bytes())?;
        outputs.write(&p.pulse, trajectory_csv(&r.trajectory).as_bytes())?;
        outputs.write(&p.midi, &to_midi(&r.onsets, &config.midi)?)?;
        paths.push(p);
    }
    outputs.write(&out.join(CONFIG_FILE), config.to_json().as_bytes())?;
    outputs.committed = true;
    Ok(paths)
}

fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingIntermediate(path.to_path_buf()))
    }
}

/// Loads an onsets CSV as an [`OnsetList`].
pub fn read_onsets(path: &Path, config: &OnsetConfig) -> Result<OnsetList> {
    require(path)?;
    let (times, loudness) = parse_onsets_csv(&fs::read_to_string(path)?)?;
    Ok(OnsetList::new(times, loudness, config.clone())?)
}

/// Onset stage alone: stream WAV in, onsets CSV and optionally MIDI out.
pub fn onsets_stage(stream_wav: &Path, csv_out: &Path, midi_out: Option<&Path>, config: &OnsetConfig, midi: &MidiRenderConfig) -> Result<OnsetList> {
    require(stream_wav)?;
    let audio = read_wav(stream_wav)?.to_mono();
    let onsets = stream_onsets(&audio, config)?;
    let midi_bytes = midi_out.map(|_| to_midi(&onsets, midi)).transpose()?;
    fs::write(csv_out, onsets_csv(&onsets))?;
    if let (Some(path), Some(bytes)) = (midi_out, midi_bytes) {
        fs::write(path, bytes)?;
    }
    Ok(onsets)
}

/// The stream WAV that an onsets CSV was derived from, by naming
/// convention (`x.onsets.csv` next to `x.wav`).
pub fn sibling_wav(onsets_csv: &Path) -> Option<PathBuf> {
    let name = onsets_csv.file_name()?.to_str()?;
    let stem = name.strip_suffix(".onsets.csv")?;
    Some(onsets_csv.with_file_name(format!("{stem}.wav")))
}

/// Tatum stage alone: onsets CSV in, pulse CSV out.
///
/// The trajectory spans `duration_s` when given, else the duration of the
/// sibling stream WAV, else up to the last onset. Without any of these and
/// without onsets the trajectory is empty.
pub fn tatum_stage(onsets_path: &Path, csv_out: &Path, duration_s: Option<f64>, config: &TatumConfig) -> Result<PulseTrajectory> {
    let onsets = read_onsets(onsets_path, &OnsetConfig::default())?;
    let duration = match duration_s {
        Some(d) => Some(d),
        None => match sibling_wav(onsets_path).filter(|p| p.is_file()) {
            Some(wav) => Some(read_wav(wav)?.duration_s()),
            None => onsets.times().last().copied().filter(|t| *t > 0.0),
        },
    };
    let traj = match duration {
        Some(d) => stream_trajectory(&onsets, d, config)?,
        None => PulseTrajectory { frame_times: Vec::new(), pulse_s: Vec::new() },
    };
    fs::write(csv_out, trajectory_csv(&traj))?;
    Ok(traj)
}
