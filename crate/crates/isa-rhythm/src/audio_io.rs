//! RIFF/WAVE reading and writing.
//!
//! PCM16 and IEEE Float32 encodings with one or two channels are
//! supported, including extensible headers. Samples are normalised to
//! `[-1, 1]` on read: PCM16 values are divided by 32768.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};
use isa_rhythm_core::{AudioBuffer, Warning};

use crate::error::{Error, Result};

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    #[default]
    Pcm16,
    Float32,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    decode(WavReader::new(BufReader::new(file))?)
}

pub fn read_wav_bytes(bytes: &[u8]) -> Result<AudioBuffer> {
    decode(WavReader::new(Cursor::new(bytes))?)
}

fn decode<R: Read>(reader: WavReader<R>) -> Result<AudioBuffer> {
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if !(1..=2).contains(&channels) {
        return Err(Error::UnsupportedFormat(format!("{channels} channels")));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (HoundFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (HoundFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()?,
        (format, bits) => {
            return Err(Error::UnsupportedFormat(format!("{bits}-bit {format:?}")));
        }
    };
    if !interleaved.len().is_multiple_of(channels) {
        return Err(Error::CorruptHeader("data length is not a whole number of frames".into()));
    }
    let frames = interleaved.len() / channels;
    let planar = (0..channels)
        .flat_map(|c| interleaved.iter().skip(c).step_by(channels).copied().take(frames))
        .collect();
    Ok(AudioBuffer::new(planar, spec.sample_rate, channels)?)
}

/// Writes `buffer`. PCM16 output clips to the representable range and
/// reports how many samples were clipped.
pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>, format: SampleFormat) -> Result<Option<Warning>> {
    let file = BufWriter::new(File::create(path)?);
    encode(buffer, file, format)
}

pub fn write_wav_bytes(buffer: &AudioBuffer, format: SampleFormat) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    encode(buffer, &mut out, format)?;
    Ok(out.into_inner())
}

fn encode<W: Write + Seek>(buffer: &AudioBuffer, sink: W, format: SampleFormat) -> Result<Option<Warning>> {
    if buffer.is_empty() {
        return Err(Error::Config("cannot write an empty buffer".into()));
    }
    let spec = WavSpec {
        channels: buffer.channel_count() as u16,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: if format == SampleFormat::Pcm16 { 16 } else { 32 },
        sample_format: if format == SampleFormat::Pcm16 { HoundFormat::Int } else { HoundFormat::Float },
    };
    let mut writer = WavWriter::new(sink, spec)?;
    let mut clipped = 0;
    for i in 0..buffer.frames() {
        for c in 0..buffer.channel_count() {
            let v = buffer.channel(c)[i];
            match format {
                SampleFormat::Pcm16 => {
                    let scaled = (v * 32768.0).round();
                    if !(-32768.0..=32767.0).contains(&scaled) {
                        clipped += 1;
                    }
                    writer.write_sample(scaled.clamp(-32768.0, 32767.0) as i16)?;
                }
                SampleFormat::Float32 => writer.write_sample(v as f32)?,
            }
        }
    }
    writer.finalize()?;
    Ok((clipped > 0).then(|| {
        log::warn!("{clipped} samples clipped while writing PCM16");
        Warning::Clipped { samples: clipped }
    }))
}
