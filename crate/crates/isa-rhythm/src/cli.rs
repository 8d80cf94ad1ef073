//! Command-line interface.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::audio_io::{read_wav, write_wav, SampleFormat};
use crate::config::{AnalysisConfig, OnsetOverride};
use crate::error::{Error, Result};
use crate::pipeline::{analyze_to_dir, onsets_stage, read_onsets, tatum_stage};
use crate::render::{render_clicks, to_midi};
use crate::service::{serve, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "isa-rhythm", version, about = "Separate a drum mixture into streams and analyse their rhythm")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separate, detect onsets and estimate pulse trajectories in one go.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        components: Option<usize>,
        #[command(flatten)]
        onsets: OnsetFlags,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "ISA_RHYTHM_OUT_DIR", default_value = "isa-rhythm-out")]
        out: PathBuf,
    },
    /// Detect onsets in a single stream WAV.
    Onsets {
        stream: PathBuf,
        /// Output CSV; defaults to `<stream>.onsets.csv`.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        midi: Option<PathBuf>,
        #[command(flatten)]
        onsets: OnsetFlags,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Estimate the pulse trajectory from an onsets CSV.
    Tatum {
        onsets: PathBuf,
        /// Output CSV; defaults to `<stem>.pulse.csv`.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Duration in seconds; otherwise taken from the sibling stream WAV.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render an onsets CSV as MIDI or as a click track.
    Render {
        onsets: PathBuf,
        #[arg(long, required_unless_present = "clicks")]
        midi: Option<PathBuf>,
        #[arg(long, requires_all = ["sample", "duration"])]
        clicks: Option<PathBuf>,
        #[arg(long)]
        sample: Option<PathBuf>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Also write every session's results below this directory.
        #[arg(long)]
        persist: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct OnsetFlags {
    /// RDF peak threshold in [0, 1].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Minimum spacing between onsets, seconds.
    #[arg(long)]
    pub min_spacing: Option<f64>,
    /// Envelope decimation factor.
    #[arg(long)]
    pub decimation: Option<usize>,
}

impl From<&OnsetFlags> for OnsetOverride {
    fn from(f: &OnsetFlags) -> Self {
        OnsetOverride {
            threshold: f.threshold,
            min_spacing_s: f.min_spacing,
            decimation_factor: f.decimation,
            ..OnsetOverride::default()
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let stem = stem.strip_suffix(".onsets").unwrap_or(stem);
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { input, components, onsets, config, out } => {
            let mut config = AnalysisConfig::load_or_default(config.as_deref())?;
            if let Some(c) = components {
                config.components = c;
            }
            let paths = analyze_to_dir(&input, &out, &config, &OnsetOverride::from(&onsets))?;
            for p in paths {
                println!("{}", p.wav.display());
                println!("{}", p.onsets.display());
                println!("{}", p.pulse.display());
                println!("{}", p.midi.display());
            }
        }
        Command::Onsets { stream, output, midi, onsets, config } => {
            let config = AnalysisConfig::load_or_default(config.as_deref())?;
            let onset_config = OnsetOverride::from(&onsets).apply(&config.onsets);
            onset_config.validate()?;
            let output = output.unwrap_or_else(|| with_suffix(&stream, ".onsets.csv"));
            let list = onsets_stage(&stream, &output, midi.as_deref(), &onset_config, &config.midi)?;
            println!("{} onsets -> {}", list.len(), output.display());
        }
        Command::Tatum { onsets, output, duration, config } => {
            let config = AnalysisConfig::load_or_default(config.as_deref())?;
            let output = output.unwrap_or_else(|| with_suffix(&onsets, ".pulse.csv"));
            let traj = tatum_stage(&onsets, &output, duration, &config.tatum)?;
            println!("{} frames -> {}", traj.len(), output.display());
        }
        Command::Render { onsets, midi, clicks, sample, duration, config } => {
            let config = AnalysisConfig::load_or_default(config.as_deref())?;
            let list = read_onsets(&onsets, &config.onsets)?;
            if let Some(path) = midi {
                std::fs::write(&path, to_midi(&list, &config.midi)?)?;
                println!("{}", path.display());
            }
            if let Some(path) = clicks {
                let (Some(sample), Some(duration)) = (sample, duration) else {
                    return Err(Error::Config("--clicks needs --sample and --duration".into()));
                };
                let sample = read_wav(&sample)?.to_mono();
                let rendered = render_clicks(&list, &sample, duration, sample.sample_rate())?;
                if let Some(w) = rendered.warning.or(write_wav(&rendered.audio, &path, SampleFormat::Pcm16)?) {
                    eprintln!("warning: {w}");
                }
                println!("{}", path.display());
            }
        }
        Command::Serve { host, port, persist } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(SocketAddr::new(host, port), ServiceConfig { persist_dir: persist }))?;
        }
    }
    Ok(())
}
