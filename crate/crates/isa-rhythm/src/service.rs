//! JSON-over-HTTP service holding analysis sessions.
//!
//! A session moves through `created → loaded → separated → onsets_ready →
//! interpreted`. Re-running onsets or tatum on a stream never touches its
//! separated audio; each stream reports a SHA-256 checksum of its samples
//! so clients can verify that. Every mutation bumps the session revision.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/sessions` | WAV bytes, or empty to upload later |
//! | PUT | `/sessions/:id/audio` | WAV bytes |
//! | GET | `/sessions/:id` | |
//! | POST | `/sessions/:id/separate` | `{components, stft, retained, basis}` |
//! | GET | `/sessions/:id/streams/:i/waveform?points=N` | |
//! | POST, GET | `/sessions/:id/streams/:i/onsets` | onset parameters |
//! | POST | `/sessions/:id/streams/:i/tatum` | tatum parameters |
//! | GET | `/sessions/:id/streams/:i/trajectory` | |
//! | GET | `/sessions/:id/streams/:i/export?format=midi\|wav\|csv\|pulse` | |

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use isa_rhythm_core::onsets::{OnsetConfig, OnsetList, SmoothingShape};
use isa_rhythm_core::spectral::StftConfig;
use isa_rhythm_core::tatum::{PulseTrajectory, TatumConfig};
use isa_rhythm_core::AudioBuffer;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tokio::sync::{Mutex, RwLock};

use crate::audio_io::{read_wav_bytes, write_wav, write_wav_bytes, SampleFormat};
use crate::config::{AnalysisConfig, BasisChoice, OnsetOverride};
use crate::error::Error;
use crate::pipeline::{separate_streams, stream_onsets, stream_trajectory, StreamPaths};
use crate::render::{onsets_csv, to_midi, trajectory_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Created,
    Loaded,
    Separated,
    OnsetsReady,
    Interpreted,
}

struct StreamState {
    audio: AudioBuffer,
    checksum: String,
    onsets: Option<OnsetList>,
    trajectory: Option<PulseTrajectory>,
}

struct Session {
    id: String,
    stage: Stage,
    revision: u64,
    source: Option<AudioBuffer>,
    config: AnalysisConfig,
    streams: Vec<StreamState>,
}

impl Session {
    fn summary(&self) -> serde_json::Value {
        let streams: Vec<_> = self
            .streams
            .iter()
            .enumerate()
            .map(|(i, s)| {
                json!({
                    "index": i,
                    "checksum": s.checksum,
                    "frames": s.audio.frames(),
                    "onsets_ready": s.onsets.is_some(),
                    "trajectory_ready": s.trajectory.is_some(),
                })
            })
            .collect();
        json!({
            "session_id": self.id,
            "stage": self.stage,
            "revision": self.revision,
            "sample_rate": self.source.as_ref().map(|s| s.sample_rate()),
            "frames": self.source.as_ref().map(|s| s.frames()),
            "streams": streams,
        })
    }

    fn stream(&self, index: usize) -> Result<&StreamState, ApiError> {
        if self.stage < Stage::Separated {
            return Err(ApiError::conflict("session has not been separated yet"));
        }
        self.streams.get(index).ok_or_else(|| ApiError::not_found(format!("no stream {index}")))
    }

    fn touch(&mut self) {
        self.revision += 1;
        let any_traj = self.streams.iter().any(|s| s.trajectory.is_some());
        let any_onsets = self.streams.iter().any(|s| s.onsets.is_some());
        if self.stage >= Stage::Separated {
            self.stage = match (any_onsets, any_traj) {
                (_, true) => Stage::Interpreted,
                (true, false) => Stage::OnsetsReady,
                _ => Stage::Separated,
            };
        }
    }
}

#[derive(Default)]
struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    persist: Option<PathBuf>,
}

/// Service options.
#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Directory where each session's results are also written as files.
    pub persist_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<isa_rhythm_core::Error> for ApiError {
    fn from(e: isa_rhythm_core::Error) -> Self {
        Self::invalid(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(config: ServiceConfig) -> Router {
    let state = Arc::new(AppState { persist: config.persist_dir, ..AppState::default() });
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(session_summary))
        .route("/sessions/:id/audio", put(upload_audio))
        .route("/sessions/:id/separate", post(separate))
        .route("/sessions/:id/streams/:index/waveform", get(waveform))
        .route("/sessions/:id/streams/:index/onsets", post(run_onsets).get(get_onsets))
        .route("/sessions/:id/streams/:index/tatum", post(run_tatum))
        .route("/sessions/:id/streams/:index/trajectory", get(get_trajectory))
        .route("/sessions/:id/streams/:index/export", get(export))
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn checksum(audio: &AudioBuffer) -> String {
    let mut hasher = Sha256::new();
    for v in audio.samples() {
        hasher.update(v.to_le_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(e.to_string()))
}

async fn session(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
    state.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::not_found(format!("no session {id}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

fn decode_audio(body: &Bytes) -> ApiResult<AudioBuffer> {
    let audio = read_wav_bytes(body)?;
    if audio.is_empty() {
        return Err(ApiError::invalid("audio has no samples"));
    }
    Ok(audio)
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let source = if body.is_empty() { None } else { Some(decode_audio(&body)?) };
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session {
        id: id.clone(),
        stage: if source.is_some() { Stage::Loaded } else { Stage::Created },
        revision: 0,
        source,
        config: AnalysisConfig::default(),
        streams: Vec::new(),
    };
    let summary = session.summary();
    state.sessions.write().await.insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn session_summary(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let session = session(&state, &id).await?;
    let s = session.lock().await;
    Ok(Json(s.summary()))
}

async fn upload_audio(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let audio = decode_audio(&body)?;
    let session = session(&state, &id).await?;
    let mut s = session.lock().await;
    s.source = Some(audio);
    s.streams.clear();
    s.stage = Stage::Loaded;
    s.revision += 1;
    Ok(Json(s.summary()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SeparateRequest {
    components: Option<usize>,
    stft: Option<StftConfig>,
    retained: Option<usize>,
    basis: Option<BasisChoice>,
}

async fn separate(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let request: SeparateRequest = parse_body(&body)?;
    let session = session(&state, &id).await?;
    let mut s = session.lock().await;
    let Some(source) = s.source.clone() else {
        return Err(ApiError::conflict("no audio uploaded yet"));
    };
    let mut config = s.config.clone();
    config.components = request.components.unwrap_or(config.components);
    config.stft = request.stft.or(config.stft);
    config.retained = request.retained.or(config.retained);
    config.basis = request.basis.unwrap_or(config.basis);
    config.validate()?;
    let isa_config = config.clone();
    let (streams, warnings) = blocking(move || separate_streams(&source, &isa_config)).await?;
    s.config = config;
    s.streams = streams
        .into_iter()
        .map(|audio| StreamState { checksum: checksum(&audio), audio, onsets: None, trajectory: None })
        .collect();
    s.stage = Stage::Separated;
    s.touch();
    persist(&state, &s)?;
    let mut summary = s.summary();
    summary["warnings"] = json!(warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>());
    Ok(Json(summary))
}

#[derive(Debug, Deserialize)]
struct WaveformQuery {
    points: Option<usize>,
}

/// `points` (min, max) pairs over equal-width sample buckets.
pub fn min_max_envelope(samples: &[f64], points: usize) -> Vec<[f64; 2]> {
    let n = samples.len();
    (0..points)
        .map(|j| {
            let (a, b) = (j * n / points, ((j + 1) * n / points).max(j * n / points + 1));
            samples[a..b.min(n)]
                .iter()
                .fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| [lo.min(*v), hi.max(*v)])
        })
        .collect()
}

async fn waveform(
    State(state): State<Arc<AppState>>,
    Path((id, index)): Path<(String, usize)>,
    Query(query): Query<WaveformQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let session = session(&state, &id).await?;
    let s = session.lock().await;
    let stream = s.stream(index)?;
    let points = query.points.unwrap_or(800);
    if points == 0 || points > stream.audio.frames() {
        return Err(ApiError::invalid(format!("points must lie in 1..={}", stream.audio.frames())));
    }
    Ok(Json(json!({
        "points": points,
        "sample_rate": stream.audio.sample_rate(),
        "frames": stream.audio.frames(),
        "checksum": stream.checksum,
        "pairs": min_max_envelope(stream.audio.samples(), points),
    })))
}

/// Onset parameters; `R` is accepted for the decimation factor.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OnsetRequest {
    #[serde(alias = "R")]
    decimation_factor: Option<usize>,
    smoothing_window_ms: Option<f64>,
    smoothing_shape: Option<SmoothingShape>,
    rdf_floor: Option<f64>,
    threshold: Option<f64>,
    min_spacing_s: Option<f64>,
    loudness_window_ms: Option<f64>,
    min_relative_loudness: Option<f64>,
}

fn onsets_json(revision: u64, checksum: &str, onsets: &OnsetList) -> serde_json::Value {
    json!({
        "revision": revision,
        "checksum": checksum,
        "times": onsets.times(),
        "loudness": onsets.loudness(),
        "config": onsets.config_used(),
    })
}

fn trajectory_json(revision: u64, traj: &PulseTrajectory) -> serde_json::Value {
    json!({ "revision": revision, "frame_times": traj.frame_times, "pulse_s": traj.pulse_s })
}

async fn run_onsets(
    State(state): State<Arc<AppState>>,
    Path((id, index)): Path<(String, usize)>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let r: OnsetRequest = parse_body(&body)?;
    let flags = OnsetOverride {
        decimation_factor: r.decimation_factor,
        smoothing_window_ms: r.smoothing_window_ms,
        smoothing_shape: r.smoothing_shape,
        rdf_floor: r.rdf_floor,
        threshold: r.threshold,
        min_spacing_s: r.min_spacing_s,
        loudness_window_ms: r.loudness_window_ms,
        min_relative_loudness: r.min_relative_loudness,
    };
    let session = session(&state, &id).await?;
    let mut s = session.lock().await;
    let audio = s.stream(index)?.audio.clone();
    let config: OnsetConfig = s.config.onsets_for(index, &flags);
    config.validate()?;
    let onsets = blocking(move || stream_onsets(&audio, &config)).await?;
    let stored = used_override(&s.config.onsets, &onsets);
    s.config.stream_onsets.insert(index, stored);
    let stream = &mut s.streams[index];
    stream.onsets = Some(onsets);
    stream.trajectory = None;
    s.touch();
    persist(&state, &s)?;
    let stream = &s.streams[index];
    Ok(Json(onsets_json(s.revision, &stream.checksum, stream.onsets.as_ref().expect("just set"))))
}

/// Remembers the parameters last used on a stream as its override.
fn used_override(base: &OnsetConfig, onsets: &OnsetList) -> OnsetOverride {
    let used = onsets.config_used();
    let differs = |a: f64, b: f64| (a != b).then_some(a);
    OnsetOverride {
        decimation_factor: (used.decimation_factor != base.decimation_factor).then_some(used.decimation_factor),
        smoothing_window_ms: differs(used.smoothing_window_ms, base.smoothing_window_ms),
        smoothing_shape: (used.smoothing_shape != base.smoothing_shape).then_some(used.smoothing_shape),
        rdf_floor: differs(used.rdf_floor, base.rdf_floor),
        threshold: differs(used.threshold, base.threshold),
        min_spacing_s: differs(used.min_spacing_s, base.min_spacing_s),
        loudness_window_ms: differs(used.loudness_window_ms, base.loudness_window_ms),
        min_relative_loudness: differs(used.min_relative_loudness, base.min_relative_loudness),
    }
}

async fn get_onsets(State(state): State<Arc<AppState>>, Path((id, index)): Path<(String, usize)>) -> ApiResult<Json<serde_json::Value>> {
    let session = session(&state, &id).await?;
    let s = session.lock().await;
    let stream = s.stream(index)?;
    let onsets = stream.onsets.as_ref().ok_or_else(|| ApiError::conflict("onsets not computed for this stream"))?;
    Ok(Json(onsets_json(s.revision, &stream.checksum, onsets)))
}

async fn run_tatum(
    State(state): State<Arc<AppState>>,
    Path((id, index)): Path<(String, usize)>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let session = session(&state, &id).await?;
    let mut s = session.lock().await;
    let config: TatumConfig = if body.iter().all(u8::is_ascii_whitespace) {
        s.config.tatum.clone()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::invalid(e.to_string()))?
    };
    config.validate()?;
    let stream = s.stream(index)?;
    let onsets = stream.onsets.clone().ok_or_else(|| ApiError::conflict("run onsets before tatum"))?;
    let duration = stream.audio.duration_s();
    let tatum = config.clone();
    let traj = blocking(move || stream_trajectory(&onsets, duration, &tatum)).await?;
    s.config.tatum = config;
    s.streams[index].trajectory = Some(traj);
    s.touch();
    persist(&state, &s)?;
    Ok(Json(trajectory_json(s.revision, s.streams[index].trajectory.as_ref().expect("just set"))))
}

async fn get_trajectory(State(state): State<Arc<AppState>>, Path((id, index)): Path<(String, usize)>) -> ApiResult<Json<serde_json::Value>> {
    let session = session(&state, &id).await?;
    let s = session.lock().await;
    let traj = s.stream(index)?.trajectory.as_ref().ok_or_else(|| ApiError::conflict("tatum not computed for this stream"))?;
    Ok(Json(trajectory_json(s.revision, traj)))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: String,
}

async fn export(
    State(state): State<Arc<AppState>>,
    Path((id, index)): Path<(String, usize)>,
    Query(query): Query<ExportQuery>,
) -> ApiResult<Response> {
    let session = session(&state, &id).await?;
    let s = session.lock().await;
    let stream = s.stream(index)?;
    let onsets = || stream.onsets.as_ref().ok_or_else(|| ApiError::conflict("onsets not computed for this stream"));
    let (mime, ext, bytes) = match query.format.as_str() {
        "wav" => ("audio/wav", "wav", write_wav_bytes(&stream.audio, SampleFormat::Float32)?),
        "midi" => ("audio/midi", "mid", to_midi(onsets()?, &s.config.midi)?),
        "csv" => ("text/csv", "onsets.csv", onsets_csv(onsets()?).into_bytes()),
        "pulse" => {
            let traj = stream.trajectory.as_ref().ok_or_else(|| ApiError::conflict("tatum not computed for this stream"))?;
            ("text/csv", "pulse.csv", trajectory_csv(traj).into_bytes())
        }
        other => return Err(ApiError::invalid(format!("unknown export format `{other}`"))),
    };
    let disposition = format!("attachment; filename=\"stream_{index}.{ext}\"");
    Ok(([(header::CONTENT_TYPE, mime.to_string()), (header::CONTENT_DISPOSITION, disposition)], bytes).into_response())
}

/// Mirrors a session's current results into the persistence directory.
fn persist(state: &AppState, s: &Session) -> ApiResult<()> {
    let Some(root) = &state.persist else { return Ok(()) };
    let dir = root.join(&s.id);
    let io = |e: std::io::Error| ApiError::from(Error::Io(e));
    std::fs::create_dir_all(&dir).map_err(io)?;
    for (i, stream) in s.streams.iter().enumerate() {
        let p = StreamPaths::new(&dir, i);
        if !p.wav.exists() {
            write_wav(&stream.audio, &p.wav, SampleFormat::Float32)?;
        }
        if let Some(onsets) = &stream.onsets {
            std::fs::write(&p.onsets, onsets_csv(onsets)).map_err(io)?;
            std::fs::write(&p.midi, to_midi(onsets, &s.config.midi)?).map_err(io)?;
        }
        if let Some(traj) = &stream.trajectory {
            std::fs::write(&p.pulse, trajectory_csv(traj)).map_err(io)?;
        }
    }
    std::fs::write(dir.join(crate::pipeline::CONFIG_FILE), s.config.to_json()).map_err(io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_pairs() {
        let samples: Vec<f64> = (0..44100).map(|i| ((i % 100) as f64 - 50.0) / 50.0).collect();
        let pairs = min_max_envelope(&samples, 800);
        assert_eq!(pairs.len(), 800);
        assert!(pairs.iter().all(|[lo, hi]| lo <= hi));
        assert_eq!(min_max_envelope(&[1.0, -1.0, 0.5], 3), vec![[1.0, 1.0], [-1.0, -1.0], [0.5, 0.5]]);
        assert_eq!(min_max_envelope(&[1.0, -1.0, 0.5, 0.2], 2), vec![[-1.0, 1.0], [0.2, 0.5]]);
    }
}
