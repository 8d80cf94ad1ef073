mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use isa_rhythm::audio_io::{read_wav, write_wav, SampleFormat};
use isa_rhythm::render::{parse_onsets_csv, parse_trajectory_csv};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_isa-rhythm"));
    cmd.env_remove("ISA_RHYTHM_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(1), "{args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn drum_file(dir: &Path) -> PathBuf {
    let path = dir.join("drums.wav");
    write_wav(&common::drum_mix(4.0, 22050, 3).mixture, &path, SampleFormat::Float32).unwrap();
    path
}

fn onset_times(path: &Path) -> Vec<f64> {
    parse_onsets_csv(&std::fs::read_to_string(path).unwrap()).unwrap().0
}

#[test]
fn analyze_writes_every_stream_file_and_prints_paths() {
    let dir = tempfile::tempdir().unwrap();
    let input = drum_file(dir.path());
    let out = dir.path().join("out");
    let stdout = ok(&["analyze", s(&input), "--out", s(&out)]);
    let mut names: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(
        names,
        [
            "config.json",
            "stream_0.mid",
            "stream_0.onsets.csv",
            "stream_0.pulse.csv",
            "stream_0.wav",
            "stream_1.mid",
            "stream_1.onsets.csv",
            "stream_1.pulse.csv",
            "stream_1.wav",
        ]
    );
    assert_eq!(stdout.lines().count(), 8);
    assert!(stdout.lines().all(|l| Path::new(l).is_file()));
    for i in 0..2 {
        let wav = read_wav(out.join(format!("stream_{i}.wav"))).unwrap();
        assert_eq!(wav.frames(), 4 * 22050);
        assert!(!onset_times(&out.join(format!("stream_{i}.onsets.csv"))).is_empty());
    }
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = drum_file(dir.path());
    let out = dir.path().join("from-env");
    let output = bin().args(["analyze", s(&input)]).env("ISA_RHYTHM_OUT_DIR", &out).output().unwrap();
    assert!(output.status.success());
    assert!(out.join("stream_1.pulse.csv").is_file());
}

#[test]
fn missing_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let stderr = fails(&["analyze", s(&dir.path().join("absent.wav")), "--out", s(&out)]);
    assert!(stderr.starts_with("error: file not found"), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn failed_analysis_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("short.wav");
    write_wav(&isa_rhythm_core::AudioBuffer::mono(vec![0.1; 300], 22050).unwrap(), &input, SampleFormat::Pcm16).unwrap();
    let out = dir.path().join("out");
    let stderr = fails(&["analyze", s(&input), "--out", s(&out)]);
    assert!(stderr.starts_with("error:"), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn single_component_reproduces_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = drum_file(dir.path());
    let out = dir.path().join("out");
    ok(&["analyze", s(&input), "--components", "1", "--out", s(&out)]);
    assert!(!out.join("stream_1.wav").exists());
    let original = read_wav(&input).unwrap();
    let stream = read_wav(out.join("stream_0.wav")).unwrap();
    assert_eq!(stream.frames(), original.frames());
    let worst = original.samples().iter().zip(stream.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn stages_rerun_from_files_reproduce_the_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let input = drum_file(dir.path());
    let out = dir.path().join("out");
    ok(&["analyze", s(&input), "--out", s(&out)]);

    let stream = out.join("stream_1.wav");
    let onsets = dir.path().join("stream_1.onsets.csv");
    let midi = dir.path().join("again.mid");
    ok(&["onsets", s(&stream), "-o", s(&onsets), "--midi", s(&midi)]);
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&onsets), read(&out.join("stream_1.onsets.csv")));
    assert_eq!(read(&midi), read(&out.join("stream_1.mid")));

    let pulse = dir.path().join("again.pulse.csv");
    ok(&["tatum", s(&out.join("stream_1.onsets.csv")), "-o", s(&pulse)]);
    assert_eq!(read(&pulse), read(&out.join("stream_1.pulse.csv")));
}

#[test]
fn default_output_names_follow_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = drum_file(dir.path());
    ok(&["onsets", s(&input)]);
    let csv = dir.path().join("drums.onsets.csv");
    assert!(csv.is_file());
    ok(&["tatum", s(&csv)]);
    let traj = parse_trajectory_csv(&std::fs::read_to_string(dir.path().join("drums.pulse.csv")).unwrap()).unwrap();
    // duration comes from the sibling drums.wav
    assert_eq!(traj.frame_times.len(), 8);
}

#[test]
fn raising_the_threshold_never_adds_onsets() {
    let dir = tempfile::tempdir().unwrap();
    let input = drum_file(dir.path());
    let mut previous = usize::MAX;
    for threshold in ["0.05", "0.2", "0.4", "0.6", "0.8", "1.0"] {
        let csv = dir.path().join(format!("t{threshold}.onsets.csv"));
        ok(&["onsets", s(&input), "--threshold", threshold, "-o", s(&csv)]);
        let n = onset_times(&csv).len();
        assert!(n <= previous, "threshold {threshold}: {n} > {previous}");
        previous = n;
    }
}

#[test]
fn tatum_of_an_empty_onset_list_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("none.onsets.csv");
    std::fs::write(&csv, "time_s,loudness\n").unwrap();
    let pulse = dir.path().join("none.pulse.csv");
    let stdout = ok(&["tatum", s(&csv), "-o", s(&pulse)]);
    assert!(stdout.starts_with("0 frames"), "{stdout}");
    assert_eq!(std::fs::read_to_string(&pulse).unwrap(), "frame_end_s,pulse_s\n");
}

#[test]
fn stages_report_missing_intermediates() {
    let dir = tempfile::tempdir().unwrap();
    let absent = dir.path().join("stream_0.onsets.csv");
    let stderr = fails(&["tatum", s(&absent)]);
    assert!(stderr.starts_with("error: missing intermediate file"), "{stderr}");
    let stderr = fails(&["onsets", s(&dir.path().join("stream_0.wav"))]);
    assert!(stderr.starts_with("error: missing intermediate file"), "{stderr}");
    let stderr = fails(&["render", s(&absent), "--midi", s(&dir.path().join("x.mid"))]);
    assert!(stderr.starts_with("error: missing intermediate file"), "{stderr}");
}

#[test]
fn invalid_configuration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = drum_file(dir.path());
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"components": 2, "colour": "blue"}"#).unwrap();
    let stderr = fails(&["onsets", s(&input), "--config", s(&config)]);
    assert!(stderr.starts_with("error: invalid configuration"), "{stderr}");
    let stderr = fails(&["onsets", s(&input), "--threshold=-0.5"]);
    assert!(stderr.starts_with("error:"), "{stderr}");
}

#[test]
fn config_file_settings_apply() {
    let dir = tempfile::tempdir().unwrap();
    let input = drum_file(dir.path());
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"components": 3, "stft": {"window_length": 1024, "hop": 256}}"#).unwrap();
    let out = dir.path().join("out");
    ok(&["analyze", s(&input), "--config", s(&config), "--out", s(&out)]);
    assert!(out.join("stream_2.wav").is_file());
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["stft"]["hop"], 256);
    assert_eq!(written["components"], 3);
}

#[test]
fn render_writes_midi_and_clicks() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("grid.onsets.csv");
    std::fs::write(&csv, "time_s,loudness\n0.500000,1\n1.000000,0.5\n1.500000,0.25\n").unwrap();
    let sample = dir.path().join("click.wav");
    write_wav(&isa_rhythm_core::AudioBuffer::mono(vec![0.5; 100], 8000).unwrap(), &sample, SampleFormat::Pcm16).unwrap();
    let midi = dir.path().join("grid.mid");
    let clicks = dir.path().join("grid.clicks.wav");
    ok(&["render", s(&csv), "--midi", s(&midi), "--clicks", s(&clicks), "--sample", s(&sample), "--duration", "2"]);

    let bytes = std::fs::read(&midi).unwrap();
    let smf = midly::Smf::parse(&bytes).unwrap();
    let ons = smf.tracks[0]
        .iter()
        .filter(|e| matches!(e.kind, midly::TrackEventKind::Midi { message: midly::MidiMessage::NoteOn { vel, .. }, .. } if vel > 0))
        .count();
    assert_eq!(ons, 3);

    let audio = read_wav(&clicks).unwrap();
    assert_eq!(audio.sample_rate(), 8000);
    assert_eq!(audio.frames(), 16000);
    for (t, gain) in [(0.5, 1.0), (1.0, 0.5), (1.5, 0.25)] {
        let k = (t * 8000.0) as usize + 10;
        assert!(audio.samples()[k] > 0.0, "no click at {t}");
        assert!((audio.samples()[k] / audio.samples()[(0.5 * 8000.0) as usize + 10] - gain).abs() < 0.01);
    }
    assert_eq!(audio.samples()[2000], 0.0);

    let stderr = String::from_utf8(run(&["render", s(&csv), "--clicks", s(&clicks)]).stderr).unwrap();
    assert!(stderr.contains("--sample"), "{stderr}");
}
