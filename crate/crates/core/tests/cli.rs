mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{random_layout, render};
use hybseg::cli::{segment_clip, RunConfig, StrategyKind};
use hybseg::{compute_stats, encode_wav, parse_manifest, AudioClip, Segment};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn hybseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybseg"))
        .args(args)
        .env_remove("HYBSEG_STRATEGY")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).to_str().unwrap().to_string()
}

/// A 95 s talk at 16 kHz with irregular pauses.
fn talk(dir: &Path) -> (PathBuf, AudioClip) {
    let mut rng = StdRng::seed_from_u64(11);
    let clip = render(&random_layout(&mut rng, 16000, 95_000, (800, 9_000), (60, 1_400)), &mut rng);
    let path = dir.join("talk.wav");
    fs::write(&path, encode_wav(&clip)).unwrap();
    (path, clip)
}

fn durations(manifest: &str) -> Vec<f64> {
    parse_manifest(manifest).unwrap().iter().map(|e| e.duration.as_secs_f64()).collect()
}

#[test]
fn fixed_manifest_has_ceil_entries() {
    let dir = tempfile::tempdir().unwrap();
    let (path, clip) = talk(dir.path());
    let text = stdout(&hybseg(&["segment", "--strategy", "fixed", "--length", "20", path.to_str().unwrap()]));
    let expected = (clip.duration().as_secs_f64() / 20.0).ceil() as usize;
    assert_eq!(durations(&text).len(), expected);
    assert!(text.starts_with("# strategy: fixed\n# length: 20\n"));
    assert!(text.contains("- {wav: talk.wav, offset: 20.000000, duration: 20.000000}\n"));
}

#[test]
fn hybrid_durations_within_max() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = talk(dir.path());
    let text = stdout(&hybseg(&["segment", "--strategy", "hybrid", "--min-len", "17", "--max-len", "20", path.to_str().unwrap()]));
    let d = durations(&text);
    assert!(d.len() >= 5);
    assert!(d.iter().all(|&x| x <= 20.0), "{d:?}");
}

#[test]
fn srpol_streaming_is_rejected() {
    let out = hybseg(&["segment", "--strategy", "srpol", "--streaming", "talk.wav"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("strategy requires full audio"));
}

#[test]
fn streaming_manifest_matches_batch() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = talk(dir.path());
    for strategy in ["hybrid", "hybrid-force"] {
        let batch = stdout(&hybseg(&["segment", "--strategy", strategy, "--min-len", "5", "--max-len", "9", path.to_str().unwrap()]));
        let streamed = stdout(&hybseg(&[
            "segment", "--strategy", strategy, "--min-len", "5", "--max-len", "9", "--streaming", path.to_str().unwrap(),
        ]));
        assert_eq!(parse_manifest(&batch).unwrap(), parse_manifest(&streamed).unwrap());
    }
}

#[test]
fn decode_failure_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.wav");
    fs::write(&bad, b"RIFF\x10\x00\x00\x00WAVEjunk").unwrap();
    let out = hybseg(&["segment", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.wav"));
    let missing = hybseg(&["segment", "/nonexistent/gone.wav"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("gone.wav"));
}

#[test]
fn output_is_deterministic_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = talk(dir.path());
    let out_a = dir.path().join("a.yaml");
    let out_b = dir.path().join("b.yaml");
    for out in [&out_a, &out_b] {
        let o = hybseg(&["segment", "--strategy", "hybrid-force", path.to_str().unwrap(), "-o", out.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 3, "no temp files left behind: {names:?}");
}

#[test]
fn multiple_inputs_keep_argument_order() {
    let dir = tempfile::tempdir().unwrap();
    let (path, clip) = talk(dir.path());
    let second = dir.path().join("second.wav");
    fs::write(&second, encode_wav(&AudioClip::new(clip.samples()[..160_000].to_vec(), 16000).unwrap())).unwrap();
    let text = stdout(&hybseg(&["segment", "--strategy", "fixed", second.to_str().unwrap(), path.to_str().unwrap()]));
    let wavs: Vec<String> = parse_manifest(&text).unwrap().into_iter().map(|e| e.wav).collect();
    assert_eq!(wavs.iter().filter(|w| *w == "second.wav").count(), 1);
    assert_eq!(wavs[0], "second.wav");
    assert!(wavs[1..].iter().all(|w| w == "talk.wav"));
}

#[test]
fn env_and_config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = talk(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "strategy = \"fixed\"\nlength = 30\nformat = \"jsonl\"\n").unwrap();
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_hybseg"));
        c.args(["segment", "--config", cfg.to_str().unwrap()]).args(extra).arg(&path).env_remove("HYBSEG_LENGTH");
        if let Some(v) = env {
            c.env("HYBSEG_LENGTH", v);
        }
        stdout(&c.output().unwrap())
    };
    let from_file = run(None, &[]);
    assert!(from_file.starts_with("{\"config\":"));
    assert_eq!(durations(&from_file)[0], 30.0);
    assert_eq!(durations(&run(Some("25"), &[]))[0], 25.0);
    assert_eq!(durations(&run(Some("25"), &["--length", "10"]))[0], 10.0);
}

#[test]
fn emit_dropped_marks_entries() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = talk(dir.path());
    let text = stdout(&hybseg(&["segment", "--strategy", "vad", "--emit-dropped", path.to_str().unwrap()]));
    let entries = parse_manifest(&text).unwrap();
    assert!(entries.iter().any(|e| e.dropped));
    let segs: Vec<Segment> = entries.iter().map(|e| e.segment()).collect();
    common::tiles(&segs, segs.last().unwrap().end).unwrap();
    let kept_only = stdout(&hybseg(&["segment", "--strategy", "vad", path.to_str().unwrap()]));
    assert!(!kept_only.contains("dropped: true"));
}

#[test]
fn segment_then_stats_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let (path, clip) = talk(dir.path());
    let manifest = dir.path().join("vad.yaml");
    stdout(&hybseg(&["segment", "--strategy", "vad", path.to_str().unwrap(), "-o", manifest.to_str().unwrap()]));
    let total = format!("{}", clip.duration());
    let report = stdout(&hybseg(&["stats", manifest.to_str().unwrap(), "--total", &total]));

    let config = RunConfig { strategy: StrategyKind::Vad, ..RunConfig::default() };
    let expected = compute_stats(&segment_clip(&clip, &config).unwrap(), clip.duration());
    assert_eq!(report, expected.to_table());
    assert!(expected.pct_filtered > 0.0);
}

#[test]
fn stats_examples() {
    let report = stdout(&hybseg(&["stats", &fixture("three_segments.yaml")]));
    assert_eq!(
        report,
        "% filtered        20.00\nNum segm.             2\nMax len (s)        6.00\nMin len (s)        2.00\nAvg len (s)        4.00\n"
    );
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&hybseg(&["stats", "--json", &fixture("three_segments.yaml")]))).unwrap();
    assert_eq!(json["num_segments"], 2);
    assert_eq!(json["avg_len"], 4.0);

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.yaml");
    fs::write(&empty, "[]\n").unwrap();
    let report = stdout(&hybseg(&["stats", empty.to_str().unwrap()]));
    assert!(report.contains("Num segm.             0"));
    assert!(report.contains("Max len (s)           -"));

    let bad = dir.path().join("bad.yaml");
    fs::write(&bad, "- {wav: a.wav, offset: zero}\n").unwrap();
    assert!(!hybseg(&["stats", bad.to_str().unwrap()]).status.success());
}

#[test]
fn compare_examples() {
    let dir = tempfile::tempdir().unwrap();
    let clip = AudioClip::new(vec![0; 40 * 8000], 8000).unwrap();
    let wav = dir.path().join("forty.wav");
    fs::write(&wav, encode_wav(&clip)).unwrap();
    let manifest = |len: &str| {
        let out = dir.path().join(format!("f{len}.yaml"));
        stdout(&hybseg(&["segment", "--strategy", "fixed", "--length", len, wav.to_str().unwrap(), "-o", out.to_str().unwrap()]));
        out.to_str().unwrap().to_string()
    };
    let (f20, f10) = (manifest("20"), manifest("10"));
    let json = |args: &[&str]| -> serde_json::Value { serde_json::from_str(&stdout(&hybseg(args))).unwrap() };
    let score = json(&["compare", &f20, &f10, "--tolerance", "0.1", "--json"]);
    assert_eq!(score["precision"], 1.0);
    assert_eq!(score["hits"], 1);
    assert!((score["recall"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(json(&["compare", &f10, &f10, "--json"])["f1"], 1.0);

    let shifted = dir.path().join("shifted.yaml");
    fs::write(&shifted, "- {wav: forty.wav, offset: 0, duration: 10.5}\n- {wav: forty.wav, offset: 10.5, duration: 29.5}\n").unwrap();
    assert_eq!(json(&["compare", shifted.to_str().unwrap(), &f20, "--tolerance", "0", "--json"])["f1"], 0.0);

    let short = dir.path().join("short.yaml");
    fs::write(&short, "- {wav: forty.wav, offset: 0, duration: 30}\n").unwrap();
    let out = hybseg(&["compare", short.to_str().unwrap(), &f20]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("different durations"));
}

#[test]
fn raw_pcm_input() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("speech.pcm");
    let samples: Vec<u8> = (0..48_000i32).flat_map(|i| ((((i as f64) * 0.2).sin() * 8000.0) as i16).to_le_bytes()).collect();
    fs::write(&raw, samples).unwrap();
    let text = stdout(&hybseg(&["segment", "--strategy", "fixed", "--length", "1", "--raw-rate", "16000", raw.to_str().unwrap()]));
    assert_eq!(durations(&text), vec![1.0, 1.0, 1.0]);
    let odd = dir.path().join("odd.pcm");
    fs::write(&odd, [0u8; 3]).unwrap();
    assert!(!hybseg(&["segment", "--raw-rate", "16000", odd.to_str().unwrap()]).status.success());
}

#[test]
fn no_inputs_is_an_error() {
    let out = hybseg(&["segment"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no input files"));
}
