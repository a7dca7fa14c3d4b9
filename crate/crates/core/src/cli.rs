//! Command-line frontend: `segment`, `stats` and `compare`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::audio_io::{decode_raw_pcm, decode_wav, frames, AudioClip, FrameMs};
use crate::manifest::{group_by_wav, parse_manifest, write_manifest, ManifestEntry, ManifestFormat};
use crate::metrics::{compute_stats, internal_boundaries, match_boundaries, normalize, BoundaryScore, SegStats};
use crate::segmenters::{HybridParams, Segment, SrpolParams, Strategy};
use crate::streaming::StreamSegmenter;
use crate::time::Time;
use crate::vad::{classify, detect_pauses, VadConfig};

#[derive(Debug, Parser)]
#[command(name = "hybseg", version, about = "Segment long speech recordings for translation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment audio files and write a manifest.
    Segment(SegmentArgs),
    /// Print statistics for a manifest.
    Stats(StatsArgs),
    /// Score the boundaries of one manifest against another.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Fixed,
    Vad,
    Srpol,
    Hybrid,
    HybridForce,
}

impl StrategyKind {
    fn name(self) -> &'static str {
        match self {
            StrategyKind::Fixed => "fixed",
            StrategyKind::Vad => "vad",
            StrategyKind::Srpol => "srpol",
            StrategyKind::Hybrid => "hybrid",
            StrategyKind::HybridForce => "hybrid-force",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Yaml,
    Jsonl,
}

#[derive(Debug, Default, Args)]
pub struct SegmentArgs {
    /// WAV files (or raw PCM with --raw-rate).
    pub inputs: Vec<PathBuf>,
    /// TOML file with any of the options below; flags and env vars win.
    #[arg(long, env = "HYBSEG_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, env = "HYBSEG_STRATEGY")]
    pub strategy: Option<StrategyKind>,
    /// Segment length for `fixed`, seconds.
    #[arg(long, env = "HYBSEG_LENGTH")]
    pub length: Option<f64>,
    /// Window start for the hybrid strategies, seconds.
    #[arg(long, env = "HYBSEG_MIN_LEN")]
    pub min_len: Option<f64>,
    /// Window end for hybrid, recursion threshold for srpol, seconds.
    #[arg(long, env = "HYBSEG_MAX_LEN")]
    pub max_len: Option<f64>,
    /// Pause length that forces a split in `hybrid-force`.
    #[arg(long, env = "HYBSEG_JUNCTURE_MS")]
    pub juncture_ms: Option<u32>,
    /// VAD mode 0-3.
    #[arg(long, env = "HYBSEG_AGGRESSIVENESS")]
    pub aggressiveness: Option<u8>,
    /// VAD frame size: 10, 20 or 30.
    #[arg(long, env = "HYBSEG_FRAME_MS")]
    pub frame_ms: Option<u32>,
    /// Shortest non-speech run counted as a pause; defaults to one frame.
    #[arg(long, env = "HYBSEG_MIN_PAUSE_MS")]
    pub min_pause_ms: Option<u32>,
    /// Run the incremental segmenter (hybrid strategies only).
    #[arg(long, env = "HYBSEG_STREAMING")]
    pub streaming: bool,
    /// Manifest path; stdout when absent.
    #[arg(short, long, env = "HYBSEG_OUTPUT")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, env = "HYBSEG_FORMAT")]
    pub format: Option<FormatArg>,
    /// Include dropped segments with `dropped: true`.
    #[arg(long, env = "HYBSEG_EMIT_DROPPED")]
    pub emit_dropped: bool,
    /// Treat inputs as headerless 16-bit mono PCM at this rate.
    #[arg(long, env = "HYBSEG_RAW_RATE")]
    pub raw_rate: Option<u32>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub manifest: PathBuf,
    /// Total audio duration in seconds; defaults to the manifest's extent.
    #[arg(long)]
    pub total: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub hypothesis: PathBuf,
    pub reference: PathBuf,
    /// Matching tolerance, seconds.
    #[arg(long, default_value_t = 0.1)]
    pub tolerance: f64,
    /// Largest allowed difference between the two manifests' extents, seconds.
    #[arg(long, default_value_t = 0.03)]
    pub max_duration_diff: f64,
    #[arg(long)]
    pub json: bool,
}

/// Config file contents; every segment flag has a key of the same name
/// with underscores.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub inputs: Option<Vec<PathBuf>>,
    pub strategy: Option<StrategyKind>,
    pub length: Option<f64>,
    pub min_len: Option<f64>,
    pub max_len: Option<f64>,
    pub juncture_ms: Option<u32>,
    pub aggressiveness: Option<u8>,
    pub frame_ms: Option<u32>,
    pub min_pause_ms: Option<u32>,
    pub streaming: Option<bool>,
    pub output: Option<PathBuf>,
    pub format: Option<ManifestFormat>,
    pub emit_dropped: Option<bool>,
    pub raw_rate: Option<u32>,
}

/// Effective settings for one `segment` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub strategy: StrategyKind,
    pub length: f64,
    pub min_len: f64,
    pub max_len: f64,
    pub juncture_ms: u32,
    pub aggressiveness: u8,
    pub frame_ms: u32,
    pub min_pause_ms: u32,
    pub streaming: bool,
    pub output: Option<PathBuf>,
    pub format: ManifestFormat,
    pub emit_dropped: bool,
    pub raw_rate: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            strategy: StrategyKind::Hybrid,
            length: 20.0,
            min_len: 17.0,
            max_len: 20.0,
            juncture_ms: 550,
            aggressiveness: 2,
            frame_ms: 20,
            min_pause_ms: 20,
            streaming: false,
            output: None,
            format: ManifestFormat::Yaml,
            emit_dropped: false,
            raw_rate: None,
        }
    }
}

impl RunConfig {
    /// Flags (and their env vars) over the config file over defaults.
    pub fn resolve(args: &SegmentArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("{}: cannot read config", path.display()))?;
                toml::from_str::<FileConfig>(&text).with_context(|| format!("{}: invalid config", path.display()))?
            }
            None => FileConfig::default(),
        };
        let d = RunConfig::default();
        let frame_ms = args.frame_ms.or(file.frame_ms).unwrap_or(d.frame_ms);
        Ok(Self {
            inputs: if args.inputs.is_empty() { file.inputs.unwrap_or_default() } else { args.inputs.clone() },
            strategy: args.strategy.or(file.strategy).unwrap_or(d.strategy),
            length: args.length.or(file.length).unwrap_or(d.length),
            min_len: args.min_len.or(file.min_len).unwrap_or(d.min_len),
            max_len: args.max_len.or(file.max_len).unwrap_or(d.max_len),
            juncture_ms: args.juncture_ms.or(file.juncture_ms).unwrap_or(d.juncture_ms),
            aggressiveness: args.aggressiveness.or(file.aggressiveness).unwrap_or(d.aggressiveness),
            frame_ms,
            min_pause_ms: args.min_pause_ms.or(file.min_pause_ms).unwrap_or(frame_ms),
            streaming: args.streaming || file.streaming.unwrap_or(d.streaming),
            output: args.output.clone().or(file.output),
            format: args
                .format
                .map(|f| match f {
                    FormatArg::Yaml => ManifestFormat::Yaml,
                    FormatArg::Jsonl => ManifestFormat::Jsonl,
                })
                .or(file.format)
                .unwrap_or(d.format),
            emit_dropped: args.emit_dropped || file.emit_dropped.unwrap_or(d.emit_dropped),
            raw_rate: args.raw_rate.or(file.raw_rate),
        })
    }

    pub fn segmentation_strategy(&self) -> Result<Strategy> {
        let secs = Time::from_secs_f64;
        Ok(match self.strategy {
            StrategyKind::Fixed => {
                ensure!(self.length > 0.0, "segment length must be positive, got {}", self.length);
                Strategy::Fixed { length: secs(self.length) }
            }
            StrategyKind::Vad => Strategy::VadMerge,
            StrategyKind::Srpol => Strategy::Srpol(SrpolParams::new(secs(self.max_len))?),
            StrategyKind::Hybrid => Strategy::Hybrid(HybridParams::new(secs(self.min_len), secs(self.max_len))?),
            StrategyKind::HybridForce => Strategy::Hybrid(
                HybridParams::new(secs(self.min_len), secs(self.max_len))?
                    .with_force_split(Time::from_millis(self.juncture_ms.into()))?,
            ),
        })
    }

    pub fn vad_config(&self) -> Result<VadConfig> {
        Ok(VadConfig::new(self.aggressiveness, FrameMs::try_from(self.frame_ms)?)?)
    }

    /// Checks everything that does not need the audio.
    pub fn validate(&self) -> Result<()> {
        let strategy = self.segmentation_strategy()?;
        self.vad_config()?;
        ensure!(
            self.min_pause_ms >= self.frame_ms,
            "min_pause_ms {} is shorter than one {} ms frame",
            self.min_pause_ms,
            self.frame_ms
        );
        if self.streaming {
            match self.strategy {
                StrategyKind::Srpol => bail!("strategy requires full audio: srpol cannot run with --streaming"),
                _ if !strategy.streamable() => {
                    bail!("--streaming is only supported by the hybrid strategies, not {}", self.strategy.name())
                }
                _ => ensure!(
                    self.min_pause_ms == self.frame_ms,
                    "--streaming counts every non-speech run as a pause; min_pause_ms must equal frame_ms"
                ),
            }
        }
        if let Some(rate) = self.raw_rate {
            ensure!(rate > 0, "raw sample rate must be positive");
        }
        Ok(())
    }

    /// Key/value pairs echoed at the top of the manifest.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![("strategy", self.strategy.name().to_string())];
        match self.strategy {
            StrategyKind::Fixed => h.push(("length", self.length.to_string())),
            StrategyKind::Vad => {}
            StrategyKind::Srpol => h.push(("max_len", self.max_len.to_string())),
            StrategyKind::Hybrid => {
                h.push(("min_len", self.min_len.to_string()));
                h.push(("max_len", self.max_len.to_string()));
            }
            StrategyKind::HybridForce => {
                h.push(("min_len", self.min_len.to_string()));
                h.push(("max_len", self.max_len.to_string()));
                h.push(("juncture_ms", self.juncture_ms.to_string()));
            }
        }
        h.push(("aggressiveness", self.aggressiveness.to_string()));
        h.push(("frame_ms", self.frame_ms.to_string()));
        h.push(("min_pause_ms", self.min_pause_ms.to_string()));
        h.push(("streaming", self.streaming.to_string()));
        h.push(("emit_dropped", self.emit_dropped.to_string()));
        if let Some(rate) = self.raw_rate {
            h.push(("raw_rate", rate.to_string()));
        }
        h.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Segments one decoded clip under `config`.
pub fn segment_clip(clip: &AudioClip, config: &RunConfig) -> Result<Vec<Segment>> {
    let strategy = config.segmentation_strategy()?;
    let vad = config.vad_config()?;
    if config.streaming {
        let Strategy::Hybrid(params) = strategy else {
            bail!("strategy requires full audio");
        };
        let mut stream = StreamSegmenter::new(params, vad);
        let mut out = Vec::new();
        for frame in frames(clip, vad.frame_ms)? {
            out.extend(stream.push_frame(&frame)?);
        }
        out.extend(stream.flush());
        return Ok(out);
    }
    let track = classify(clip, &vad)?;
    let pauses = detect_pauses(&track, Time::from_millis(config.min_pause_ms.into()))?;
    Ok(strategy.segment(&pauses, clip.duration()))
}

fn load_clip(path: &Path, raw_rate: Option<u32>) -> Result<AudioClip> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    let clip = match raw_rate {
        Some(rate) => decode_raw_pcm(&bytes, rate),
        None => decode_wav(&bytes),
    };
    clip.with_context(|| format!("{}: cannot decode", path.display()))
}

fn wav_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Renders the manifest for `config`; inputs are processed in parallel and
/// listed in command-line order.
pub fn render_segment_manifest(config: &RunConfig) -> Result<String> {
    config.validate()?;
    ensure!(!config.inputs.is_empty(), "no input files");
    let per_file: Vec<Vec<ManifestEntry>> = config
        .inputs
        .par_iter()
        .map(|path| {
            let clip = load_clip(path, config.raw_rate)?;
            let segments = segment_clip(&clip, config).with_context(|| format!("{}: segmentation failed", path.display()))?;
            let name = wav_name(path);
            Ok(segments
                .iter()
                .filter(|s| s.kept || config.emit_dropped)
                .map(|s| ManifestEntry::from_segment(&name, s))
                .collect())
        })
        .collect::<Result<_>>()?;
    let entries: Vec<ManifestEntry> = per_file.into_iter().flatten().collect();
    Ok(write_manifest(&entries, &config.header(), config.format))
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("{}: cannot create", path.display()))?;
    tmp.write_all(contents.as_bytes()).with_context(|| format!("{}: cannot write", path.display()))?;
    tmp.persist(path).map_err(|e| anyhow!("{}: cannot write: {}", path.display(), e.error))?;
    Ok(())
}

pub fn cmd_segment(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let text = render_segment_manifest(config)?;
    match &config.output {
        Some(path) => write_atomic(path, &text),
        None => out.write_all(text.as_bytes()).context("cannot write to stdout"),
    }
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
    parse_manifest(&text).with_context(|| format!("{}: malformed manifest", path.display()))
}

/// Sum over wavs of each wav's furthest segment end.
fn extent(entries: &[ManifestEntry]) -> Time {
    group_by_wav(entries)
        .iter()
        .map(|(_, segs)| segs.iter().map(|s| s.end).max().unwrap_or(Time::ZERO))
        .fold(Time::ZERO, |a, b| a + b)
}

pub fn stats_for(entries: &[ManifestEntry], total: Option<f64>) -> Result<SegStats> {
    let total = match total {
        Some(t) => {
            ensure!(t.is_finite() && t >= 0.0, "total duration must be a non-negative number");
            Time::from_secs_f64(t)
        }
        None => extent(entries),
    };
    let segments: Vec<Segment> = entries.iter().map(ManifestEntry::segment).collect();
    Ok(compute_stats(&segments, total))
}

pub fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    let stats = stats_for(&read_manifest(&args.manifest)?, args.total)?;
    let text = if args.json { stats.to_json() + "\n" } else { stats.to_table() };
    out.write_all(text.as_bytes()).context("cannot write to stdout")
}

pub fn compare_entries(
    hyp: &[ManifestEntry],
    reference: &[ManifestEntry],
    tolerance: f64,
    max_duration_diff: f64,
) -> Result<BoundaryScore> {
    ensure!(tolerance.is_finite() && tolerance >= 0.0, "tolerance must be a non-negative number");
    let tol = Time::from_secs_f64(tolerance);
    let slack = Time::from_secs_f64(max_duration_diff);
    let hyp = group_by_wav(hyp);
    let reference = group_by_wav(reference);
    let mut names: Vec<&str> = hyp.iter().map(|(w, _)| w.as_str()).collect();
    let mut ref_names: Vec<&str> = reference.iter().map(|(w, _)| w.as_str()).collect();
    names.sort_unstable();
    ref_names.sort_unstable();
    ensure!(names == ref_names, "manifests list different audio files");
    let (mut hits, mut nh, mut nr) = (0, 0, 0);
    for (wav, h) in &hyp {
        let r = &reference.iter().find(|(w, _)| w == wav).expect("same names").1;
        let end = |s: &[Segment]| s.iter().map(|x| x.end).max().unwrap_or(Time::ZERO);
        let (dh, dr) = (end(h), end(r));
        ensure!(
            (dh - dr).as_micros().abs() <= slack.as_micros(),
            "{wav}: manifests cover different durations ({dh} s vs {dr} s)"
        );
        let total = dh.max(dr);
        let bh = internal_boundaries(&normalize(h, total));
        let br = internal_boundaries(&normalize(r, total));
        hits += match_boundaries(&bh, &br, tol);
        nh += bh.len();
        nr += br.len();
    }
    Ok(BoundaryScore::from_counts(hits, nh, nr, tol))
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let score = compare_entries(
        &read_manifest(&args.hypothesis)?,
        &read_manifest(&args.reference)?,
        args.tolerance,
        args.max_duration_diff,
    )?;
    let text = if args.json {
        serde_json::to_string_pretty(&score)? + "\n"
    } else {
        score.to_report()
    };
    out.write_all(text.as_bytes()).context("cannot write to stdout")
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Segment(args) => cmd_segment(&RunConfig::resolve(args)?, out),
        Command::Stats(args) => cmd_stats(args, out),
        Command::Compare(args) => cmd_compare(args, out),
    }
}
