//! Energy-based voice activity detection and pause extraction.
//!
//! The detector exposes the usual WebRTC-style parameter surface
//! (aggressiveness 0..=3, 10/20/30 ms frames) but the decision rule is a
//! plain energy test, so labels are reproducible bit for bit and are not
//! compatible with WebRTC's GMM model:
//!
//! * frame energy is the mean squared amplitude, accumulated in `u64`;
//! * the noise floor is the 10th percentile of the energies of the last
//!   `floor_window` frames (the current frame included), clamped to
//!   `[FLOOR_MIN_ENERGY, FLOOR_MAX_ENERGY]`; before the window fills the
//!   percentile is taken over the frames seen so far;
//! * a frame is raw speech when `energy > floor * multiplier(mode)`;
//! * a label stays speech for `hangover(mode)` frames after the last raw
//!   speech frame.
//!
//! Every quantity is causal, so [`VadState`] labels a live stream exactly as
//! [`classify`] labels the whole clip. The noise floor does not depend on the
//! mode, and both the multiplier and the hangover are monotone in it, so a
//! more aggressive mode can only remove speech frames.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::audio_io::{frames, AudioClip, AudioError, Frame, FrameMs};
use crate::time::Time;

/// Lowest noise floor, in squared amplitude units.
pub const FLOOR_MIN_ENERGY: u64 = 100;
/// Highest noise floor (RMS 1000, about -30 dBFS).
pub const FLOOR_MAX_ENERGY: u64 = 1_000_000;
pub const DEFAULT_FLOOR_WINDOW: usize = 100;

/// Threshold multiplier per mode, in tenths.
const MULTIPLIER_TENTHS: [u64; 4] = [20, 35, 50, 80];
const HANGOVER_FRAMES: [u32; 4] = [8, 6, 4, 2];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VadError {
    #[error("aggressiveness must be in 0..=3, got {0}")]
    InvalidAggressiveness(u8),
    #[error("floor window must hold at least one frame")]
    EmptyFloorWindow,
    #[error("minimum pause {min_pause} s is shorter than one {frame_ms} frame")]
    PauseShorterThanFrame { min_pause: Time, frame_ms: FrameMs },
    #[error("invalid label character {0:?} (expected S or N)")]
    InvalidLabel(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Aggressiveness(u8);

impl Aggressiveness {
    pub const ALL: [Aggressiveness; 4] =
        [Aggressiveness(0), Aggressiveness(1), Aggressiveness(2), Aggressiveness(3)];

    pub fn new(mode: u8) -> Result<Self, VadError> {
        if mode > 3 {
            return Err(VadError::InvalidAggressiveness(mode));
        }
        Ok(Aggressiveness(mode))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn multiplier_tenths(self) -> u64 {
        MULTIPLIER_TENTHS[self.0 as usize]
    }

    pub fn hangover_frames(self) -> u32 {
        HANGOVER_FRAMES[self.0 as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VadConfig {
    pub aggressiveness: Aggressiveness,
    pub frame_ms: FrameMs,
    pub floor_window: usize,
}

impl VadConfig {
    pub fn new(aggressiveness: u8, frame_ms: FrameMs) -> Result<Self, VadError> {
        Ok(Self {
            aggressiveness: Aggressiveness::new(aggressiveness)?,
            frame_ms,
            floor_window: DEFAULT_FLOOR_WINDOW,
        })
    }

    pub fn with_floor_window(mut self, frames: usize) -> Result<Self, VadError> {
        if frames == 0 {
            return Err(VadError::EmptyFloorWindow);
        }
        self.floor_window = frames;
        Ok(self)
    }
}

impl Default for VadConfig {
    /// Mode 2 with 20 ms frames.
    fn default() -> Self {
        Self {
            aggressiveness: Aggressiveness(2),
            frame_ms: FrameMs::Ms20,
            floor_window: DEFAULT_FLOOR_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Speech,
    NonSpeech,
}

impl Label {
    pub fn is_speech(self) -> bool {
        self == Label::Speech
    }

    pub fn as_char(self) -> char {
        match self {
            Label::Speech => 'S',
            Label::NonSpeech => 'N',
        }
    }
}

/// Mean squared amplitude of the real samples in `frame`.
pub fn frame_energy(samples: &[i16]) -> u64 {
    if samples.is_empty() {
        return 0;
    }
    let sum: u64 = samples.iter().map(|&s| (s as i64 * s as i64) as u64).sum();
    sum / samples.len() as u64
}

/// Incremental detector state: the floor window and the hangover counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VadState {
    config: VadConfig,
    window: VecDeque<u64>,
    sorted: Vec<u64>,
    since_speech: Option<u32>,
}

impl VadState {
    pub fn new(config: VadConfig) -> Self {
        Self {
            config,
            window: VecDeque::with_capacity(config.floor_window + 1),
            sorted: Vec::with_capacity(config.floor_window + 1),
            since_speech: None,
        }
    }

    pub fn config(&self) -> &VadConfig {
        &self.config
    }

    pub fn push_frame(&mut self, frame: &Frame<'_>) -> Label {
        self.push_energy(frame_energy(frame.valid()))
    }

    pub fn push_energy(&mut self, energy: u64) -> Label {
        let at = self.sorted.partition_point(|&e| e < energy);
        self.sorted.insert(at, energy);
        self.window.push_back(energy);
        if self.window.len() > self.config.floor_window {
            let old = self.window.pop_front().expect("window is non-empty");
            let at = self.sorted.partition_point(|&e| e < old);
            self.sorted.remove(at);
        }

        let floor = self.noise_floor();
        let raw = energy as u128 * 10 > floor as u128 * self.config.aggressiveness.multiplier_tenths() as u128;
        self.since_speech = if raw { Some(0) } else { self.since_speech.map(|n| n.saturating_add(1)) };
        match self.since_speech {
            Some(n) if n <= self.config.aggressiveness.hangover_frames() => Label::Speech,
            _ => Label::NonSpeech,
        }
    }

    /// Current floor estimate (after the last pushed frame).
    pub fn noise_floor(&self) -> u64 {
        if self.sorted.is_empty() {
            return FLOOR_MIN_ENERGY;
        }
        let q = self.sorted[(self.sorted.len() - 1) / 10];
        q.clamp(FLOOR_MIN_ENERGY, FLOOR_MAX_ENERGY)
    }

    pub(crate) fn to_parts(&self) -> (Vec<u64>, Option<u32>) {
        (self.window.iter().copied().collect(), self.since_speech)
    }

    pub(crate) fn from_parts(config: VadConfig, window: Vec<u64>, since_speech: Option<u32>) -> Self {
        let mut sorted = window.clone();
        sorted.sort_unstable();
        Self {
            config,
            window: window.into(),
            sorted,
            since_speech,
        }
    }
}

/// Per-frame speech decisions for one clip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLabelTrack {
    labels: Vec<Label>,
    frame_ms: FrameMs,
    duration: Time,
}

impl FrameLabelTrack {
    /// Track whose duration is exactly `labels.len()` frames.
    pub fn from_labels(labels: Vec<Label>, frame_ms: FrameMs) -> Self {
        let duration = Time::from_micros(labels.len() as i64 * frame_ms.duration().as_micros());
        Self { labels, frame_ms, duration }
    }

    /// Track over audio of `duration`; the last frame may be partial.
    ///
    /// # Panics
    /// If `duration` does not fall inside the last frame.
    pub fn with_duration(labels: Vec<Label>, frame_ms: FrameMs, duration: Time) -> Self {
        let f = frame_ms.duration().as_micros();
        let n = labels.len() as i64;
        let d = duration.as_micros();
        let fits = if n == 0 { d == 0 } else { d > (n - 1) * f && d <= n * f };
        assert!(fits, "duration {duration} does not end in the last of {n} frames");
        Self { labels, frame_ms, duration }
    }

    /// Parses a one-character-per-frame `S`/`N` line.
    pub fn from_line(line: &str, frame_ms: FrameMs) -> Result<Self, VadError> {
        let labels = line
            .trim()
            .chars()
            .map(|c| match c {
                'S' => Ok(Label::Speech),
                'N' => Ok(Label::NonSpeech),
                other => Err(VadError::InvalidLabel(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_labels(labels, frame_ms))
    }

    pub fn to_line(&self) -> String {
        self.labels.iter().map(|l| l.as_char()).collect()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn frame_ms(&self) -> FrameMs {
        self.frame_ms
    }

    pub fn total_frames(&self) -> usize {
        self.labels.len()
    }

    pub fn duration(&self) -> Time {
        self.duration
    }

    pub fn frame_start(&self, index: usize) -> Time {
        Time::from_micros(index as i64 * self.frame_ms.duration().as_micros())
    }

    pub fn frame_end(&self, index: usize) -> Time {
        self.frame_start(index + 1).min(self.duration)
    }

    /// Maximal runs of equal labels as `(label, first_frame, last_frame)`.
    pub fn runs(&self) -> impl Iterator<Item = (Label, usize, usize)> + '_ {
        let mut i = 0;
        std::iter::from_fn(move || {
            let label = *self.labels.get(i)?;
            let first = i;
            while i < self.labels.len() && self.labels[i] == label {
                i += 1;
            }
            Some((label, first, i - 1))
        })
    }
}

impl fmt::Display for FrameLabelTrack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Labels every frame of `clip`.
pub fn classify(clip: &AudioClip, config: &VadConfig) -> Result<FrameLabelTrack, AudioError> {
    let mut state = VadState::new(*config);
    let labels = frames(clip, config.frame_ms)?.map(|f| state.push_frame(&f)).collect();
    Ok(FrameLabelTrack {
        labels,
        frame_ms: config.frame_ms,
        duration: clip.duration(),
    })
}

/// A maximal run of non-speech frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pause {
    pub start: Time,
    pub duration: Time,
    pub first_frame: usize,
    pub last_frame: usize,
}

impl Pause {
    /// Pause not tied to a label track; frame span is left empty.
    pub fn new(start: Time, duration: Time) -> Self {
        Self { start, duration, first_frame: 0, last_frame: 0 }
    }

    pub fn end(&self) -> Time {
        self.start + self.duration
    }
}

/// All maximal non-speech runs lasting at least `min_pause`, in time order.
///
/// The duration of a run touching the end of the track is cut at the end of
/// the audio, so it can fall below `frame_ms` multiples only there.
pub fn detect_pauses(track: &FrameLabelTrack, min_pause: Time) -> Result<Vec<Pause>, VadError> {
    if min_pause < track.frame_ms.duration() {
        return Err(VadError::PauseShorterThanFrame {
            min_pause,
            frame_ms: track.frame_ms,
        });
    }
    Ok(track
        .runs()
        .filter(|&(label, _, _)| label == Label::NonSpeech)
        .map(|(_, first, last)| {
            let start = track.frame_start(first);
            Pause {
                start,
                duration: track.frame_end(last) - start,
                first_frame: first,
                last_frame: last,
            }
        })
        .filter(|p| p.duration >= min_pause)
        .collect())
}
