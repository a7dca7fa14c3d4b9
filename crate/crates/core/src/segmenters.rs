//! Segmentation strategies.
//!
//! All strategies work on a pause list and the total audio duration, so the
//! VAD that produced the pauses can be swapped without touching them.
//! Splits inside a pause always land on the pause midpoint.
//!
//! The hybrid strategies look at each pause through the window of the
//! segment being built: a pause is cut at the segment's horizon
//! (`start + max_len`) before its length is compared or its midpoint is
//! taken. That keeps every boundary at or before the horizon and means a
//! boundary depends only on audio up to the horizon, which is what lets
//! [`crate::streaming`] emit the same boundaries on a live stream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Time;
use crate::vad::{FrameLabelTrack, Label, Pause};

pub const DEFAULT_MIN_LEN: Time = Time::from_millis(17_000);
pub const DEFAULT_MAX_LEN: Time = Time::from_millis(20_000);
pub const DEFAULT_JUNCTURE: Time = Time::from_millis(550);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("segment length must be positive, got {0} s")]
    NonPositiveLength(Time),
    #[error("min_len must be positive, got {0} s")]
    NonPositiveMinLen(Time),
    #[error("min_len {min} s exceeds max_len {max} s")]
    MinExceedsMax { min: Time, max: Time },
    #[error("juncture threshold must be at least 1 ms, got {0} s")]
    JunctureTooShort(Time),
}

/// A half-open interval `[start, end)` of the source audio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Time,
    pub end: Time,
    /// `false` for non-speech stretches a strategy filtered out.
    pub kept: bool,
}

impl Segment {
    pub fn kept(start: Time, end: Time) -> Self {
        debug_assert!(start < end, "empty segment [{start}, {end})");
        Self { start, end, kept: true }
    }

    pub fn dropped(start: Time, end: Time) -> Self {
        debug_assert!(start < end, "empty segment [{start}, {end})");
        Self { start, end, kept: false }
    }

    pub fn duration(&self) -> Time {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridParams {
    min_len: Time,
    max_len: Time,
    force_split: bool,
    juncture: Time,
}

impl HybridParams {
    pub fn new(min_len: Time, max_len: Time) -> Result<Self, ParamError> {
        if min_len <= Time::ZERO {
            return Err(ParamError::NonPositiveMinLen(min_len));
        }
        if min_len > max_len {
            return Err(ParamError::MinExceedsMax { min: min_len, max: max_len });
        }
        Ok(Self {
            min_len,
            max_len,
            force_split: false,
            juncture: DEFAULT_JUNCTURE,
        })
    }

    /// Enables splitting on every pause of at least `juncture`.
    pub fn with_force_split(mut self, juncture: Time) -> Result<Self, ParamError> {
        if juncture < Time::from_millis(1) {
            return Err(ParamError::JunctureTooShort(juncture));
        }
        self.force_split = true;
        self.juncture = juncture;
        Ok(self)
    }

    pub fn without_force_split(mut self) -> Self {
        self.force_split = false;
        self
    }

    pub fn min_len(&self) -> Time {
        self.min_len
    }

    pub fn max_len(&self) -> Time {
        self.max_len
    }

    pub fn force_split(&self) -> bool {
        self.force_split
    }

    pub fn juncture(&self) -> Time {
        self.juncture
    }
}

impl Default for HybridParams {
    /// 17 s / 20 s window, no forced splits.
    fn default() -> Self {
        Self {
            min_len: DEFAULT_MIN_LEN,
            max_len: DEFAULT_MAX_LEN,
            force_split: false,
            juncture: DEFAULT_JUNCTURE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SrpolParams {
    max_len: Time,
}

impl SrpolParams {
    pub fn new(max_len: Time) -> Result<Self, ParamError> {
        if max_len <= Time::ZERO {
            return Err(ParamError::NonPositiveLength(max_len));
        }
        Ok(Self { max_len })
    }

    pub fn max_len(&self) -> Time {
        self.max_len
    }
}

impl Default for SrpolParams {
    fn default() -> Self {
        Self { max_len: DEFAULT_MAX_LEN }
    }
}

/// Consecutive segments of `length`; the last one ends at `total`.
pub fn segment_fixed(total: Time, length: Time) -> Result<Vec<Segment>, ParamError> {
    if length <= Time::ZERO {
        return Err(ParamError::NonPositiveLength(length));
    }
    let mut out = Vec::new();
    let mut start = Time::ZERO;
    while start < total {
        let end = (start + length).min(total);
        out.push(Segment::kept(start, end));
        start = end;
    }
    Ok(out)
}

/// Speech runs become kept segments, non-speech runs dropped ones.
pub fn segment_vad_merge(track: &FrameLabelTrack) -> Vec<Segment> {
    track
        .runs()
        .filter_map(|(label, first, last)| {
            let start = track.frame_start(first);
            let end = track.frame_end(last);
            (start < end).then_some(Segment { start, end, kept: label == Label::Speech })
        })
        .collect()
}

/// VAD-merge over a pause list: pauses are dropped, the audio between them
/// kept. With one-frame pauses this equals [`segment_vad_merge`]; a larger
/// minimum pause merges speech across shorter gaps.
pub fn segment_pause_merge(pauses: &[Pause], total: Time) -> Vec<Segment> {
    let mut out = Vec::with_capacity(pauses.len() * 2 + 1);
    let mut at = Time::ZERO;
    for p in pauses {
        let (start, end) = (p.start.max(at), p.end().min(total));
        if start >= end {
            continue;
        }
        if at < start {
            out.push(Segment::kept(at, start));
        }
        out.push(Segment::dropped(start, end));
        at = end;
    }
    if at < total {
        out.push(Segment::kept(at, total));
    }
    out
}

/// Recursive bisection on the longest pause strictly inside `span`, until a
/// piece is shorter than `max_len` or holds no pause.
///
/// Needs the whole pause list up front, so it cannot run on a stream.
pub fn segment_srpol(span: Segment, pauses: &[Pause], params: &SrpolParams) -> Vec<Segment> {
    let inside: Vec<&Pause> = pauses
        .iter()
        .filter(|p| p.start > span.start && p.end() < span.end)
        .collect();
    let mut out = Vec::new();
    bisect(span.start, span.end, &inside, params.max_len, &mut out);
    out
}

fn bisect(start: Time, end: Time, pauses: &[&Pause], max_len: Time, out: &mut Vec<Segment>) {
    if end - start < max_len || pauses.is_empty() {
        out.push(Segment::kept(start, end));
        return;
    }
    let mut longest = 0;
    for (i, p) in pauses.iter().enumerate() {
        if p.duration > pauses[longest].duration {
            longest = i;
        }
    }
    let p = pauses[longest];
    let cut = p.start.midpoint(p.end());
    bisect(start, cut, &pauses[..longest], max_len, out);
    bisect(cut, end, &pauses[longest + 1..], max_len, out);
}

/// Pause-in-window segmentation without forced splits.
pub fn segment_hybrid(pauses: &[Pause], total: Time, params: &HybridParams) -> Vec<Segment> {
    debug_assert!(!params.force_split, "use segment_hybrid_force");
    hybrid_scan(pauses, total, &params.without_force_split())
}

/// Pause-in-window segmentation that also splits on every pause of at least
/// `params.juncture()` reached before the window closes.
pub fn segment_hybrid_force(pauses: &[Pause], total: Time, params: &HybridParams) -> Vec<Segment> {
    debug_assert!(params.force_split, "use segment_hybrid");
    hybrid_scan(pauses, total, params)
}

fn hybrid_scan(pauses: &[Pause], total: Time, params: &HybridParams) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = Time::ZERO;
    let mut first = 0;
    loop {
        while first < pauses.len() && pauses[first].start < start {
            first += 1;
        }
        let spans = pauses[first..].iter().map(|p| (p.start, p.end().min(total)));
        let boundary = if params.force_split {
            forced_boundary(start, params, spans.clone())
        } else {
            None
        };
        let boundary = boundary.or_else(|| {
            (start + params.max_len <= total).then(|| window_boundary(start, params, spans))
        });
        match boundary {
            Some(b) => {
                out.push(Segment::kept(start, b));
                start = b;
            }
            None => break,
        }
    }
    if start < total {
        out.push(Segment::kept(start, total));
    }
    out
}

/// First pause starting at or after `seg_start`, before the horizon, whose
/// part up to the horizon lasts at least the juncture threshold.
///
/// `pauses` yields `(start, end)` in time order; pauses starting before
/// `seg_start` are skipped.
pub(crate) fn forced_boundary(
    seg_start: Time,
    params: &HybridParams,
    pauses: impl Iterator<Item = (Time, Time)>,
) -> Option<Time> {
    let horizon = seg_start + params.max_len;
    pauses
        .skip_while(|&(s, _)| s < seg_start)
        .take_while(|&(s, _)| s < horizon)
        .map(|(s, e)| (s, e.min(horizon)))
        .find(|&(s, e)| e - s >= params.juncture)
        .map(|(s, e)| s.midpoint(e))
}

/// Midpoint of the longest pause starting in `[min_len, max_len]` after
/// `seg_start` (earliest on ties, cut at the horizon), or the horizon itself.
pub(crate) fn window_boundary(
    seg_start: Time,
    params: &HybridParams,
    pauses: impl Iterator<Item = (Time, Time)>,
) -> Time {
    let horizon = seg_start + params.max_len;
    let open = seg_start + params.min_len;
    let mut best: Option<(Time, Time)> = None;
    for (s, e) in pauses.skip_while(|&(s, _)| s < open).take_while(|&(s, _)| s <= horizon) {
        let e = e.min(horizon);
        if best.is_none_or(|(bs, be)| e - s > be - bs) {
            best = Some((s, e));
        }
    }
    best.map_or(horizon, |(s, e)| s.midpoint(e))
}

/// The strategies behind one interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Fixed { length: Time },
    VadMerge,
    Srpol(SrpolParams),
    Hybrid(HybridParams),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Fixed { .. } => "fixed",
            Strategy::VadMerge => "vad",
            Strategy::Srpol(_) => "srpol",
            Strategy::Hybrid(p) if p.force_split => "hybrid-force",
            Strategy::Hybrid(_) => "hybrid",
        }
    }

    /// Only the hybrid strategies have an incremental form.
    pub fn streamable(&self) -> bool {
        matches!(self, Strategy::Hybrid(_))
    }

    pub fn segment(&self, pauses: &[Pause], total: Time) -> Vec<Segment> {
        match self {
            Strategy::Fixed { length } => segment_fixed(total, *length).unwrap_or_default(),
            Strategy::VadMerge => segment_pause_merge(pauses, total),
            Strategy::Srpol(params) if total > Time::ZERO => {
                segment_srpol(Segment::kept(Time::ZERO, total), pauses, params)
            }
            Strategy::Srpol(_) => Vec::new(),
            Strategy::Hybrid(params) => hybrid_scan(pauses, total, params),
        }
    }
}
