//! Incremental hybrid segmentation.
//!
//! Frames are pushed one at a time. A boundary is emitted as soon as no
//! later audio can change it:
//!
//! * a window boundary once the stream reaches `segment start + max_len`;
//! * a forced boundary (force-split variant) once its pause has ended, or
//!   at the horizon if the pause is still open there.
//!
//! Pauses still open at the horizon only count up to the horizon, the same
//! view [`segment_hybrid`](crate::segmenters::segment_hybrid) takes, so the
//! emitted segments followed by [`StreamSegmenter::flush`] are exactly the
//! batch output on the whole clip. Unsegmented audio never exceeds
//! `max_len` plus one frame.

use thiserror::Error;

use crate::audio_io::{Frame, FrameMs};
use crate::segmenters::{forced_boundary, window_boundary, HybridParams, Segment};
use crate::time::Time;
use crate::vad::{Aggressiveness, Label, VadConfig, VadState};

const CHECKPOINT_MAGIC: &[u8; 4] = b"HSST";
const CHECKPOINT_VERSION: u8 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("frame {got} pushed out of order (expected {expected})")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("frame size {got} does not match the stream's {expected}")]
    FrameSizeMismatch { expected: FrameMs, got: FrameMs },
    #[error("sample rate {got} Hz does not match the stream's {expected} Hz")]
    SampleRateMismatch { expected: u32, got: u32 },
    #[error("frame pushed after a partial final frame")]
    PushAfterFinalFrame,
    #[error("label end {end} s is not after stream time {now} s")]
    NonIncreasingTime { now: Time, end: Time },
    #[error("stream already flushed")]
    Finished,
    #[error("invalid checkpoint: {0}")]
    BadCheckpoint(&'static str),
}

/// Per-stream segmentation state. Single owner; move it between threads
/// freely, but do not share it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSegmenter {
    params: HybridParams,
    vad: VadState,
    sample_rate: Option<u32>,
    next_index: u64,
    now: Time,
    seg_start: Time,
    /// Closed pauses starting at or after `seg_start`.
    pauses: Vec<(Time, Time)>,
    open_pause: Option<Time>,
    after_partial: bool,
    finished: bool,
}

impl StreamSegmenter {
    pub fn new(params: HybridParams, vad: VadConfig) -> Self {
        Self {
            params,
            vad: VadState::new(vad),
            sample_rate: None,
            next_index: 0,
            now: Time::ZERO,
            seg_start: Time::ZERO,
            pauses: Vec::new(),
            open_pause: None,
            after_partial: false,
            finished: false,
        }
    }

    pub fn params(&self) -> &HybridParams {
        &self.params
    }

    /// End of the audio pushed so far.
    pub fn now(&self) -> Time {
        self.now
    }

    /// Start of the segment under construction.
    pub fn current_segment_start(&self) -> Time {
        self.seg_start
    }

    /// Frames overlapping the not yet emitted audio.
    pub fn buffered_frames(&self) -> u64 {
        let f = self.vad.config().frame_ms.duration().as_micros();
        self.next_index - (self.seg_start.as_micros() / f) as u64
    }

    pub fn buffered_duration(&self) -> Time {
        self.now - self.seg_start
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Runs the VAD on `frame` and returns any segments it completes.
    pub fn push_frame(&mut self, frame: &Frame<'_>) -> Result<Vec<Segment>, StreamError> {
        if self.finished {
            return Err(StreamError::Finished);
        }
        if self.after_partial {
            return Err(StreamError::PushAfterFinalFrame);
        }
        if frame.index != self.next_index {
            return Err(StreamError::OutOfOrder {
                expected: self.next_index,
                got: frame.index,
            });
        }
        let expected = self.vad.config().frame_ms;
        if frame.frame_ms != expected {
            return Err(StreamError::FrameSizeMismatch { expected, got: frame.frame_ms });
        }
        match self.sample_rate {
            Some(rate) if rate != frame.sample_rate => {
                return Err(StreamError::SampleRateMismatch {
                    expected: rate,
                    got: frame.sample_rate,
                })
            }
            _ => self.sample_rate = Some(frame.sample_rate),
        }

        let label = self.vad.push_frame(frame);
        self.after_partial = frame.is_padded();
        self.next_index += 1;
        Ok(self.advance(label, frame.start(), frame.end()))
    }

    /// Feeds a label from an external VAD for the audio between the current
    /// stream time and `end`.
    pub fn push_label(&mut self, label: Label, end: Time) -> Result<Vec<Segment>, StreamError> {
        if self.finished {
            return Err(StreamError::Finished);
        }
        if end <= self.now {
            return Err(StreamError::NonIncreasingTime { now: self.now, end });
        }
        self.next_index += 1;
        Ok(self.advance(label, self.now, end))
    }

    /// Emits the remainder. Further pushes fail; a second flush is empty.
    pub fn flush(&mut self) -> Vec<Segment> {
        if self.finished {
            return Vec::new();
        }
        self.finished = true;
        if let Some(start) = self.open_pause.take() {
            self.close_pause(start, self.now);
        }
        let mut out = self.decide();
        if self.seg_start < self.now {
            out.push(Segment::kept(self.seg_start, self.now));
            self.seg_start = self.now;
        }
        out
    }

    fn advance(&mut self, label: Label, start: Time, end: Time) -> Vec<Segment> {
        match label {
            Label::NonSpeech => {
                self.open_pause.get_or_insert(start);
            }
            Label::Speech => {
                if let Some(p) = self.open_pause.take() {
                    self.close_pause(p, start);
                }
            }
        }
        self.now = end;
        self.decide()
    }

    fn close_pause(&mut self, start: Time, end: Time) {
        if start >= self.seg_start && start < end {
            self.pauses.push((start, end));
        }
    }

    fn decide(&mut self) -> Vec<Segment> {
        let mut out = Vec::new();
        loop {
            let horizon = self.seg_start + self.params.max_len();
            let window_closed = self.now >= horizon;
            // an open pause is only final up to the horizon
            let open = self.open_pause.filter(|_| window_closed).map(|s| (s, self.now));
            let known = self.pauses.iter().copied().chain(open);

            let mut boundary = None;
            if self.params.force_split() {
                boundary = forced_boundary(self.seg_start, &self.params, known.clone());
            }
            if boundary.is_none() && window_closed {
                boundary = Some(window_boundary(self.seg_start, &self.params, known));
            }
            let Some(b) = boundary else { break };

            out.push(Segment::kept(self.seg_start, b));
            self.seg_start = b;
            self.pauses.retain(|&(s, _)| s >= b);
        }
        out
    }

    /// Versioned binary snapshot of the whole state.
    pub fn checkpoint(&self) -> Vec<u8> {
        let mut w = Vec::with_capacity(128);
        w.extend_from_slice(CHECKPOINT_MAGIC);
        w.push(CHECKPOINT_VERSION);
        put_i64(&mut w, self.params.min_len().as_micros());
        put_i64(&mut w, self.params.max_len().as_micros());
        put_i64(&mut w, self.params.juncture().as_micros());
        w.push(self.params.force_split() as u8);
        let vad = self.vad.config();
        w.push(vad.aggressiveness.get());
        w.push(vad.frame_ms.millis() as u8);
        put_u64(&mut w, vad.floor_window as u64);
        put_u64(&mut w, self.sample_rate.unwrap_or(0) as u64);
        put_u64(&mut w, self.next_index);
        put_i64(&mut w, self.now.as_micros());
        put_i64(&mut w, self.seg_start.as_micros());
        w.push(self.after_partial as u8);
        w.push(self.finished as u8);
        put_opt(&mut w, self.open_pause.map(|t| t.as_micros()));
        put_u64(&mut w, self.pauses.len() as u64);
        for &(s, e) in &self.pauses {
            put_i64(&mut w, s.as_micros());
            put_i64(&mut w, e.as_micros());
        }
        let (window, since) = self.vad.to_parts();
        put_u64(&mut w, window.len() as u64);
        for e in window {
            put_u64(&mut w, e);
        }
        put_opt(&mut w, since.map(i64::from));
        w
    }

    pub fn restore(bytes: &[u8]) -> Result<Self, StreamError> {
        let mut r = Reader(bytes);
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(StreamError::BadCheckpoint("bad magic"));
        }
        if r.u8()? != CHECKPOINT_VERSION {
            return Err(StreamError::BadCheckpoint("unsupported version"));
        }
        let bad = |_| StreamError::BadCheckpoint("invalid parameters");
        let (min, max, junc) = (r.time()?, r.time()?, r.time()?);
        let mut params = HybridParams::new(min, max).map_err(bad)?;
        if r.u8()? != 0 {
            params = params.with_force_split(junc).map_err(bad)?;
        }
        let aggressiveness = Aggressiveness::new(r.u8()?).map_err(|_| StreamError::BadCheckpoint("invalid mode"))?;
        let frame_ms =
            FrameMs::try_from(r.u8()? as u32).map_err(|_| StreamError::BadCheckpoint("invalid frame size"))?;
        let floor_window = r.u64()? as usize;
        let config = VadConfig { aggressiveness, frame_ms, floor_window };
        let rate = r.u64()? as u32;
        let next_index = r.u64()?;
        let now = r.time()?;
        let seg_start = r.time()?;
        let after_partial = r.u8()? != 0;
        let finished = r.u8()? != 0;
        let open_pause = r.opt()?.map(Time::from_micros);
        let n = r.u64()? as usize;
        let mut pauses = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            pauses.push((r.time()?, r.time()?));
        }
        let n = r.u64()? as usize;
        let mut window = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            window.push(r.u64()?);
        }
        let since = r.opt()?.map(|v| v as u32);
        if !r.0.is_empty() {
            return Err(StreamError::BadCheckpoint("trailing bytes"));
        }
        Ok(Self {
            params,
            vad: VadState::from_parts(config, window, since),
            sample_rate: (rate != 0).then_some(rate),
            next_index,
            now,
            seg_start,
            pauses,
            open_pause,
            after_partial,
            finished,
        })
    }
}

fn put_u64(w: &mut Vec<u8>, v: u64) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_i64(w: &mut Vec<u8>, v: i64) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_opt(w: &mut Vec<u8>, v: Option<i64>) {
    w.push(v.is_some() as u8);
    put_i64(w, v.unwrap_or(0));
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StreamError> {
        if self.0.len() < n {
            return Err(StreamError::BadCheckpoint("truncated"));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, StreamError> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64, StreamError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn time(&mut self) -> Result<Time, StreamError> {
        Ok(Time::from_micros(self.u64()? as i64))
    }

    fn opt(&mut self) -> Result<Option<i64>, StreamError> {
        let some = self.u8()? != 0;
        let v = self.u64()? as i64;
        Ok(some.then_some(v))
    }
}
