//! PCM16 mono decoding and fixed-duration framing.

use std::borrow::Cow;
use std::fmt;

use thiserror::Error;

use crate::time::Time;

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

const FORMAT_PCM: u16 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AudioError {
    #[error("malformed WAV header: {0}")]
    MalformedHeader(&'static str),
    #[error("unsupported format code {0} (only PCM is supported)")]
    UnsupportedFormat(u16),
    #[error("unsupported bit depth {0} (only 16-bit is supported)")]
    UnsupportedBitDepth(u16),
    #[error("unsupported channel count {0} (only mono is supported)")]
    UnsupportedChannelCount(u16),
    #[error("invalid sample rate {0}")]
    InvalidSampleRate(u32),
    #[error("raw PCM input has an odd number of bytes ({0})")]
    OddByteCount(usize),
    #[error("incompatible rate/frame: {sample_rate} Hz cannot be cut into whole {frame_ms} ms frames")]
    IncompatibleFrame { sample_rate: u32, frame_ms: u32 },
    #[error("unsupported frame size {0} ms (expected 10, 20 or 30)")]
    UnsupportedFrameSize(u32),
}

/// Decoded mono PCM16 audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    samples: Vec<i16>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidSampleRate(sample_rate));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> Time {
        Time::from_samples(self.samples.len() as u64, self.sample_rate)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn u16_le(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_le(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn pcm16_le(bytes: &[u8]) -> Vec<i16> {
    bytes
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]))
        .collect()
}

/// Decodes a RIFF/WAVE container holding 16-bit mono PCM.
///
/// Unknown chunks (LIST, fact, ...) are skipped. A data chunk whose declared
/// size runs past the end of the buffer is truncated to what is present,
/// which is what recorders that never patch the header leave behind.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 {
        return Err(AudioError::MalformedHeader("file shorter than RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(AudioError::MalformedHeader("missing RIFF tag"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(AudioError::MalformedHeader("missing WAVE tag"));
    }

    let mut pos = 12;
    let mut sample_rate = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_le(bytes, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + 16 > bytes.len() {
                    return Err(AudioError::MalformedHeader("fmt chunk too short"));
                }
                let format = u16_le(bytes, body);
                let channels = u16_le(bytes, body + 2);
                let rate = u32_le(bytes, body + 4);
                let bits = u16_le(bytes, body + 14);
                if format != FORMAT_PCM {
                    return Err(AudioError::UnsupportedFormat(format));
                }
                if bits != 16 {
                    return Err(AudioError::UnsupportedBitDepth(bits));
                }
                if channels != 1 {
                    return Err(AudioError::UnsupportedChannelCount(channels));
                }
                if rate == 0 {
                    return Err(AudioError::InvalidSampleRate(rate));
                }
                sample_rate = Some(rate);
            }
            b"data" => {
                let rate = sample_rate
                    .ok_or(AudioError::MalformedHeader("data chunk before fmt chunk"))?;
                let end = body.saturating_add(size).min(bytes.len());
                let data = &bytes[body..end];
                let data = &data[..data.len() & !1];
                return AudioClip::new(pcm16_le(data), rate);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body.saturating_add(size).saturating_add(size & 1);
    }
    Err(AudioError::MalformedHeader(if sample_rate.is_some() {
        "missing data chunk"
    } else {
        "missing fmt chunk"
    }))
}

/// Headerless little-endian PCM16 mono.
pub fn decode_raw_pcm(bytes: &[u8], sample_rate: u32) -> Result<AudioClip, AudioError> {
    if bytes.len() % 2 != 0 {
        return Err(AudioError::OddByteCount(bytes.len()));
    }
    AudioClip::new(pcm16_le(bytes), sample_rate)
}

/// Canonical 44-byte header WAV, used for fixtures and round trips.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = (clip.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in &clip.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Frame durations accepted by the VAD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameMs {
    Ms10,
    Ms20,
    Ms30,
}

impl FrameMs {
    pub const fn millis(self) -> u32 {
        match self {
            FrameMs::Ms10 => 10,
            FrameMs::Ms20 => 20,
            FrameMs::Ms30 => 30,
        }
    }

    pub const fn duration(self) -> Time {
        Time::from_millis(self.millis() as i64)
    }

    pub fn samples_per_frame(self, sample_rate: u32) -> Result<usize, AudioError> {
        let total = sample_rate as u64 * self.millis() as u64;
        if sample_rate == 0 || total % 1000 != 0 {
            return Err(AudioError::IncompatibleFrame {
                sample_rate,
                frame_ms: self.millis(),
            });
        }
        Ok((total / 1000) as usize)
    }
}

impl TryFrom<u32> for FrameMs {
    type Error = AudioError;

    fn try_from(ms: u32) -> Result<Self, AudioError> {
        match ms {
            10 => Ok(FrameMs::Ms10),
            20 => Ok(FrameMs::Ms20),
            30 => Ok(FrameMs::Ms30),
            other => Err(AudioError::UnsupportedFrameSize(other)),
        }
    }
}

impl fmt::Display for FrameMs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.millis())
    }
}

/// One fixed-length window of samples.
///
/// Only the last frame of a clip may be partial; it is zero-padded to full
/// length and `valid_len` records how many samples are real audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame<'a> {
    pub index: u64,
    pub frame_ms: FrameMs,
    pub sample_rate: u32,
    pub samples: Cow<'a, [i16]>,
    pub valid_len: usize,
    pub is_final: bool,
}

impl Frame<'_> {
    pub fn start(&self) -> Time {
        Time::from_samples(self.index * self.samples.len() as u64, self.sample_rate)
    }

    /// End of the real audio in this frame, so the padded tail of a final
    /// frame is not counted.
    pub fn end(&self) -> Time {
        Time::from_samples(
            self.index * self.samples.len() as u64 + self.valid_len as u64,
            self.sample_rate,
        )
    }

    pub fn valid(&self) -> &[i16] {
        &self.samples[..self.valid_len]
    }

    pub fn is_padded(&self) -> bool {
        self.valid_len < self.samples.len()
    }

    pub fn into_owned(self) -> Frame<'static> {
        Frame {
            samples: Cow::Owned(self.samples.into_owned()),
            ..self
        }
    }
}

/// Pull-based framing iterator over a clip.
#[derive(Debug, Clone)]
pub struct FrameIter<'a> {
    samples: &'a [i16],
    sample_rate: u32,
    frame_ms: FrameMs,
    per_frame: usize,
    next: u64,
    total: u64,
}

impl<'a> Iterator for FrameIter<'a> {
    type Item = Frame<'a>;

    fn next(&mut self) -> Option<Frame<'a>> {
        if self.next >= self.total {
            return None;
        }
        let index = self.next;
        self.next += 1;
        let start = index as usize * self.per_frame;
        let end = (start + self.per_frame).min(self.samples.len());
        let chunk = &self.samples[start..end];
        let samples = if chunk.len() == self.per_frame {
            Cow::Borrowed(chunk)
        } else {
            let mut padded = chunk.to_vec();
            padded.resize(self.per_frame, 0);
            Cow::Owned(padded)
        };
        Some(Frame {
            index,
            frame_ms: self.frame_ms,
            sample_rate: self.sample_rate,
            samples,
            valid_len: chunk.len(),
            is_final: self.next == self.total,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for FrameIter<'_> {}

/// Cuts `clip` into frames of `frame_ms`, padding a trailing partial frame.
pub fn frames(clip: &AudioClip, frame_ms: FrameMs) -> Result<FrameIter<'_>, AudioError> {
    let per_frame = frame_ms.samples_per_frame(clip.sample_rate)?;
    let total = clip.samples.len().div_ceil(per_frame) as u64;
    Ok(FrameIter {
        samples: &clip.samples,
        sample_rate: clip.sample_rate,
        frame_ms,
        per_frame,
        next: 0,
        total,
    })
}
