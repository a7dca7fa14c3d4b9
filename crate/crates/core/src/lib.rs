//! Audio segmentation for speech translation pipelines.
//!
//! Five strategies cut long recordings into segments: fixed-length,
//! VAD-merge, recursive longest-silence bisection, and the pause-in-window
//! hybrid with an optional forced split on long pauses. The hybrid
//! strategies also run incrementally on a live stream with a bounded buffer.

pub mod audio_io;
pub mod cli;
pub mod manifest;
pub mod metrics;
pub mod segmenters;
pub mod streaming;
pub mod time;
pub mod vad;

pub use audio_io::{decode_raw_pcm, decode_wav, encode_wav, frames, AudioClip, AudioError, Frame, FrameMs};
pub use manifest::{parse_manifest, write_manifest, ManifestEntry, ManifestError, ManifestFormat};
pub use metrics::{boundary_prf, compute_stats, length_histogram, normalize, BoundaryScore, SegStats};
pub use segmenters::{
    segment_fixed, segment_hybrid, segment_hybrid_force, segment_pause_merge, segment_srpol,
    segment_vad_merge, HybridParams, ParamError, Segment, SrpolParams, Strategy,
};
pub use streaming::{StreamError, StreamSegmenter};
pub use time::Time;
pub use vad::{classify, detect_pauses, Aggressiveness, FrameLabelTrack, Label, Pause, VadConfig, VadError};
