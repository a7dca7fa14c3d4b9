//! Integer timeline in microseconds.
//!
//! Every boundary produced by the segmenters is either a frame edge (a whole
//! number of milliseconds) or the midpoint of a pause between two frame
//! edges, so microseconds represent all of them exactly and comparisons
//! between batch and streaming outputs can be done with `==`.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub const fn from_micros(us: i64) -> Self {
        Time(us)
    }

    pub const fn from_millis(ms: i64) -> Self {
        Time(ms * 1_000)
    }

    /// Rounds to the nearest microsecond.
    pub fn from_secs_f64(secs: f64) -> Self {
        Time((secs * 1e6).round() as i64)
    }

    /// Position of sample `n` at `sample_rate` Hz, rounded down.
    pub fn from_samples(n: u64, sample_rate: u32) -> Self {
        Time((n as u128 * 1_000_000 / sample_rate as u128) as i64)
    }

    pub const fn as_micros(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    /// Point halfway between `self` and `other`, rounded towards `self` when
    /// the span has an odd microsecond count.
    pub fn midpoint(self, other: Time) -> Time {
        Time(self.0 + (other.0 - self.0) / 2)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

/// Seconds with six decimals, the manifest precision.
impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:06}", abs / 1_000_000, abs % 1_000_000)
    }
}
