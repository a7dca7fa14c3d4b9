#![allow(dead_code)]

use hybseg::{AudioClip, Pause, Segment, Time};
use rand::rngs::StdRng;
use rand::Rng;

/// Alternating speech bursts and near-silent gaps.
pub struct Layout {
    pub sample_rate: u32,
    /// `(start_sample, len, amplitude)` of each burst.
    pub bursts: Vec<(usize, usize, i16)>,
    pub len: usize,
}

pub fn random_layout(rng: &mut StdRng, sample_rate: u32, total_ms: u64, speech_ms: (u64, u64), gap_ms: (u64, u64)) -> Layout {
    let per_ms = sample_rate as usize / 1000;
    let len = total_ms as usize * per_ms + rng.random_range(0..per_ms.max(1));
    let mut bursts = Vec::new();
    let mut at = if rng.random_bool(0.5) { 0 } else { rng.random_range(gap_ms.0..=gap_ms.1) as usize * per_ms };
    while at < len {
        let speech = rng.random_range(speech_ms.0..=speech_ms.1) as usize * per_ms;
        let amp = rng.random_range(1500..12000);
        bursts.push((at, speech.min(len - at), amp));
        at += speech + rng.random_range(gap_ms.0..=gap_ms.1) as usize * per_ms;
    }
    Layout { sample_rate, bursts, len }
}

pub fn render(layout: &Layout, rng: &mut StdRng) -> AudioClip {
    let mut samples: Vec<i16> = (0..layout.len).map(|_| rng.random_range(-20..=20)).collect();
    for &(start, n, amp) in &layout.bursts {
        let freq = rng.random_range(120.0..900.0f64);
        let step = std::f64::consts::TAU * freq / layout.sample_rate as f64;
        for i in 0..n {
            let envelope = 0.6 + 0.4 * (i as f64 * 0.0007).sin().abs();
            samples[start + i] = (amp as f64 * envelope * (i as f64 * step).sin()) as i16;
        }
    }
    AudioClip::new(samples, layout.sample_rate).unwrap()
}

/// Random sorted, disjoint pauses on a millisecond grid inside `[0, total)`.
pub fn random_pauses(rng: &mut StdRng, total: Time, density: f64, max_pause_ms: i64) -> Vec<Pause> {
    let total_ms = total.as_micros() / 1000;
    let mut out = Vec::new();
    let mut at = 0;
    while at < total_ms {
        let gap = (rng.random::<f64>().ln().abs() / density * 1000.0) as i64 + rng.random_range(0..20);
        at += gap;
        let dur = rng.random_range(1..=max_pause_ms);
        if at >= total_ms {
            break;
        }
        let end = (at + dur).min(total_ms);
        out.push(Pause::new(Time::from_millis(at), Time::from_millis(end - at)));
        at = end + rng.random_range(1..400);
    }
    out
}

pub fn tiles(segs: &[Segment], total: Time) -> Result<(), String> {
    if total == Time::ZERO {
        return if segs.is_empty() { Ok(()) } else { Err("segments on empty input".into()) };
    }
    let mut at = Time::ZERO;
    for s in segs {
        if s.start != at {
            return Err(format!("segment starts at {} expected {}", s.start, at));
        }
        if s.end <= s.start {
            return Err(format!("empty segment at {}", s.start));
        }
        at = s.end;
    }
    if at != total {
        return Err(format!("tiling ends at {at}, clip is {total}"));
    }
    Ok(())
}
