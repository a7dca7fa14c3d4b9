//! Segment manifests: one entry per segment, as YAML or JSON lines.
//!
//! YAML output is a flow-mapping list with a commented header:
//!
//! ```text
//! # strategy: hybrid
//! - {wav: talk.wav, offset: 0.000000, duration: 19.300000}
//! ```
//!
//! JSON-lines output starts with a `{"config": {...}}` line followed by one
//! object per segment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segmenters::Segment;
use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestFormat {
    #[default]
    Yaml,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub wav: String,
    pub offset: Time,
    pub duration: Time,
    pub dropped: bool,
}

impl ManifestEntry {
    pub fn from_segment(wav: &str, seg: &Segment) -> Self {
        Self { wav: wav.to_string(), offset: seg.start, duration: seg.duration(), dropped: !seg.kept }
    }

    pub fn segment(&self) -> Segment {
        Segment { start: self.offset, end: self.offset + self.duration, kept: !self.dropped }
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("invalid YAML manifest: {0}")]
    Yaml(#[from] serde_yaml::Error),
    #[error("invalid JSON on line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("entry {index}: {reason}")]
    Invalid { index: usize, reason: &'static str },
}

#[derive(Deserialize)]
struct RawEntry {
    wav: String,
    offset: f64,
    duration: f64,
    #[serde(default)]
    dropped: bool,
}

/// Renders entries; `header` pairs become comments (YAML) or the config line
/// (JSON lines).
pub fn write_manifest(entries: &[ManifestEntry], header: &[(String, String)], format: ManifestFormat) -> String {
    let mut out = String::new();
    match format {
        ManifestFormat::Yaml => {
            for (k, v) in header {
                let _ = writeln!(out, "# {k}: {v}");
            }
            if entries.is_empty() {
                out.push_str("[]\n");
            }
            for e in entries {
                let _ = write!(out, "- {{wav: {}, offset: {}, duration: {}", yaml_scalar(&e.wav), e.offset, e.duration);
                if e.dropped {
                    out.push_str(", dropped: true");
                }
                out.push_str("}\n");
            }
        }
        ManifestFormat::Jsonl => {
            let config: BTreeMap<&str, &str> = header.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            let _ = writeln!(out, "{}", serde_json::json!({ "config": config }));
            for e in entries {
                let wav = serde_json::to_string(&e.wav).expect("string serializes");
                let _ = write!(out, "{{\"wav\":{wav},\"offset\":{},\"duration\":{}", e.offset, e.duration);
                if e.dropped {
                    out.push_str(",\"dropped\":true");
                }
                out.push_str("}\n");
            }
        }
    }
    out
}

fn yaml_scalar(s: &str) -> String {
    let plain = !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-' | '/'))
        && !s.starts_with('-')
        && serde_yaml::from_str::<String>(s).is_ok_and(|v| v == s);
    if plain {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', "''"))
    }
}

/// Parses either format; JSON lines are recognised by a leading `{`.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, ManifestError> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    let raw: Vec<RawEntry> = match first {
        None => Vec::new(),
        Some(l) if l.starts_with('{') => {
            let mut v = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let value: serde_json::Value =
                    serde_json::from_str(line).map_err(|source| ManifestError::Json { line: i + 1, source })?;
                if value.get("config").is_some() {
                    continue;
                }
                v.push(serde_json::from_value(value).map_err(|source| ManifestError::Json { line: i + 1, source })?);
            }
            v
        }
        Some(_) => serde_yaml::from_str(text)?,
    };
    raw.into_iter()
        .enumerate()
        .map(|(index, r)| {
            if !r.offset.is_finite() || !r.duration.is_finite() {
                return Err(ManifestError::Invalid { index, reason: "non-finite time" });
            }
            if r.offset < 0.0 || r.duration < 0.0 {
                return Err(ManifestError::Invalid { index, reason: "negative offset or duration" });
            }
            Ok(ManifestEntry {
                wav: r.wav,
                offset: Time::from_secs_f64(r.offset),
                duration: Time::from_secs_f64(r.duration),
                dropped: r.dropped,
            })
        })
        .collect()
}

/// Segments grouped by wav name, in first-appearance order.
pub fn group_by_wav(entries: &[ManifestEntry]) -> Vec<(String, Vec<Segment>)> {
    let mut out: Vec<(String, Vec<Segment>)> = Vec::new();
    for e in entries {
        match out.iter_mut().find(|(w, _)| *w == e.wav) {
            Some((_, segs)) => segs.push(e.segment()),
            None => out.push((e.wav.clone(), vec![e.segment()])),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(wav: &str, offset: f64, duration: f64, dropped: bool) -> ManifestEntry {
        ManifestEntry {
            wav: wav.into(),
            offset: Time::from_secs_f64(offset),
            duration: Time::from_secs_f64(duration),
            dropped,
        }
    }

    #[test]
    fn yaml_layout() {
        let header = vec![("strategy".to_string(), "hybrid".to_string())];
        let text = write_manifest(
            &[entry("talk.wav", 0.0, 19.3, false), entry("talk.wav", 19.3, 0.5, true)],
            &header,
            ManifestFormat::Yaml,
        );
        assert_eq!(
            text,
            "# strategy: hybrid\n\
             - {wav: talk.wav, offset: 0.000000, duration: 19.300000}\n\
             - {wav: talk.wav, offset: 19.300000, duration: 0.500000, dropped: true}\n"
        );
    }

    #[test]
    fn round_trip_both_formats() {
        let entries = vec![
            entry("a b.wav", 0.0, 1.25, false),
            entry("it's: odd.wav", 1.25, 3.0, true),
            entry("true", 4.25, 0.000001, false),
            entry("123", 0.0, 2.0, false),
        ];
        for format in [ManifestFormat::Yaml, ManifestFormat::Jsonl] {
            let text = write_manifest(&entries, &[("k".into(), "v".into())], format);
            assert_eq!(parse_manifest(&text).unwrap(), entries, "{format:?}");
        }
    }

    #[test]
    fn empty_manifests() {
        for format in [ManifestFormat::Yaml, ManifestFormat::Jsonl] {
            let text = write_manifest(&[], &[("k".into(), "v".into())], format);
            assert!(parse_manifest(&text).unwrap().is_empty());
        }
        assert!(parse_manifest("").unwrap().is_empty());
    }

    #[test]
    fn extra_keys_are_ignored() {
        let parsed = parse_manifest("- {wav: x.wav, offset: 1.5, duration: 2, speaker_id: spk1}\n").unwrap();
        assert_eq!(parsed, vec![entry("x.wav", 1.5, 2.0, false)]);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(matches!(
            parse_manifest("- {wav: x.wav, offset: -1, duration: 2}"),
            Err(ManifestError::Invalid { index: 0, .. })
        ));
        assert!(matches!(parse_manifest("- {wav: x.wav}"), Err(ManifestError::Yaml(_))));
        assert!(matches!(parse_manifest("{\"wav\": 1}\n"), Err(ManifestError::Json { line: 1, .. })));
    }

    #[test]
    fn grouping_keeps_order() {
        let g = group_by_wav(&[entry("b", 0.0, 1.0, false), entry("a", 0.0, 1.0, false), entry("b", 1.0, 1.0, false)]);
        assert_eq!(g.iter().map(|(w, s)| (w.as_str(), s.len())).collect::<Vec<_>>(), vec![("b", 2), ("a", 1)]);
    }
}
