//! Segmentation statistics and boundary agreement.

use std::fmt::Write as _;

use serde::Serialize;

use crate::segmenters::{ParamError, Segment};
use crate::time::Time;

/// Summary of one segmentation: how much audio was filtered and how long
/// the kept segments are.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegStats {
    pub pct_filtered: f64,
    pub num_segments: usize,
    /// Seconds; `None` when no segment was kept.
    pub max_len: Option<f64>,
    pub min_len: Option<f64>,
    pub avg_len: Option<f64>,
}

pub const ROW_LABELS: [&str; 5] = ["% filtered", "Num segm.", "Max len (s)", "Min len (s)", "Avg len (s)"];

/// Statistics over `segments` covering `total` of audio.
///
/// Audio not covered by a kept segment counts as filtered, whether it is an
/// explicit dropped segment or a gap, so manifests that omit dropped audio
/// give the same figures as full tilings.
pub fn compute_stats(segments: &[Segment], total: Time) -> SegStats {
    let kept: Vec<i64> = segments.iter().filter(|s| s.kept).map(|s| s.duration().as_micros()).collect();
    let kept_sum: i64 = kept.iter().sum();
    let pct_filtered = if total > Time::ZERO {
        ((total.as_micros() - kept_sum).max(0) as f64 / total.as_micros() as f64 * 100.0).min(100.0)
    } else {
        0.0
    };
    let secs = |us: i64| us as f64 / 1e6;
    SegStats {
        pct_filtered,
        num_segments: kept.len(),
        max_len: kept.iter().max().map(|&d| secs(d)),
        min_len: kept.iter().min().map(|&d| secs(d)),
        avg_len: (!kept.is_empty()).then(|| kept_sum as f64 / kept.len() as f64 / 1e6),
    }
}

impl SegStats {
    /// Values as printed in the table: two decimals, thousands separators on
    /// the count, `-` for absent lengths.
    pub fn formatted_values(&self) -> [String; 5] {
        let len = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        [
            format!("{:.2}", self.pct_filtered),
            group_thousands(self.num_segments),
            len(self.max_len),
            len(self.min_len),
            len(self.avg_len),
        ]
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (label, value) in ROW_LABELS.iter().zip(self.formatted_values()) {
            let _ = writeln!(out, "{label:<12} {value:>10}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

fn group_thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Fills gaps in `segments` (and up to `total`) with dropped segments.
pub fn normalize(segments: &[Segment], total: Time) -> Vec<Segment> {
    let mut sorted = segments.to_vec();
    sorted.sort_by_key(|s| (s.start, s.end));
    let mut out = Vec::with_capacity(sorted.len() * 2 + 1);
    let mut at = Time::ZERO;
    for s in sorted {
        if s.start > at {
            out.push(Segment::dropped(at, s.start));
        }
        out.push(s);
        at = at.max(s.end);
    }
    if at < total {
        out.push(Segment::dropped(at, total));
    }
    out
}

/// Segment edges strictly inside the covered span, sorted and deduplicated.
pub fn internal_boundaries(segments: &[Segment]) -> Vec<Time> {
    let (Some(lo), Some(hi)) = (
        segments.iter().map(|s| s.start).min(),
        segments.iter().map(|s| s.end).max(),
    ) else {
        return Vec::new();
    };
    let mut b: Vec<Time> = segments
        .iter()
        .flat_map(|s| [s.start, s.end])
        .filter(|&t| t > lo && t < hi)
        .collect();
    b.sort_unstable();
    b.dedup();
    b
}

/// Greedy one-to-one matching in time order: walk both sorted lists and
/// pair the current heads when they are within `tolerance`, otherwise
/// advance the earlier one.
pub fn match_boundaries(hyp: &[Time], reference: &[Time], tolerance: Time) -> usize {
    let (mut i, mut j, mut hits) = (0, 0, 0);
    while i < hyp.len() && j < reference.len() {
        let (h, r) = (hyp[i], reference[j]);
        if (h - r).as_micros().abs() <= tolerance.as_micros() {
            hits += 1;
            i += 1;
            j += 1;
        } else if h < r {
            i += 1;
        } else {
            j += 1;
        }
    }
    hits
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tolerance: f64,
    pub hits: usize,
    pub hyp_boundaries: usize,
    pub ref_boundaries: usize,
}

impl BoundaryScore {
    /// An empty denominator scores 1 only if both sides have no boundary.
    pub fn from_counts(hits: usize, hyp_boundaries: usize, ref_boundaries: usize, tolerance: Time) -> Self {
        let both_empty = hyp_boundaries == 0 && ref_boundaries == 0;
        let ratio = |n: usize, d: usize| match d {
            0 if both_empty => 1.0,
            0 => 0.0,
            d => n as f64 / d as f64,
        };
        let precision = ratio(hits, hyp_boundaries);
        let recall = ratio(hits, ref_boundaries);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            tolerance: tolerance.as_secs_f64(),
            hits,
            hyp_boundaries,
            ref_boundaries,
        }
    }

    pub fn to_report(&self) -> String {
        format!(
            "tolerance  {:.3}\nhits       {} / {} hyp, {} ref\nprecision  {:.4}\nrecall     {:.4}\nf1         {:.4}\n",
            self.tolerance, self.hits, self.hyp_boundaries, self.ref_boundaries, self.precision, self.recall, self.f1
        )
    }
}

/// Boundary precision/recall of `hypothesis` against `reference`.
pub fn boundary_prf(hypothesis: &[Segment], reference: &[Segment], tolerance: Time) -> BoundaryScore {
    let h = internal_boundaries(hypothesis);
    let r = internal_boundaries(reference);
    BoundaryScore::from_counts(match_boundaries(&h, &r, tolerance), h.len(), r.len(), tolerance)
}

/// Counts of kept segment durations in bins of `bin_width`; bin `k` covers
/// `[k * w, (k + 1) * w)`. The vector ends at the last non-empty bin.
pub fn length_histogram(segments: &[Segment], bin_width: Time) -> Result<Vec<usize>, ParamError> {
    if bin_width <= Time::ZERO {
        return Err(ParamError::NonPositiveLength(bin_width));
    }
    let mut bins = Vec::new();
    for s in segments.iter().filter(|s| s.kept) {
        let k = (s.duration().as_micros() / bin_width.as_micros()) as usize;
        if bins.len() <= k {
            bins.resize(k + 1, 0);
        }
        bins[k] += 1;
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmenters::segment_fixed;
    use proptest::prelude::*;

    fn s(x: f64) -> Time {
        Time::from_secs_f64(x)
    }

    #[test]
    fn three_segment_fixture() {
        let segs = [
            Segment::kept(s(0.0), s(6.0)),
            Segment::dropped(s(6.0), s(8.0)),
            Segment::kept(s(8.0), s(10.0)),
        ];
        let st = compute_stats(&segs, s(10.0));
        assert_eq!(st, SegStats {
            pct_filtered: 20.0,
            num_segments: 2,
            max_len: Some(6.0),
            min_len: Some(2.0),
            avg_len: Some(4.0),
        });
    }

    #[test]
    fn single_segment() {
        let st = compute_stats(&[Segment::kept(s(0.0), s(10.0))], s(10.0));
        assert_eq!((st.pct_filtered, st.num_segments), (0.0, 1));
        assert_eq!((st.max_len, st.min_len, st.avg_len), (Some(10.0), Some(10.0), Some(10.0)));
    }

    #[test]
    fn empty_kept_set() {
        let st = compute_stats(&[Segment::dropped(s(0.0), s(3.0))], s(3.0));
        assert_eq!(st.num_segments, 0);
        assert_eq!(st.pct_filtered, 100.0);
        assert!(st.max_len.is_none() && st.min_len.is_none() && st.avg_len.is_none());
        assert!(st.to_table().contains("Avg len (s)           -"));
    }

    #[test]
    fn table_layout() {
        let st = SegStats {
            pct_filtered: 14.66,
            num_segments: 2574,
            max_len: Some(51.97),
            min_len: Some(0.05),
            avg_len: Some(5.82),
        };
        assert_eq!(
            st.to_table(),
            "% filtered        14.66\n\
             Num segm.         2,574\n\
             Max len (s)       51.97\n\
             Min len (s)        0.05\n\
             Avg len (s)        5.82\n"
        );
    }

    #[test]
    fn thousands() {
        assert_eq!(group_thousands(0), "0");
        assert_eq!(group_thousands(999), "999");
        assert_eq!(group_thousands(1000), "1,000");
        assert_eq!(group_thousands(1234567), "1,234,567");
    }

    #[test]
    fn identical_segmentations_score_one() {
        let a = segment_fixed(s(40.0), s(7.0)).unwrap();
        let sc = boundary_prf(&a, &a, Time::ZERO);
        assert_eq!((sc.precision, sc.recall, sc.f1), (1.0, 1.0, 1.0));
        let one = [Segment::kept(s(0.0), s(5.0))];
        assert_eq!(boundary_prf(&one, &one, s(0.1)).f1, 1.0);
    }

    #[test]
    fn no_hypothesis_boundaries_means_zero_recall() {
        let one = [Segment::kept(s(0.0), s(40.0))];
        let sc = boundary_prf(&one, &segment_fixed(s(40.0), s(10.0)).unwrap(), s(1.0));
        assert_eq!(sc.recall, 0.0);
        assert_eq!(sc.f1, 0.0);
    }

    #[test]
    fn greedy_example() {
        let h = [s(10.0), s(20.1)];
        let r = [s(10.3), s(25.0)];
        assert_eq!(match_boundaries(&h, &r, s(0.5)), 1);
        let sc = BoundaryScore::from_counts(1, 2, 2, s(0.5));
        assert_eq!((sc.precision, sc.recall, sc.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn normalize_inserts_gaps() {
        let n = normalize(&[Segment::kept(s(1.0), s(2.0)), Segment::kept(s(3.0), s(4.0))], s(5.0));
        assert_eq!(n, vec![
            Segment::dropped(s(0.0), s(1.0)),
            Segment::kept(s(1.0), s(2.0)),
            Segment::dropped(s(2.0), s(3.0)),
            Segment::kept(s(3.0), s(4.0)),
            Segment::dropped(s(4.0), s(5.0)),
        ]);
    }

    #[test]
    fn histogram_examples() {
        let segs = [
            Segment::kept(s(0.0), s(4.0)),
            Segment::kept(s(4.0), s(8.0)),
            Segment::dropped(s(8.0), s(9.0)),
            Segment::kept(s(9.0), s(28.0)),
        ];
        assert_eq!(length_histogram(&segs, s(5.0)).unwrap(), vec![2, 0, 0, 1]);
        assert!(length_histogram(&[], s(5.0)).unwrap().is_empty());
        assert!(length_histogram(&segs, Time::ZERO).is_err());
    }

    #[test]
    fn histogram_totals_recount() {
        use rand::{rngs::StdRng, Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(3);
        let mut at = 0;
        let segs: Vec<Segment> = (0..1000)
            .map(|_| {
                let d = rng.random_range(1..30_000_000);
                at += d;
                Segment::kept(Time::from_micros(at - d), Time::from_micros(at))
            })
            .collect();
        let bins = length_histogram(&segs, s(2.5)).unwrap();
        assert_eq!(bins.iter().sum::<usize>(), 1000);
    }

    /// Maximum one-to-one matching by exhaustive search.
    fn optimal_hits(h: &[Time], r: &[Time], tol: Time) -> usize {
        fn go(h: &[Time], r: &[Time], used: &mut Vec<bool>, tol: Time) -> usize {
            let Some((&first, rest)) = h.split_first() else { return 0 };
            let mut best = go(rest, r, used, tol);
            for j in 0..r.len() {
                if !used[j] && (first - r[j]).as_micros().abs() <= tol.as_micros() {
                    used[j] = true;
                    best = best.max(1 + go(rest, r, used, tol));
                    used[j] = false;
                }
            }
            best
        }
        go(h, r, &mut vec![false; r.len()], tol)
    }

    #[test]
    fn greedy_equals_optimal_on_example() {
        let h = [s(10.0), s(20.1)];
        let r = [s(10.3), s(25.0)];
        assert_eq!(optimal_hits(&h, &r, s(0.5)), match_boundaries(&h, &r, s(0.5)));
    }

    fn arb_bounds() -> impl Strategy<Value = Vec<Time>> {
        proptest::collection::btree_set(1i64..2_000, 0..8)
            .prop_map(|v| v.into_iter().map(|x| Time::from_millis(x * 50)).collect())
    }

    proptest! {
        #[test]
        fn greedy_is_optimal_for_sorted_boundaries(h in arb_bounds(), r in arb_bounds(), tol in 0i64..400) {
            let tol = Time::from_millis(tol);
            prop_assert_eq!(match_boundaries(&h, &r, tol), optimal_hits(&h, &r, tol));
        }

        #[test]
        fn swapping_exchanges_precision_and_recall(h in arb_bounds(), r in arb_bounds(), tol in 0i64..400) {
            let tol = Time::from_millis(tol);
            let a = BoundaryScore::from_counts(match_boundaries(&h, &r, tol), h.len(), r.len(), tol);
            let b = BoundaryScore::from_counts(match_boundaries(&r, &h, tol), r.len(), h.len(), tol);
            prop_assert_eq!(a.precision, b.recall);
            prop_assert_eq!(a.recall, b.precision);
            prop_assert_eq!(a.f1, b.f1);
        }

        #[test]
        fn fixed_stats(d in 1i64..400_000, l in 1i64..60_000) {
            let (total, len) = (Time::from_millis(d), Time::from_millis(l));
            let st = compute_stats(&segment_fixed(total, len).unwrap(), total);
            prop_assert_eq!(st.num_segments as i64, (d + l - 1) / l);
            prop_assert_eq!(st.pct_filtered, 0.0);
            prop_assert_eq!(st.max_len, Some(len.min(total).as_secs_f64()));
            let (lo, avg, hi) = (st.min_len.unwrap(), st.avg_len.unwrap(), st.max_len.unwrap());
            prop_assert!(lo <= avg + 1e-9 && avg <= hi + 1e-9);
        }
    }
}
