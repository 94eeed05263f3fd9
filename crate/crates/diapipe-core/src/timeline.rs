//! Exact interval arithmetic on half-open time spans.
//!
//! Scoring works on unions of `[start, end)` intervals and never samples a
//! grid; all boundaries are kept as the original `f64` endpoints. Spans
//! closer together than [`MERGE_EPS`] are fused when a timeline is built.

use alloc::vec::Vec;

use crate::segment::Segment;

/// Two spans separated by less than this are treated as adjacent.
pub const MERGE_EPS: f64 = 1e-9;

/// Sorted, disjoint set of half-open intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    spans: Vec<(f64, f64)>,
}

impl Timeline {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Single span; empty if `end <= start`.
    pub fn span(start: f64, end: f64) -> Self {
        if end > start {
            Self { spans: alloc::vec![(start, end)] }
        } else {
            Self::empty()
        }
    }

    /// Union of arbitrary (possibly overlapping, unsorted) intervals.
    pub fn from_intervals<I: IntoIterator<Item = (f64, f64)>>(intervals: I) -> Self {
        let mut raw: Vec<(f64, f64)> = intervals
            .into_iter()
            .filter(|(s, e)| e > s)
            .collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut spans: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (s, e) in raw {
            match spans.last_mut() {
                Some(last) if s <= last.1 + MERGE_EPS => {
                    if e > last.1 {
                        last.1 = e;
                    }
                }
                _ => spans.push((s, e)),
            }
        }
        Self { spans }
    }

    pub fn from_segments(segments: &[Segment]) -> Self {
        Self::from_intervals(segments.iter().map(|s| (s.onset_s, s.offset_s)))
    }

    pub fn spans(&self) -> &[(f64, f64)] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.spans.iter().map(|(s, e)| e - s).sum()
    }

    /// Largest end point, or 0 for an empty timeline.
    pub fn end(&self) -> f64 {
        self.spans.last().map_or(0.0, |(_, e)| *e)
    }

    pub fn union(&self, other: &Timeline) -> Timeline {
        Timeline::from_intervals(self.spans.iter().chain(&other.spans).copied())
    }

    pub fn intersect(&self, other: &Timeline) -> Timeline {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.spans.len() && j < other.spans.len() {
            let (a0, a1) = self.spans[i];
            let (b0, b1) = other.spans[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
            if a1 <= b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Timeline { spans: out }
    }

    /// Time in `self` and not in `other`.
    pub fn subtract(&self, other: &Timeline) -> Timeline {
        let mut out = Vec::new();
        let mut j = 0;
        for &(s, e) in &self.spans {
            let mut cursor = s;
            while j < other.spans.len() && other.spans[j].1 <= cursor {
                j += 1;
            }
            let mut k = j;
            while k < other.spans.len() && other.spans[k].0 < e {
                let (b0, b1) = other.spans[k];
                if b0 > cursor {
                    out.push((cursor, b0.min(e)));
                }
                cursor = cursor.max(b1);
                if cursor >= e {
                    break;
                }
                k += 1;
            }
            if cursor < e {
                out.push((cursor, e));
            }
        }
        Timeline { spans: out }
    }

    /// True if every span of `self` lies inside `other`.
    pub fn is_subset_of(&self, other: &Timeline) -> bool {
        self.subtract(other).is_empty()
    }
}

/// Regions covered by at least `min_count` of the given (possibly
/// overlapping) intervals. Used for overlap exclusion in scoring.
pub fn coverage_at_least<I: IntoIterator<Item = (f64, f64)>>(intervals: I, min_count: usize) -> Timeline {
    let mut events: Vec<(f64, i32)> = Vec::new();
    for (s, e) in intervals {
        if e > s {
            events.push((s, 1));
            events.push((e, -1));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut depth = 0i32;
    let mut open: Option<f64> = None;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (t, delta) in events {
        let before = depth;
        depth += delta;
        if before < min_count as i32 && depth >= min_count as i32 {
            open = Some(t);
        } else if before >= min_count as i32 && depth < min_count as i32 {
            if let Some(s) = open.take() {
                if t > s {
                    out.push((s, t));
                }
            }
        }
    }
    Timeline::from_intervals(out)
}
