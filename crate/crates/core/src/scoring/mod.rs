//! Diarization error rate with optimal speaker mapping and a forgiveness
//! collar around reference boundaries, plus speaker-count error.

mod hungarian;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub use hungarian::max_weight_assignment;

use crate::error::{Error, Result};
use crate::io_formats::{group_by_recording, Turn};

pub const DEFAULT_COLLAR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    pub collar: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            collar: DEFAULT_COLLAR,
        }
    }
}

impl ScoringConfig {
    pub fn new(collar: f64) -> Result<Self> {
        if !(collar >= 0.0 && collar.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "collar must be a non-negative number, got {collar}"
            )));
        }
        Ok(ScoringConfig { collar })
    }
}

/// Error times in seconds and the resulting DER as a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DerBreakdown {
    pub missed: f64,
    pub false_alarm: f64,
    pub speaker_error: f64,
    pub scored_ref: f64,
    pub der: f64,
}

impl DerBreakdown {
    fn from_totals(missed: f64, false_alarm: f64, speaker_error: f64, scored_ref: f64) -> Self {
        let errors = missed + false_alarm + speaker_error;
        // a reference that lies entirely inside collars has no denominator
        let der = if scored_ref > 0.0 {
            errors / scored_ref
        } else if errors == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        DerBreakdown {
            missed,
            false_alarm,
            speaker_error,
            scored_ref,
            der,
        }
    }

    pub fn errors(&self) -> f64 {
        self.missed + self.false_alarm + self.speaker_error
    }

    pub fn der_percent(&self) -> f64 {
        100.0 * self.der
    }
}

/// Per-speaker activity as sorted, disjoint intervals.
struct Activity {
    names: Vec<String>,
    spans: Vec<Vec<(f64, f64)>>,
}

impl Activity {
    fn new(turns: &[Turn]) -> Self {
        let mut by_speaker: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for t in turns {
            by_speaker
                .entry(t.speaker.as_str())
                .or_default()
                .push((t.onset, t.offset()));
        }
        let mut names = Vec::with_capacity(by_speaker.len());
        let mut spans = Vec::with_capacity(by_speaker.len());
        for (name, s) in by_speaker {
            names.push(name.to_string());
            spans.push(union(s));
        }
        Activity { names, spans }
    }

    fn boundaries(&self) -> impl Iterator<Item = f64> + '_ {
        self.spans.iter().flatten().flat_map(|&(a, b)| [a, b])
    }
}

fn union(mut spans: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for (a, b) in spans {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Walks the elementary intervals between consecutive breakpoints and
/// reports which speakers of each side are active in them.
struct Sweep<'a> {
    sides: [&'a Activity; 2],
    cursors: [Vec<usize>; 2],
}

impl<'a> Sweep<'a> {
    fn new(reference: &'a Activity, hypothesis: &'a Activity) -> Self {
        Sweep {
            sides: [reference, hypothesis],
            cursors: [
                vec![0; reference.spans.len()],
                vec![0; hypothesis.spans.len()],
            ],
        }
    }

    /// Active speaker indices at time `t`; `t` must be non-decreasing
    /// across calls.
    fn active(&mut self, side: usize, t: f64, out: &mut Vec<usize>) {
        out.clear();
        for (s, spans) in self.sides[side].spans.iter().enumerate() {
            let cur = &mut self.cursors[side][s];
            while *cur < spans.len() && spans[*cur].1 <= t {
                *cur += 1;
            }
            if *cur < spans.len() && spans[*cur].0 <= t {
                out.push(s);
            }
        }
    }
}

fn breakpoints(extra: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut points: Vec<f64> = extra.filter(|t| t.is_finite()).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Overlap durations between every reference and hypothesis speaker.
fn overlap_matrix(reference: &Activity, hypothesis: &Activity) -> Vec<Vec<f64>> {
    let mut overlap = vec![vec![0.0; hypothesis.names.len()]; reference.names.len()];
    let points = breakpoints(reference.boundaries().chain(hypothesis.boundaries()));
    let mut sweep = Sweep::new(reference, hypothesis);
    let (mut r_act, mut h_act) = (Vec::new(), Vec::new());
    for w in points.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        sweep.active(0, mid, &mut r_act);
        sweep.active(1, mid, &mut h_act);
        for &r in &r_act {
            for &h in &h_act {
                overlap[r][h] += t1 - t0;
            }
        }
    }
    overlap
}

fn mapping_indices(reference: &Activity, hypothesis: &Activity) -> Vec<Option<usize>> {
    let overlap = overlap_matrix(reference, hypothesis);
    if reference.names.is_empty() || hypothesis.names.is_empty() {
        return vec![None; hypothesis.names.len()];
    }
    // rows are hypothesis speakers
    let weights: Vec<Vec<f64>> = (0..hypothesis.names.len())
        .map(|h| (0..reference.names.len()).map(|r| overlap[r][h]).collect())
        .collect();
    max_weight_assignment(&weights).0
}

/// Injective hypothesis-to-reference speaker mapping that maximizes the
/// total overlapped duration of matched pairs.
pub fn optimal_mapping(reference: &[Turn], hypothesis: &[Turn]) -> BTreeMap<String, String> {
    let r = Activity::new(reference);
    let h = Activity::new(hypothesis);
    mapping_indices(&r, &h)
        .into_iter()
        .enumerate()
        .filter_map(|(hi, ri)| ri.map(|ri| (h.names[hi].clone(), r.names[ri].clone())))
        .collect()
}

/// Merged no-score zones `[t - collar, t + collar]` around every reference
/// turn onset and offset. Empty for a zero collar.
pub fn collar_zones(reference: &[Turn], cfg: &ScoringConfig) -> Vec<(f64, f64)> {
    if cfg.collar <= 0.0 {
        return Vec::new();
    }
    let zones = reference
        .iter()
        .flat_map(|t| [t.onset, t.offset()])
        .map(|b| (b - cfg.collar, b + cfg.collar))
        .collect();
    union(zones)
}

/// The scored part of the time axis: everything outside the collar zones.
/// The outermost intervals are unbounded.
pub fn scored_timeline(reference: &[Turn], cfg: &ScoringConfig) -> Vec<(f64, f64)> {
    let mut scored = Vec::new();
    let mut from = f64::NEG_INFINITY;
    for (a, b) in collar_zones(reference, cfg) {
        scored.push((from, a));
        from = b;
    }
    scored.push((from, f64::INFINITY));
    scored
}

/// DER of one recording.
pub fn compute_der(
    reference: &[Turn],
    hypothesis: &[Turn],
    cfg: &ScoringConfig,
) -> Result<DerBreakdown> {
    if reference.is_empty() {
        return Err(Error::UndefinedDenominator(
            "reference annotation is empty".into(),
        ));
    }
    let r = Activity::new(reference);
    let h = Activity::new(hypothesis);
    let mapping = mapping_indices(&r, &h);
    let zones = collar_zones(reference, cfg);

    let points = breakpoints(
        r.boundaries()
            .chain(h.boundaries())
            .chain(zones.iter().flat_map(|&(a, b)| [a, b])),
    );
    let mut sweep = Sweep::new(&r, &h);
    let (mut r_act, mut h_act) = (Vec::new(), Vec::new());
    let mut zone = 0;
    let (mut missed, mut false_alarm, mut speaker_error, mut scored_ref) = (0.0, 0.0, 0.0, 0.0);

    for w in points.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        while zone < zones.len() && zones[zone].1 <= mid {
            zone += 1;
        }
        if zone < zones.len() && zones[zone].0 <= mid {
            continue;
        }
        sweep.active(0, mid, &mut r_act);
        sweep.active(1, mid, &mut h_act);
        let d = t1 - t0;
        let (n_ref, n_hyp) = (r_act.len(), h_act.len());
        let correct = h_act
            .iter()
            .filter(|&&hs| mapping[hs].is_some_and(|rs| r_act.contains(&rs)))
            .count();
        missed += d * n_ref.saturating_sub(n_hyp) as f64;
        false_alarm += d * n_hyp.saturating_sub(n_ref) as f64;
        speaker_error += d * (n_ref.min(n_hyp) - correct) as f64;
        scored_ref += d * n_ref as f64;
    }
    Ok(DerBreakdown::from_totals(
        missed,
        false_alarm,
        speaker_error,
        scored_ref,
    ))
}

/// Time-weighted corpus DER: component sums, then summed errors over summed
/// scored reference time.
pub fn aggregate_der(per_recording: &[DerBreakdown]) -> Result<DerBreakdown> {
    if per_recording.is_empty() {
        return Err(Error::UndefinedDenominator(
            "no recordings to aggregate".into(),
        ));
    }
    let mut missed = 0.0;
    let mut false_alarm = 0.0;
    let mut speaker_error = 0.0;
    let mut scored_ref = 0.0;
    for b in per_recording {
        missed += b.missed;
        false_alarm += b.false_alarm;
        speaker_error += b.speaker_error;
        scored_ref += b.scored_ref;
    }
    if scored_ref <= 0.0 {
        return Err(Error::UndefinedDenominator(
            "total scored reference time is zero".into(),
        ));
    }
    Ok(DerBreakdown::from_totals(
        missed,
        false_alarm,
        speaker_error,
        scored_ref,
    ))
}

/// Mean absolute difference between true and estimated speaker counts.
pub fn speaker_count_error(pairs: &[(usize, usize)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "speaker count error needs at least one recording".into(),
        ));
    }
    let total: usize = pairs.iter().map(|&(t, e)| t.abs_diff(e)).sum();
    Ok(total as f64 / pairs.len() as f64)
}

/// Number of distinct speakers in an annotation.
pub fn speaker_count(turns: &[Turn]) -> usize {
    turns
        .iter()
        .map(|t| t.speaker.as_str())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Scores every recording present in the reference. Recordings missing
/// from the hypothesis score as fully missed.
pub fn score_recordings(
    reference: &[Turn],
    hypothesis: &[Turn],
    cfg: &ScoringConfig,
) -> Result<Vec<(String, DerBreakdown)>> {
    let refs = group_by_recording(reference);
    let hyps = group_by_recording(hypothesis);
    let empty = Vec::new();
    refs.iter()
        .map(|(rec, r)| {
            let h = hyps.get(rec).unwrap_or(&empty);
            Ok((rec.clone(), compute_der(r, h, cfg)?))
        })
        .collect()
}

pub const DER_REPORT_HEADER: &str =
    "recording\tmissed\tfalse_alarm\tspeaker_error\tscored_ref\tder_percent";

fn der_row(out: &mut String, name: &str, b: &DerBreakdown) {
    let _ = writeln!(
        out,
        "{name}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
        b.missed,
        b.false_alarm,
        b.speaker_error,
        b.scored_ref,
        b.der_percent()
    );
}

/// TSV breakdown: header, one row per recording, then an `ALL` row with the
/// time-weighted aggregate.
pub fn der_report(rows: &[(String, DerBreakdown)]) -> Result<String> {
    let breakdowns: Vec<DerBreakdown> = rows.iter().map(|(_, b)| *b).collect();
    let total = aggregate_der(&breakdowns)?;
    let mut out = String::new();
    out.push_str(DER_REPORT_HEADER);
    out.push('\n');
    for (name, b) in rows {
        der_row(&mut out, name, b);
    }
    der_row(&mut out, "ALL", &total);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(on: f64, off: f64, spk: &str) -> Turn {
        Turn::spanning("r", on, off, spk)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn mapping_identity_and_matrix_example() {
        let m = optimal_mapping(&[t(0.0, 10.0, "A")], &[t(0.0, 10.0, "x")]);
        assert_eq!(m.get("x").map(String::as_str), Some("A"));

        // overlaps: x0 with A 5, with B 1; x1 with A 2, with B 6
        let reference = [
            t(0.0, 5.0, "A"),
            t(5.0, 6.0, "B"),
            t(10.0, 12.0, "A"),
            t(12.0, 18.0, "B"),
        ];
        let hypothesis = [t(0.0, 6.0, "x0"), t(10.0, 18.0, "x1")];
        let m = optimal_mapping(&reference, &hypothesis);
        assert_eq!(m["x0"], "A");
        assert_eq!(m["x1"], "B");
    }

    #[test]
    fn mapping_more_hyp_than_ref() {
        let reference = [t(0.0, 4.0, "A"), t(4.0, 8.0, "B")];
        let hypothesis = [t(0.0, 3.0, "p"), t(3.0, 5.0, "q"), t(5.0, 8.0, "s")];
        let m = optimal_mapping(&reference, &hypothesis);
        assert_eq!(m.len(), 2);
        assert_eq!(m["p"], "A");
        assert_eq!(m["s"], "B");
    }

    #[test]
    fn mapping_empty_sides() {
        assert!(optimal_mapping(&[], &[t(0.0, 1.0, "x")]).is_empty());
        assert!(optimal_mapping(&[t(0.0, 1.0, "A")], &[]).is_empty());
    }

    #[test]
    fn scored_timeline_examples() {
        let cfg = ScoringConfig::new(0.25).unwrap();
        let s = scored_timeline(&[t(0.0, 10.0, "A")], &cfg);
        assert_eq!(
            s,
            vec![
                (f64::NEG_INFINITY, -0.25),
                (0.25, 9.75),
                (10.25, f64::INFINITY)
            ]
        );
        let s = scored_timeline(&[t(0.0, 10.0, "A")], &ScoringConfig::new(0.0).unwrap());
        assert_eq!(s, vec![(f64::NEG_INFINITY, f64::INFINITY)]);

        // boundaries 0.3 s apart share one exclusion zone
        let zones = collar_zones(&[t(0.0, 5.0, "A"), t(5.3, 9.0, "B")], &cfg);
        assert_eq!(zones.len(), 3);
        assert!(close(zones[1].0, 4.75) && close(zones[1].1, 5.55));
    }

    #[test]
    fn der_identical_is_zero() {
        let reference = [t(0.0, 3.0, "A"), t(3.0, 7.0, "B"), t(6.0, 9.0, "A")];
        let b = compute_der(&reference, &reference, &ScoringConfig::new(0.0).unwrap()).unwrap();
        assert_eq!(b.der, 0.0);
        assert!(close(b.scored_ref, 10.0));
    }

    #[test]
    fn der_twenty_percent_example() {
        let reference = [t(0.0, 10.0, "A")];
        let hypothesis = [t(0.0, 8.0, "A'"), t(8.0, 10.0, "B'")];
        let b = compute_der(&reference, &hypothesis, &ScoringConfig::new(0.0).unwrap()).unwrap();
        assert!(close(b.speaker_error, 2.0));
        assert!(close(b.der, 0.2));

        let b = compute_der(&reference, &hypothesis, &ScoringConfig::default()).unwrap();
        assert!(close(b.scored_ref, 9.5));
        assert!(close(b.speaker_error, 1.75));
        assert!(close(b.der, 1.75 / 9.5));
    }

    #[test]
    fn der_miss_and_false_alarm_with_overlap() {
        // reference overlap [2, 4]; single-speaker hypothesis misses one voice
        let reference = [t(0.0, 4.0, "A"), t(2.0, 6.0, "B")];
        let hypothesis = [t(0.0, 3.0, "x"), t(3.0, 6.0, "y"), t(7.0, 8.0, "y")];
        let b = compute_der(&reference, &hypothesis, &ScoringConfig::new(0.0).unwrap()).unwrap();
        assert!(close(b.scored_ref, 8.0));
        assert!(close(b.missed, 2.0));
        assert!(close(b.false_alarm, 1.0));
        assert!(close(b.speaker_error, 0.0));
    }

    #[test]
    fn der_empty_reference_is_an_error() {
        let err = compute_der(&[], &[t(0.0, 1.0, "x")], &ScoringConfig::default()).unwrap_err();
        assert!(matches!(err, Error::UndefinedDenominator(_)));
    }

    #[test]
    fn der_is_invariant_to_renaming() {
        let reference = [t(0.0, 5.0, "A"), t(5.0, 9.0, "B")];
        let h1 = [t(0.0, 6.0, "u"), t(6.0, 9.0, "v")];
        let h2 = [t(0.0, 6.0, "zz"), t(6.0, 9.0, "aa")];
        let cfg = ScoringConfig::default();
        assert_eq!(
            compute_der(&reference, &h1, &cfg).unwrap(),
            compute_der(&reference, &h2, &cfg).unwrap()
        );
    }

    #[test]
    fn aggregate_examples() {
        let one = DerBreakdown::from_totals(1.0, 0.0, 0.0, 10.0);
        assert_eq!(aggregate_der(&[one]).unwrap(), one);

        let a = DerBreakdown::from_totals(1.0, 0.0, 0.0, 10.0);
        let b = DerBreakdown::from_totals(0.0, 0.0, 3.0, 10.0);
        assert!(close(
            aggregate_der(&[a, b]).unwrap().der,
            (a.der + b.der) / 2.0
        ));

        let c = DerBreakdown::from_totals(0.0, 0.0, 0.0, 90.0);
        assert!(close(aggregate_der(&[a, c]).unwrap().der, 0.01));

        assert!(aggregate_der(&[]).is_err());
        assert!(aggregate_der(&[DerBreakdown::default()]).is_err());
    }

    #[test]
    fn count_error_examples() {
        assert_eq!(speaker_count_error(&[(4, 4), (4, 5), (3, 1)]).unwrap(), 1.0);
        assert_eq!(speaker_count_error(&[(4, 4), (3, 3)]).unwrap(), 0.0);
        assert_eq!(speaker_count_error(&[(2, 5)]).unwrap(), 3.0);
        assert!(speaker_count_error(&[]).is_err());
    }

    #[test]
    fn report_has_all_row() {
        let rows = vec![(
            "r".to_string(),
            DerBreakdown::from_totals(1.0, 0.0, 0.0, 10.0),
        )];
        let report = der_report(&rows).unwrap();
        let lines: Vec<&str> = report.lines().collect();
        assert_eq!(lines[0], DER_REPORT_HEADER);
        assert_eq!(lines[1], "r\t1.000\t0.000\t0.000\t10.000\t10.000");
        assert_eq!(lines[2], "ALL\t1.000\t0.000\t0.000\t10.000\t10.000");
    }
}
