//! Brute-force reference implementations used to check the fast paths.
//! None of these share arithmetic with the code they verify.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::io_formats::Turn;
use crate::scoring::{optimal_mapping, DerBreakdown};

/// Largest matrix side accepted by [`oracle_assignment`].
pub const MAX_ASSIGNMENT_SIDE: usize = 6;
pub const MAX_KMEANS_POINTS: usize = 8;
pub const MAX_KMEANS_K: usize = 3;

/// DER by counting frames of length `frame` seconds. Boundaries must lie on
/// the frame grid. Uses the speaker mapping from the scorer so only the
/// time accounting is independent.
pub fn oracle_der_frames(
    reference: &[Turn],
    hypothesis: &[Turn],
    collar: f64,
    frame: f64,
) -> DerBreakdown {
    let to_frame = |t: f64| (t / frame).round() as i64;
    let end = reference
        .iter()
        .chain(hypothesis)
        .map(|t| to_frame(t.onset + t.duration))
        .max()
        .unwrap_or(0)
        .max(0) as usize;

    fn activity(
        turns: &[Turn],
        end: usize,
        to_frame: &dyn Fn(f64) -> i64,
    ) -> BTreeMap<String, Vec<bool>> {
        let mut map: BTreeMap<String, Vec<bool>> = BTreeMap::new();
        for t in turns {
            let row = map
                .entry(t.speaker.clone())
                .or_insert_with(|| vec![false; end]);
            let a = to_frame(t.onset).max(0) as usize;
            let b = to_frame(t.onset + t.duration).max(0) as usize;
            for cell in row.iter_mut().take(b).skip(a) {
                *cell = true;
            }
        }
        map
    }
    let ref_act = activity(reference, end, &to_frame);
    let hyp_act = activity(hypothesis, end, &to_frame);

    let mut excluded = vec![false; end];
    let c = to_frame(collar);
    if c > 0 {
        for t in reference {
            for b in [to_frame(t.onset), to_frame(t.onset + t.duration)] {
                let lo = (b - c).max(0) as usize;
                let hi = ((b + c).max(0) as usize).min(end);
                for cell in excluded.iter_mut().take(hi).skip(lo) {
                    *cell = true;
                }
            }
        }
    }

    let mapping = optimal_mapping(reference, hypothesis);
    let (mut miss, mut fa, mut conf, mut scored) = (0u64, 0u64, 0u64, 0u64);
    for f in 0..end {
        if excluded[f] {
            continue;
        }
        let refs: Vec<&String> = ref_act
            .iter()
            .filter(|(_, a)| a[f])
            .map(|(s, _)| s)
            .collect();
        let hyps: Vec<&String> = hyp_act
            .iter()
            .filter(|(_, a)| a[f])
            .map(|(s, _)| s)
            .collect();
        let correct = hyps
            .iter()
            .filter(|h| mapping.get(h.as_str()).is_some_and(|r| refs.contains(&r)))
            .count() as u64;
        let (nr, nh) = (refs.len() as u64, hyps.len() as u64);
        if nr > nh {
            miss += nr - nh;
        } else {
            fa += nh - nr;
        }
        conf += nr.min(nh) - correct;
        scored += nr;
    }
    let secs = |n: u64| n as f64 * frame;
    let errors = miss + fa + conf;
    DerBreakdown {
        missed: secs(miss),
        false_alarm: secs(fa),
        speaker_error: secs(conf),
        scored_ref: secs(scored),
        der: if scored > 0 {
            errors as f64 / scored as f64
        } else if errors == 0 {
            0.0
        } else {
            f64::INFINITY
        },
    }
}

/// Maximum-weight injective assignment by enumerating every injection.
/// Returns the row-to-column mapping and its total; among equal totals the
/// lexicographically first mapping wins (identity on an all-zero square
/// matrix).
pub fn oracle_assignment(weights: &[Vec<f64>]) -> Result<(Vec<Option<usize>>, f64)> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows > MAX_ASSIGNMENT_SIDE || cols > MAX_ASSIGNMENT_SIDE {
        return Err(Error::InvalidArgument(format!(
            "assignment oracle limited to {MAX_ASSIGNMENT_SIDE}x{MAX_ASSIGNMENT_SIDE}, got {rows}x{cols}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Ok((vec![None; rows], 0.0));
    }

    // choose which side is enumerated so every element of the smaller side
    // is matched
    let transpose = rows > cols;
    let (small, large) = if transpose {
        (cols, rows)
    } else {
        (rows, cols)
    };
    let w = |s: usize, l: usize| {
        if transpose {
            weights[l][s]
        } else {
            weights[s][l]
        }
    };

    let mut best_total = f64::NEG_INFINITY;
    let mut best: Vec<usize> = Vec::new();
    let mut current = Vec::with_capacity(small);
    let mut used = vec![false; large];

    fn recurse(
        current: &mut Vec<usize>,
        used: &mut [bool],
        small: usize,
        w: &dyn Fn(usize, usize) -> f64,
        best_total: &mut f64,
        best: &mut Vec<usize>,
    ) {
        if current.len() == small {
            let total: f64 = current.iter().enumerate().map(|(s, &l)| w(s, l)).sum();
            if total > *best_total {
                *best_total = total;
                *best = current.clone();
            }
            return;
        }
        for l in 0..used.len() {
            if !used[l] {
                used[l] = true;
                current.push(l);
                recurse(current, used, small, w, best_total, best);
                current.pop();
                used[l] = false;
            }
        }
    }
    recurse(
        &mut current,
        &mut used,
        small,
        &w,
        &mut best_total,
        &mut best,
    );

    let mut mapping = vec![None; rows];
    for (s, &l) in best.iter().enumerate() {
        if transpose {
            mapping[l] = Some(s);
        } else {
            mapping[s] = Some(l);
        }
    }
    Ok((mapping, best_total))
}

/// Globally minimal k-means inertia over all partitions of `points` into at
/// most `k` non-empty groups.
pub fn oracle_kmeans(points: &[Vec<f64>], k: usize) -> Result<f64> {
    let n = points.len();
    if n == 0 || n > MAX_KMEANS_POINTS || k == 0 || k > MAX_KMEANS_K {
        return Err(Error::InvalidArgument(format!(
            "k-means oracle limited to 1..={MAX_KMEANS_POINTS} points and k in 1..={MAX_KMEANS_K}, got N={n}, k={k}"
        )));
    }
    let dim = points[0].len();
    let cost = |groups: &[usize]| -> f64 {
        let mut total = 0.0;
        for g in 0..k {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(groups)
                .filter(|(_, &gi)| gi == g)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            for d in 0..dim {
                let mean = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                total += members.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>();
            }
        }
        total
    };

    // restricted growth strings: groups[i] <= 1 + max(groups[..i])
    let mut best = f64::INFINITY;
    let mut groups = vec![0usize; n];
    fn walk(
        i: usize,
        max_used: usize,
        groups: &mut [usize],
        k: usize,
        best: &mut f64,
        cost: &dyn Fn(&[usize]) -> f64,
    ) {
        if i == groups.len() {
            *best = best.min(cost(groups));
            return;
        }
        for g in 0..=(max_used + 1).min(k - 1) {
            groups[i] = g;
            walk(i + 1, max_used.max(g), groups, k, best, cost);
        }
    }
    groups[0] = 0;
    walk(1, 0, &mut groups, k, &mut best, &cost);
    Ok(best)
}
