//! Lloyd's k-means with k-means++ seeding and best-of-n restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Canonical labels: segment 0 has label 0, the next new cluster seen
    /// in index order gets 1, and so on.
    pub labels: Vec<usize>,
    /// Centroids indexed by canonical label.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

impl ClusterResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

/// Clusters `points` into `k` groups. Restart `r` draws from the ChaCha
/// stream `r` under `seed`, so results are reproducible and independent of
/// how restarts are scheduled. The lowest-inertia run wins, earliest restart
/// on ties.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    cfg: &KMeansConfig,
) -> Result<ClusterResult> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k-means needs 1 <= k <= N, got k={k}, N={n}"
        )));
    }
    let dim = points[0].len();
    if points
        .iter()
        .any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::InvalidInput(
            "k-means points must be finite and of equal dimension".into(),
        ));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be positive".into()));
    }

    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let run = lloyd(points, k, &mut rng, cfg);
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (labels, centroids, inertia) = best.expect("at least one restart");
    Ok(canonicalize(labels, centroids, inertia))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                if target < w {
                    pick = Some(i);
                    break;
                }
                target -= w;
            }
            // rounding can walk off the end; take the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // every point coincides with a centroid; take an unused index
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_dist(p, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        *label = best;
        inertia += best_d;
    }
    inertia
}

/// Recomputes centroids as cluster means. An empty cluster takes over the
/// point farthest from its current centroid.
fn update(points: &[Vec<f64>], k: usize, labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            break;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[labels[i]]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(far) = far else { break };
        labels[far] = empty;
        centroids[empty] = points[far].clone();
    }

    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels.iter()) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            centroids[c] = sums[c].iter().map(|s| s * inv).collect();
        }
    }
}

fn lloyd(
    points: &[Vec<f64>],
    k: usize,
    rng: &mut ChaCha8Rng,
    cfg: &KMeansConfig,
) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let mut centroids = plus_plus_init(points, k, rng);
    let mut labels = vec![0usize; points.len()];
    let mut inertia = assign(points, &centroids, &mut labels);

    for _ in 0..cfg.max_iter {
        let previous = centroids.clone();
        update(points, k, &mut labels, &mut centroids);
        let next = assign(points, &centroids, &mut labels);
        debug_assert!(
            next <= inertia + 1e-9 * inertia.max(1.0),
            "inertia rose from {inertia} to {next}"
        );
        inertia = next;
        let movement = previous
            .iter()
            .zip(&centroids)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        if movement < cfg.tol {
            break;
        }
    }
    (labels, centroids, inertia)
}

/// Renumbers clusters by first occurrence over point index. Clusters with
/// no points keep their centroid and are numbered after the used ones.
fn canonicalize(labels: Vec<usize>, centroids: Vec<Vec<f64>>, inertia: f64) -> ClusterResult {
    let k = centroids.len();
    let mut remap = vec![usize::MAX; k];
    let mut next = 0;
    for &l in &labels {
        if remap[l] == usize::MAX {
            remap[l] = next;
            next += 1;
        }
    }
    for r in remap.iter_mut() {
        if *r == usize::MAX {
            *r = next;
            next += 1;
        }
    }
    let mut ordered = vec![Vec::new(); k];
    for (old, c) in centroids.into_iter().enumerate() {
        ordered[remap[old]] = c;
    }
    ClusterResult {
        labels: labels.into_iter().map(|l| remap[l]).collect(),
        centroids: ordered,
        inertia,
    }
}
