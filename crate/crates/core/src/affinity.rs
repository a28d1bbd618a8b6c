//! Cosine affinity, row-wise pruning and symmetrization.
//!
//! The matrix state (raw, pruned, symmetric) is tracked in the type so the
//! steps can only be chained in order.

use std::marker::PhantomData;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::io_formats::SegmentEmbeddings;

#[derive(Debug, Clone, Copy)]
pub struct Raw;
#[derive(Debug, Clone, Copy)]
pub struct Pruned;
#[derive(Debug, Clone, Copy)]
pub struct Symmetric;

#[derive(Debug, Clone)]
pub struct AffinityMatrix<S> {
    values: DMatrix<f64>,
    _state: PhantomData<S>,
}

impl<S> AffinityMatrix<S> {
    fn wrap(values: DMatrix<f64>) -> Self {
        AffinityMatrix {
            values,
            _state: PhantomData,
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

impl AffinityMatrix<Raw> {
    /// Wraps an arbitrary square matrix as a raw affinity. Used for
    /// hand-built graphs; `cosine_affinity` is the normal constructor.
    pub fn from_raw(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::InvalidInput(format!(
                "affinity must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        Ok(Self::wrap(values))
    }
}

impl AffinityMatrix<Symmetric> {
    /// Wraps a matrix that is already exactly symmetric.
    pub fn from_symmetric(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() || values != values.transpose() {
            return Err(Error::InvalidInput(
                "matrix is not exactly symmetric".into(),
            ));
        }
        Ok(Self::wrap(values))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruningConfig {
    alpha: f64,
}

impl PruningConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(PruningConfig { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of entries zeroed per row before clamping: `ceil(n * (1 - alpha))`.
    ///
    /// Grid values such as 0.07 are not exact in binary, and `100 * (1 - 0.07)`
    /// lands a hair above 93; the tolerance keeps the ceiling on the intended
    /// integer.
    pub fn zeroed(&self, n: usize) -> usize {
        let x = n as f64 * (1.0 - self.alpha);
        let c = (x - 1e-9).ceil();
        (c.max(0.0) as usize).min(n)
    }

    /// Entries retained per row: `max(1, n - ceil(n * (1 - alpha)))`.
    pub fn keep(&self, n: usize) -> usize {
        if n == 0 {
            return 0;
        }
        (n - self.zeroed(n)).max(1)
    }
}

/// Cosine similarity between every pair of segment embeddings. The diagonal
/// is set to exactly 1.
pub fn cosine_affinity(e: &SegmentEmbeddings) -> Result<AffinityMatrix<Raw>> {
    let n = e.vectors.len();
    if n == 0 {
        return Err(Error::InvalidInput("no segments".into()));
    }
    let mut sq_norms = Vec::with_capacity(n);
    for (i, v) in e.vectors.iter().enumerate() {
        let sq: f64 = v.iter().map(|x| x * x).sum();
        if !(sq > 0.0 && sq.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "segment {i} has zero or non-finite norm"
            )));
        }
        sq_norms.push(sq);
    }
    let mut m = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = e.vectors[i]
                .iter()
                .zip(&e.vectors[j])
                .map(|(a, b)| a * b)
                .sum();
            // sqrt of the product keeps identical vectors at exactly 1
            let c = (dot / (sq_norms[i] * sq_norms[j]).sqrt()).clamp(-1.0, 1.0);
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    Ok(AffinityMatrix::wrap(m))
}

/// Zeroes the smallest `ceil(n(1 - alpha))` entries of every row, retaining
/// at least one. Among equal values the smaller column index is retained.
pub fn prune_rows(m: &AffinityMatrix<Raw>, cfg: PruningConfig) -> AffinityMatrix<Pruned> {
    let n = m.n();
    let keep = cfg.keep(n);
    let mut out = m.values.clone();
    if keep >= n {
        return AffinityMatrix::wrap(out);
    }
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| {
            m.values[(i, b)]
                .total_cmp(&m.values[(i, a)])
                .then(a.cmp(&b))
        });
        for &j in &order[keep..] {
            out[(i, j)] = 0.0;
        }
    }
    AffinityMatrix::wrap(out)
}

/// `(M + M^T) / 2`, written entrywise so the result is exactly symmetric.
pub fn symmetrize(m: &AffinityMatrix<Pruned>) -> AffinityMatrix<Symmetric> {
    let n = m.n();
    let v = &m.values;
    let mut out = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = v[(i, i)];
        for j in (i + 1)..n {
            let s = (v[(i, j)] + v[(j, i)]) / 2.0;
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    AffinityMatrix::wrap(out)
}
