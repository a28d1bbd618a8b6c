//! Unnormalized graph Laplacian, its eigendecomposition, eigengap speaker
//! counting and the spectral embedding fed to k-means.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::affinity::{AffinityMatrix, Symmetric};
use crate::error::{Error, Result};

/// Default ceiling on the estimated speaker count.
pub const DEFAULT_K_MAX: usize = 10;

/// `W = D - M` for a symmetric affinity `M`, with `D` the diagonal of row sums.
#[derive(Debug, Clone)]
pub struct Laplacian {
    pub w: DMatrix<f64>,
    pub degrees: Vec<f64>,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }
}

/// Eigenpairs of the Laplacian in ascending eigenvalue order. Column `i` of
/// `eigenvectors` belongs to `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Rows of the `N x k` matrix of the first `k` eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
}

pub fn laplacian(m: &AffinityMatrix<Symmetric>) -> Laplacian {
    let a = m.values();
    let n = a.nrows();
    let degrees: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
    let mut w = -a.clone();
    for (i, d) in degrees.iter().enumerate() {
        w[(i, i)] += d;
    }
    Laplacian { w, degrees }
}

/// Dense symmetric eigendecomposition with ascending eigenvalues. Each
/// eigenvector is sign-normalized so its largest-magnitude entry (first one
/// on ties) is positive.
pub fn eig_sym(l: &Laplacian) -> Result<SpectralDecomposition> {
    decompose(l.w.clone())
}

pub(crate) fn decompose(w: DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = w.nrows();
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: vec![],
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let max_iter = 100 * n + 1000;
    let eig = SymmetricEigen::try_new(w, f64::EPSILON, max_iter).ok_or(Error::NoConvergence {
        size: n,
        iterations: max_iter,
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(src).into_owned();
        fix_sign(&mut v);
        eigenvectors.set_column(col, &v);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Maximum-eigengap estimate of the number of clusters: the 1-based `i` in
/// `1..=min(k_max, N-1)` maximizing `lambda[i+1] - lambda[i]`, smallest `i`
/// on ties. A single-segment decomposition yields 1.
pub fn estimate_k(dec: &SpectralDecomposition, k_max: usize) -> usize {
    estimate_k_from_eigenvalues(&dec.eigenvalues, k_max)
}

pub fn estimate_k_from_eigenvalues(eigenvalues: &[f64], k_max: usize) -> usize {
    let n = eigenvalues.len();
    if n <= 1 {
        return 1;
    }
    let upper = k_max.min(n - 1).max(1);
    let mut best = 1;
    let mut best_gap = f64::NEG_INFINITY;
    for i in 1..=upper {
        let gap = eigenvalues[i] - eigenvalues[i - 1];
        if gap > best_gap {
            best_gap = gap;
            best = i;
        }
    }
    best
}

/// Rows of the eigenvectors for the `k` smallest eigenvalues. Rows are not
/// re-normalized.
pub fn spectral_embed(dec: &SpectralDecomposition, k: usize) -> Result<SpectralEmbedding> {
    let n = dec.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "spectral embedding dimension {k} outside 1..={n}"
        )));
    }
    let points = (0..n)
        .map(|i| (0..k).map(|j| dec.eigenvectors[(i, j)]).collect())
        .collect();
    Ok(SpectralEmbedding { k, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::{prune_rows, symmetrize, AffinityMatrix, PruningConfig};
    use proptest::prelude::*;

    fn sym(values: DMatrix<f64>) -> AffinityMatrix<Symmetric> {
        AffinityMatrix::from_symmetric(values).unwrap()
    }

    /// Block-diagonal affinity with the given block sizes; within-block
    /// weights are 0.5 off the diagonal.
    fn blocks(sizes: &[usize]) -> DMatrix<f64> {
        let n: usize = sizes.iter().sum();
        let mut owner = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            owner.extend(std::iter::repeat_n(b, s));
        }
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else if owner[i] == owner[j] {
                0.5
            } else {
                0.0
            }
        })
    }

    #[test]
    fn laplacian_two_by_two() {
        let l = laplacian(&sym(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])));
        assert_eq!(l.degrees, vec![1.5, 1.5]);
        assert_eq!(l.w, DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]));
    }

    #[test]
    fn laplacian_preserves_block_structure() {
        let l = laplacian(&sym(blocks(&[2, 3])));
        for i in 0..2 {
            for j in 2..5 {
                assert_eq!(l.w[(i, j)], 0.0);
                assert_eq!(l.w[(j, i)], 0.0);
            }
        }
    }

    #[test]
    fn eig_zero_matrix() {
        let dec = decompose(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(dec.eigenvalues, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn eig_two_by_two_closed_form() {
        // eigenvalues of [[a, b], [b, a]] are a - b and a + b
        let l = laplacian(&sym(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])));
        let dec = eig_sym(&l).unwrap();
        assert!(dec.eigenvalues[0].abs() < 1e-14);
        assert!((dec.eigenvalues[1] - 1.0).abs() < 1e-14);
        // sign convention: largest entry positive, first on ties
        let v0 = dec.eigenvectors.column(0);
        assert!(v0[0] > 0.0 && v0[1] > 0.0);
        let v1 = dec.eigenvectors.column(1);
        assert!(v1[0] > 0.0 && v1[1] < 0.0);
    }

    #[test]
    fn zero_eigenvalue_multiplicity_counts_components() {
        let dec = eig_sym(&laplacian(&sym(blocks(&[3, 4, 2])))).unwrap();
        let zeros = dec.eigenvalues.iter().filter(|&&x| x < 1e-8).count();
        assert_eq!(zeros, 3);
        assert_eq!(estimate_k(&dec, 5), 3);
    }

    #[test]
    fn estimate_k_examples() {
        assert_eq!(estimate_k_from_eigenvalues(&[0.0, 0.001, 1.2, 1.5], 3), 2);
        assert_eq!(estimate_k_from_eigenvalues(&[0.0, 1.0, 1.0, 1.0], 3), 1);
        assert_eq!(estimate_k_from_eigenvalues(&[0.0], 3), 1);
        // ties go to the smaller count
        assert_eq!(estimate_k_from_eigenvalues(&[0.0, 1.0, 2.0, 3.0], 3), 1);
        // k_max larger than N - 1 is clamped
        assert_eq!(estimate_k_from_eigenvalues(&[0.0, 0.0, 5.0], 10), 2);
    }

    #[test]
    fn embed_full_and_bad_k() {
        let dec = eig_sym(&laplacian(&sym(blocks(&[2, 2])))).unwrap();
        let full = spectral_embed(&dec, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(full.points[i][j], dec.eigenvectors[(i, j)]);
            }
        }
        assert!(spectral_embed(&dec, 5).is_err());
        assert!(spectral_embed(&dec, 0).is_err());
    }

    #[test]
    fn two_blocks_collapse_to_two_points() {
        let dec = eig_sym(&laplacian(&sym(blocks(&[4, 6])))).unwrap();
        let e = spectral_embed(&dec, 2).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-6);
        for i in 0..4 {
            assert!(close(&e.points[i], &e.points[0]));
        }
        for i in 4..10 {
            assert!(close(&e.points[i], &e.points[4]));
        }
        let d: f64 = e.points[0]
            .iter()
            .zip(&e.points[4])
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        assert!(d.sqrt() > 0.1);
        for j in 0..2 {
            let norm: f64 = e.points.iter().map(|p| p[j] * p[j]).sum();
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    fn random_symmetric() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..24).prop_flat_map(|n| {
            prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
                let m = DMatrix::from_vec(n, n, v);
                (&m + m.transpose()) * 0.5
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn eig_residual_and_orthonormality(m in random_symmetric()) {
            let n = m.nrows();
            let dec = decompose(m.clone()).unwrap();
            prop_assert!(dec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            for i in 0..n {
                let v = dec.eigenvectors.column(i);
                let r = (&m * v - v * dec.eigenvalues[i]).norm();
                prop_assert!(r <= 1e-8 * dec.eigenvalues[i].abs().max(1.0));
            }
            let gram = dec.eigenvectors.transpose() * &dec.eigenvectors;
            prop_assert!((gram - DMatrix::<f64>::identity(n, n)).amax() < 1e-8);
        }

        #[test]
        fn nonnegative_affinity_gives_psd_laplacian(
            v in (1usize..20).prop_flat_map(|n| prop::collection::vec(0.0f64..1.0, n * n)),
            alpha in 0.0f64..=1.0,
        ) {
            let n = (v.len() as f64).sqrt() as usize;
            let raw = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { v[i * n + j] });
            let raw = AffinityMatrix::from_raw(raw).unwrap();
            let s = symmetrize(&prune_rows(&raw, PruningConfig::new(alpha).unwrap()));
            let l = laplacian(&s);
            for i in 0..n {
                prop_assert!(l.w.row(i).sum().abs() <= 1e-9 * n as f64);
            }
            prop_assert_eq!(&l.w, &l.w.transpose());
            let dec = eig_sym(&l).unwrap();
            prop_assert!(dec.eigenvalues[0] >= -1e-9);
            let ones = DVector::from_element(n, 1.0);
            prop_assert!((&l.w * ones).amax() <= 1e-9 * n as f64);
        }

        #[test]
        fn estimate_k_scale_invariant(
            gaps in prop::collection::vec(0.0f64..2.0, 1..16),
            c in 0.001f64..1000.0,
            k_max in 1usize..12,
        ) {
            let mut acc = 0.0;
            let lambdas: Vec<f64> = std::iter::once(0.0)
                .chain(gaps.iter().map(|g| { acc += g; acc }))
                .collect();
            let scaled: Vec<f64> = lambdas.iter().map(|x| x * c).collect();
            prop_assert_eq!(
                estimate_k_from_eigenvalues(&lambdas, k_max),
                estimate_k_from_eigenvalues(&scaled, k_max)
            );
        }
    }
}
