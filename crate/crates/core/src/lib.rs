//! Speaker diarization by spectral clustering.
//!
//! The pipeline for one recording is: cosine affinity between segment
//! embeddings, row-wise pruning controlled by `alpha`, symmetrization, the
//! unnormalized graph Laplacian, a dense symmetric eigendecomposition, a
//! maximum-eigengap estimate of the speaker count, and k-means on the
//! leading eigenvectors. Around it sit a DER scorer with Hungarian speaker
//! mapping, an `alpha` sweep / cross-domain harness and a synthetic corpus
//! generator with brute-force oracles.

pub mod affinity;
pub mod error;
pub mod io_formats;
pub mod kmeans;
pub mod pipeline;
pub mod scoring;
pub mod spectral;
pub mod synthetic;
pub mod tuning;

pub use affinity::{AffinityMatrix, PruningConfig};
pub use error::{Error, Result};
pub use io_formats::{SegmentEmbeddings, SpeechRegion, Turn};
pub use kmeans::{ClusterResult, KMeansConfig};
pub use pipeline::PipelineConfig;
pub use scoring::{DerBreakdown, ScoringConfig};
pub use spectral::{Laplacian, SpectralDecomposition, SpectralEmbedding};
pub use tuning::{Bundle, Domain, SweepResult};
