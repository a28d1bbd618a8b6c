//! Per-recording diarization: windowing of speech regions, the spectral
//! clustering chain, and conversion of segment labels into speaker turns.

use crate::affinity::{
    cosine_affinity, prune_rows, symmetrize, AffinityMatrix, PruningConfig, Raw,
};
use crate::error::{Error, Result};
use crate::io_formats::{SegmentEmbeddings, SpeechRegion, Turn};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::spectral::{eig_sym, estimate_k, laplacian, spectral_embed, DEFAULT_K_MAX};

pub const DEFAULT_WINDOW: f64 = 3.0;
pub const DEFAULT_SHIFT: f64 = 1.5;
/// Regions shorter than this produce no segments.
pub const MIN_SEGMENT: f64 = 0.3;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub window: f64,
    pub shift: f64,
    pub alpha: f64,
    pub k_max: usize,
    /// Use this speaker count instead of the eigengap estimate.
    pub oracle_k: Option<usize>,
    pub seed: u64,
    pub kmeans: KMeansConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window: DEFAULT_WINDOW,
            shift: DEFAULT_SHIFT,
            alpha: 1.0,
            k_max: DEFAULT_K_MAX,
            oracle_k: None,
            seed: 42,
            kmeans: KMeansConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn with_alpha(&self, alpha: f64) -> Self {
        PipelineConfig {
            alpha,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shift > 0.0 && self.shift <= self.window && self.window.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < shift <= window, got shift={} window={}",
                self.shift, self.window
            )));
        }
        PruningConfig::new(self.alpha)?;
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be positive".into()));
        }
        if self.oracle_k == Some(0) {
            return Err(Error::InvalidArgument("oracle k must be positive".into()));
        }
        Ok(())
    }
}

/// Cuts each speech region into windows of `window` seconds every `shift`
/// seconds. A leftover tail gets one final window aligned to the region end;
/// regions shorter than [`MIN_SEGMENT`] are skipped. Segments never cross a
/// region boundary.
pub fn segment_regions(regions: &[SpeechRegion], window: f64, shift: f64) -> Vec<(f64, f64)> {
    let mut segments = Vec::new();
    for r in regions {
        let (a, b) = (r.onset, r.offset);
        if b - a < MIN_SEGMENT {
            continue;
        }
        let mut covered = a;
        let mut i = 0usize;
        loop {
            let start = a + i as f64 * shift;
            let mut end = start + window;
            if end > b + EPS {
                break;
            }
            if end > b {
                end = b;
            }
            segments.push((start, end));
            covered = end;
            i += 1;
        }
        if covered < b - EPS {
            segments.push(((b - window).max(a), b));
        }
    }
    segments
}

/// Result of diarizing one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Diarization {
    pub turns: Vec<Turn>,
    pub labels: Vec<usize>,
    /// Speaker count used for clustering (estimated or oracle).
    pub k: usize,
}

/// Runs the full chain on one recording's embeddings.
pub fn diarize(e: &SegmentEmbeddings, cfg: &PipelineConfig) -> Result<Vec<Turn>> {
    Ok(diarize_detailed(e, cfg)?.turns)
}

pub fn diarize_detailed(e: &SegmentEmbeddings, cfg: &PipelineConfig) -> Result<Diarization> {
    cfg.validate()?;
    let raw = cosine_affinity(e)?;
    diarize_affinity(&e.recording_id, &e.segments, &raw, cfg)
}

/// Everything from pruning onward, for callers that cache the raw affinity
/// across `alpha` values.
pub fn diarize_affinity(
    recording_id: &str,
    segments: &[(f64, f64)],
    raw: &AffinityMatrix<Raw>,
    cfg: &PipelineConfig,
) -> Result<Diarization> {
    let n = raw.n();
    if n == 0 || n != segments.len() {
        return Err(Error::InvalidInput(format!(
            "{recording_id}: {} segments for a {n}x{n} affinity",
            segments.len()
        )));
    }
    let (labels, k) = if n == 1 {
        (vec![0], 1)
    } else {
        let pruned = prune_rows(raw, PruningConfig::new(cfg.alpha)?);
        let sym = symmetrize(&pruned);
        let dec = eig_sym(&laplacian(&sym))?;
        let k = match cfg.oracle_k {
            Some(k) => k.min(n),
            None => estimate_k(&dec, cfg.k_max),
        };
        let embedding = spectral_embed(&dec, k)?;
        (
            kmeans(&embedding.points, k, cfg.seed, &cfg.kmeans)?.labels,
            k,
        )
    };
    let turns = labels_to_turns(recording_id, segments, &labels)?;
    Ok(Diarization { turns, labels, k })
}

/// Merges labeled, onset-sorted segments into single-speaker turns. Runs of
/// one label that overlap or touch become one turn; where segments with
/// different labels overlap, the boundary goes to the middle of the overlap.
pub fn labels_to_turns(
    recording_id: &str,
    segments: &[(f64, f64)],
    labels: &[usize],
) -> Result<Vec<Turn>> {
    if segments.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} segments but {} labels",
            segments.len(),
            labels.len()
        )));
    }
    let speaker = |l: usize| format!("spk{l}");
    let mut turns = Vec::new();
    let mut current: Option<(f64, f64, usize)> = None;

    for (&(on, off), &label) in segments.iter().zip(labels) {
        current = Some(match current {
            None => (on, off, label),
            Some((start, end, cur)) if on > end => {
                turns.push(Turn::spanning(recording_id, start, end, speaker(cur)));
                (on, off, label)
            }
            Some((start, end, cur)) if label == cur => (start, end.max(off), cur),
            Some((start, end, cur)) => {
                // the current turn may already start inside this overlap
                let split = 0.5 * (on.max(start) + end);
                if off <= split {
                    // wholly covered by the current turn
                    (start, end, cur)
                } else {
                    turns.push(Turn::spanning(recording_id, start, split, speaker(cur)));
                    (split, off, label)
                }
            }
        });
    }
    if let Some((start, end, cur)) = current {
        turns.push(Turn::spanning(recording_id, start, end, speaker(cur)));
    }
    Ok(turns)
}
