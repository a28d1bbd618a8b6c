//! Pruning-parameter sweeps and same/cross-domain evaluation.
//!
//! Only the pruning step depends on `alpha`, so the raw cosine affinity of
//! every recording is computed once and shared across the grid. Work over
//! (alpha, recording) pairs runs on the current rayon pool; results are
//! reduced in grid and recording order, so the output does not depend on
//! the number of threads.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::affinity::{cosine_affinity, AffinityMatrix, Raw};
use crate::error::{Error, Result};
use crate::io_formats::{
    parse_rttm, parse_sad, read_embeddings, read_text, SegmentEmbeddings, SpeechRegion, Turn,
};
use crate::pipeline::{diarize_affinity, PipelineConfig};
use crate::scoring::{aggregate_der, compute_der, speaker_count, DerBreakdown, ScoringConfig};

/// Everything needed to diarize and score one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub recording_id: String,
    pub sad: Vec<SpeechRegion>,
    pub embeddings: SegmentEmbeddings,
    pub reference: Vec<Turn>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub name: String,
    pub dev: Vec<Bundle>,
    pub eval: Vec<Bundle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: Vec<f64>,
    /// Aggregate DER (ratio) per grid point.
    pub ders: Vec<f64>,
    pub best_alpha: f64,
    pub best_der: f64,
}

/// `0, step, 2 step, ..., 1`. The step must divide 1; points are computed
/// as `i / n` so they carry no accumulated rounding.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "grid step {step} outside (0, 1]"
        )));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 || n > 1e6 {
        return Err(Error::InvalidArgument(format!(
            "grid step {step} does not divide 1"
        )));
    }
    let n = n as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

struct Prepared<'a> {
    bundle: &'a Bundle,
    raw: AffinityMatrix<Raw>,
}

fn prepare(bundles: &[Bundle]) -> Result<Vec<Prepared<'_>>> {
    bundles
        .par_iter()
        .map(|b| {
            Ok(Prepared {
                bundle: b,
                raw: cosine_affinity(&b.embeddings)?,
            })
        })
        .collect()
}

/// Per-recording outcome of one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordingScore {
    pub der: DerBreakdown,
    pub true_speakers: usize,
    pub estimated_speakers: usize,
}

fn run_one(
    p: &Prepared<'_>,
    cfg: &PipelineConfig,
    scoring: &ScoringConfig,
) -> Result<RecordingScore> {
    let wrap = |e: Error| Error::Sweep {
        recording: p.bundle.recording_id.clone(),
        alpha: cfg.alpha,
        source: Box::new(e),
    };
    let out = diarize_affinity(
        &p.bundle.recording_id,
        &p.bundle.embeddings.segments,
        &p.raw,
        cfg,
    )
    .map_err(wrap)?;
    let der = compute_der(&p.bundle.reference, &out.turns, scoring).map_err(wrap)?;
    Ok(RecordingScore {
        der,
        true_speakers: speaker_count(&p.bundle.reference),
        estimated_speakers: speaker_count(&out.turns),
    })
}

/// Diarizes and scores every bundle with one configuration.
pub fn evaluate(
    bundles: &[Bundle],
    cfg: &PipelineConfig,
    scoring: &ScoringConfig,
) -> Result<Vec<RecordingScore>> {
    cfg.validate()?;
    let prepared = prepare(bundles)?;
    prepared
        .par_iter()
        .map(|p| run_one(p, cfg, scoring))
        .collect()
}

/// Time-weighted DER of `bundles` under one configuration.
pub fn evaluate_der(
    bundles: &[Bundle],
    cfg: &PipelineConfig,
    scoring: &ScoringConfig,
) -> Result<DerBreakdown> {
    let scores = evaluate(bundles, cfg, scoring)?;
    aggregate_der(&scores.iter().map(|s| s.der).collect::<Vec<_>>())
}

/// Runs the pipeline over `dev` for every `alpha` in `grid` and picks the
/// value with the lowest aggregate DER (smallest alpha on ties).
pub fn sweep_alpha(
    dev: &[Bundle],
    grid: &[f64],
    base: &PipelineConfig,
    scoring: &ScoringConfig,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty alpha grid".into()));
    }
    if grid.iter().any(|a| !(0.0..=1.0).contains(a)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "alpha grid must be strictly increasing within [0, 1]".into(),
        ));
    }
    if dev.is_empty() {
        return Err(Error::InvalidArgument(
            "no dev recordings to tune on".into(),
        ));
    }
    base.with_alpha(grid[0]).validate()?;
    let prepared = prepare(dev)?;

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|a| (0..prepared.len()).map(move |r| (a, r)))
        .collect();
    let results: Vec<DerBreakdown> = jobs
        .par_iter()
        .map(|&(a, r)| run_one(&prepared[r], &base.with_alpha(grid[a]), scoring).map(|s| s.der))
        .collect::<Result<_>>()?;

    let ders = results
        .chunks(prepared.len())
        .map(|per_rec| aggregate_der(per_rec).map(|b| b.der))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &d) in ders.iter().enumerate() {
        if d < ders[best] {
            best = i;
        }
    }
    Ok(SweepResult {
        grid: grid.to_vec(),
        best_alpha: grid[best],
        best_der: ders[best],
        ders,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossDomainReport {
    pub domains: Vec<String>,
    /// One sweep per tuning domain, in `domains` order.
    pub sweeps: Vec<SweepResult>,
    /// `matrix[tuning][evaluation]`.
    pub matrix: Vec<Vec<DerBreakdown>>,
}

impl CrossDomainReport {
    pub fn alphas(&self) -> Vec<f64> {
        self.sweeps.iter().map(|s| s.best_alpha).collect()
    }
}

/// Tunes `alpha` on every domain's dev set and evaluates each tuned value on
/// every domain's eval set.
pub fn cross_domain(
    domains: &[Domain],
    grid: &[f64],
    base: &PipelineConfig,
    scoring: &ScoringConfig,
) -> Result<CrossDomainReport> {
    if domains.is_empty() {
        return Err(Error::InvalidArgument("no domains".into()));
    }
    for d in domains {
        if d.dev.is_empty() || d.eval.is_empty() {
            return Err(Error::InvalidInput(format!(
                "domain {} needs both dev and eval recordings",
                d.name
            )));
        }
    }
    let sweeps = domains
        .iter()
        .map(|d| sweep_alpha(&d.dev, grid, base, scoring))
        .collect::<Result<Vec<_>>>()?;
    let matrix = sweeps
        .iter()
        .map(|s| {
            let cfg = base.with_alpha(s.best_alpha);
            domains
                .iter()
                .map(|d| evaluate_der(&d.eval, &cfg, scoring))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossDomainReport {
        domains: domains.iter().map(|d| d.name.clone()).collect(),
        sweeps,
        matrix,
    })
}

/// Plot-ready sweep curve: `alpha`, `der_percent` and a `marker` column
/// that is empty on grid rows; a final row repeats the minimum with marker
/// `min`.
pub fn curve_report(sweep: &SweepResult) -> String {
    let mut out = String::from("alpha\tder_percent\tmarker\n");
    for (a, d) in sweep.grid.iter().zip(&sweep.ders) {
        let _ = writeln!(out, "{a:.4}\t{:.4}\t", 100.0 * d);
    }
    let _ = writeln!(
        out,
        "{:.4}\t{:.4}\tmin",
        sweep.best_alpha,
        100.0 * sweep.best_der
    );
    out
}

/// DER matrix (percent): one row per tuning domain with its chosen alpha,
/// one column per evaluation domain.
pub fn matrix_report(report: &CrossDomainReport) -> String {
    let mut out = String::from("tuning_domain\talpha");
    for name in &report.domains {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for ((name, sweep), row) in report
        .domains
        .iter()
        .zip(&report.sweeps)
        .zip(&report.matrix)
    {
        let _ = write!(out, "{name}\t{:.4}", sweep.best_alpha);
        for cell in row {
            let _ = write!(out, "\t{:.4}", cell.der_percent());
        }
        out.push('\n');
    }
    out
}

pub fn alpha_summary(report: &CrossDomainReport) -> String {
    let mut out = String::from("domain\tbest_alpha\tdev_der_percent\n");
    for (name, sweep) in report.domains.iter().zip(&report.sweeps) {
        let _ = writeln!(
            out,
            "{name}\t{:.4}\t{:.4}",
            sweep.best_alpha,
            100.0 * sweep.best_der
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Dev,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub domain: String,
    pub split: Split,
    pub recording_id: String,
    pub sad: PathBuf,
    pub embeddings: PathBuf,
    pub reference: PathBuf,
}

/// Parses `<domain> <dev|eval> <rec_id> <sad> <emb> <ref_rttm>` lines.
/// Blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    const WHAT: &str = "manifest";
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = trimmed.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::parse(
                WHAT,
                line_no,
                format!("expected 6 fields, found {}", f.len()),
            ));
        }
        let split = match f[1] {
            "dev" => Split::Dev,
            "eval" => Split::Eval,
            other => {
                return Err(Error::parse_at(
                    WHAT,
                    line_no,
                    2,
                    format!("split must be dev or eval, got {other:?}"),
                ))
            }
        };
        entries.push(ManifestEntry {
            domain: f[0].to_string(),
            split,
            recording_id: f[2].to_string(),
            sad: PathBuf::from(f[3]),
            embeddings: PathBuf::from(f[4]),
            reference: PathBuf::from(f[5]),
        });
    }
    Ok(entries)
}

/// Reads the files of one manifest entry. Paths are taken as given, i.e.
/// relative to the working directory.
pub fn load_bundle(entry: &ManifestEntry) -> Result<Bundle> {
    let embeddings = read_embeddings(&read_text(&entry.embeddings)?)?;
    if embeddings.recording_id != entry.recording_id {
        return Err(Error::InvalidInput(format!(
            "{}: embeddings belong to {}, manifest says {}",
            entry.embeddings.display(),
            embeddings.recording_id,
            entry.recording_id
        )));
    }
    let sad = parse_sad(&read_text(&entry.sad)?)?
        .into_iter()
        .filter(|r| r.recording_id == entry.recording_id)
        .collect();
    let reference: Vec<Turn> = parse_rttm(&read_text(&entry.reference)?)?
        .into_iter()
        .filter(|t| t.recording_id == entry.recording_id)
        .collect();
    if reference.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no reference turns for {}",
            entry.reference.display(),
            entry.recording_id
        )));
    }
    Ok(Bundle {
        recording_id: entry.recording_id.clone(),
        sad,
        embeddings,
        reference,
    })
}

/// Groups manifest entries into domains, in order of first appearance.
pub fn load_domains(entries: &[ManifestEntry]) -> Result<Vec<Domain>> {
    let mut domains: Vec<Domain> = Vec::new();
    for e in entries {
        let bundle = load_bundle(e)?;
        let idx = match domains.iter().position(|d| d.name == e.domain) {
            Some(i) => i,
            None => {
                domains.push(Domain {
                    name: e.domain.clone(),
                    dev: Vec::new(),
                    eval: Vec::new(),
                });
                domains.len() - 1
            }
        };
        match e.split {
            Split::Dev => domains[idx].dev.push(bundle),
            Split::Eval => domains[idx].eval.push(bundle),
        }
    }
    Ok(domains)
}

pub fn load_manifest(path: &Path) -> Result<Vec<Domain>> {
    load_domains(&parse_manifest(&read_text(path)?)?)
}
