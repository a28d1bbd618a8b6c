use std::fmt::Write as _;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use specdiar::io_formats::{
    emit_rttm, parse_rttm, parse_sad, read_embeddings, read_text, write_text,
};
use specdiar::pipeline::{diarize_detailed, segment_regions, DEFAULT_SHIFT, DEFAULT_WINDOW};
use specdiar::scoring::{
    der_report, score_recordings, speaker_count, speaker_count_error, DEFAULT_COLLAR,
};
use specdiar::spectral::DEFAULT_K_MAX;
use specdiar::synthetic::{write_domain, CorpusSpec};
use specdiar::tuning::{
    alpha_grid, alpha_summary, cross_domain, curve_report, load_manifest, matrix_report,
    sweep_alpha,
};
use specdiar::{Error, KMeansConfig, PipelineConfig, ScoringConfig};

/// Spectral-clustering speaker diarization toolkit.
///
/// Machine-readable output goes to stdout as TSV, logs go to stderr.
/// Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "specdiar", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cut speech regions into fixed-length windows and print them as TSV.
    Segment(SegmentArgs),
    /// Diarize one recording from its segment embeddings.
    Diarize(DiarizeArgs),
    /// Score hypothesis RTTM against reference RTTM.
    Score(ScoreArgs),
    /// Sweep the pruning threshold on one domain's dev set.
    Tune(TuneArgs),
    /// Tune on every domain and evaluate on every domain.
    Xdomain(XdomainArgs),
    /// Generate a synthetic corpus from a TOML spec.
    Synth(SynthArgs),
    /// Compare estimated and true speaker counts.
    CountError(CountErrorArgs),
}

#[derive(Debug, Args)]
struct SegmentArgs {
    /// Speech regions file (`rec_id onset offset` per line).
    #[arg(long)]
    sad: PathBuf,
    /// Window length in seconds.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: f64,
    /// Window shift in seconds.
    #[arg(long, default_value_t = DEFAULT_SHIFT)]
    shift: f64,
}

#[derive(Debug, Args)]
struct DiarizeArgs {
    /// Segment embeddings file.
    #[arg(long)]
    emb: PathBuf,
    /// Speech regions file; every segment must lie inside a region.
    #[arg(long)]
    sad: PathBuf,
    /// Pruning threshold in [0, 1]; 1 keeps only the largest entry per row.
    #[arg(long)]
    alpha: f64,
    /// Use this speaker count instead of the eigengap estimate.
    #[arg(long)]
    oracle_k: Option<usize>,
    /// Upper bound on the estimated speaker count.
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    k_max: usize,
    #[command(flatten)]
    kmeans: KMeansArgs,
    /// Output RTTM path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct KMeansArgs {
    /// Seed for all randomness.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Independent k-means restarts.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Lloyd iteration cap per restart.
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    /// Centroid movement below which Lloyd iterations stop.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

impl KMeansArgs {
    fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            seed: self.seed,
            kmeans: KMeansConfig {
                restarts: self.restarts,
                max_iter: self.max_iter,
                tol: self.tol,
            },
            ..PipelineConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Reference RTTM.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Hypothesis RTTM.
    #[arg(long)]
    hyp: PathBuf,
    /// No-score zone half-width around reference boundaries, seconds.
    #[arg(long, default_value_t = DEFAULT_COLLAR)]
    collar: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Manifest: `domain split rec_id sad emb ref` per line.
    #[arg(long)]
    manifest: PathBuf,
    /// Spacing of the alpha grid over [0, 1]; must divide 1.
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
    /// No-score collar used while tuning, seconds.
    #[arg(long, default_value_t = DEFAULT_COLLAR)]
    collar: f64,
    /// Worker threads [default: available parallelism].
    #[arg(long, env = "DIARIZE_JOBS")]
    jobs: Option<NonZeroUsize>,
    #[command(flatten)]
    kmeans: KMeansArgs,
}

#[derive(Debug, Args)]
struct TuneArgs {
    /// Domain whose dev recordings are swept.
    #[arg(long)]
    domain: String,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Debug, Args)]
struct XdomainArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Directory for matrix.tsv, alpha.tsv and sweep_<domain>.tsv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Corpus description in TOML.
    #[arg(long)]
    spec_file: PathBuf,
    /// Output directory; receives one folder per domain and manifest.tsv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct CountErrorArgs {
    /// Reference RTTM covering all recordings.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Directory of hypothesis RTTM files, one `<rec_id>.rttm` per recording.
    #[arg(long)]
    hyp_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain on one line, skipping causes already quoted by the
/// message above them.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if text.contains(&msg) {
            continue;
        }
        if !text.is_empty() {
            text.push_str(": ");
        }
        text.push_str(&msg);
    }
    text
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_numerical() => 3,
        Some(Error::InvalidArgument(_)) => 1,
        Some(_) => 2,
        None if e.downcast_ref::<Usage>().is_some() => 1,
        None => 2,
    }
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Segment(a) => segment(a),
        Command::Diarize(a) => diarize(a),
        Command::Score(a) => score(a),
        Command::Tune(a) => tune(a),
        Command::Xdomain(a) => xdomain(a),
        Command::Synth(a) => synth(a),
        Command::CountError(a) => count_error(a),
    }
}

fn segment(a: SegmentArgs) -> anyhow::Result<()> {
    if !(a.shift > 0.0 && a.shift <= a.window && a.window.is_finite()) {
        return Err(Usage(format!(
            "need 0 < shift <= window, got shift={} window={}",
            a.shift, a.window
        ))
        .into());
    }
    let regions = parse_sad(&read_text(&a.sad)?)?;
    let mut out = String::from("recording\tonset\toffset\n");
    let mut start = 0;
    while start < regions.len() {
        let rec = &regions[start].recording_id;
        let end = start
            + regions[start..]
                .iter()
                .take_while(|r| &r.recording_id == rec)
                .count();
        for (on, off) in segment_regions(&regions[start..end], a.window, a.shift) {
            let _ = writeln!(out, "{rec}\t{on}\t{off}");
        }
        start = end;
    }
    print!("{out}");
    Ok(())
}

fn diarize(a: DiarizeArgs) -> anyhow::Result<()> {
    let emb = read_embeddings(&read_text(&a.emb)?).with_context(|| a.emb.display().to_string())?;
    let regions: Vec<_> = parse_sad(&read_text(&a.sad)?)
        .with_context(|| a.sad.display().to_string())?
        .into_iter()
        .filter(|r| r.recording_id == emb.recording_id)
        .collect();
    const EPS: f64 = 1e-6;
    if let Some(&(on, off)) = emb.segments.iter().find(|&&(on, off)| {
        !regions
            .iter()
            .any(|r| r.onset - EPS <= on && off <= r.offset + EPS)
    }) {
        bail!(Error::InvalidInput(format!(
            "segment [{on}, {off}] of {} lies outside its speech regions",
            emb.recording_id
        )));
    }
    let cfg = PipelineConfig {
        alpha: a.alpha,
        k_max: a.k_max,
        oracle_k: a.oracle_k,
        ..a.kmeans.pipeline()
    };
    let result = diarize_detailed(&emb, &cfg)?;
    eprintln!(
        "{}: {} segments, {} speakers",
        emb.recording_id,
        emb.segments.len(),
        result.k
    );
    write_text(&a.out, &emit_rttm(&result.turns))?;
    Ok(())
}

fn score(a: ScoreArgs) -> anyhow::Result<()> {
    let cfg = ScoringConfig::new(a.collar)?;
    let reference =
        parse_rttm(&read_text(&a.reference)?).with_context(|| a.reference.display().to_string())?;
    let hypothesis =
        parse_rttm(&read_text(&a.hyp)?).with_context(|| a.hyp.display().to_string())?;
    let rows = score_recordings(&reference, &hypothesis, &cfg)?;
    print!("{}", der_report(&rows)?);
    Ok(())
}

fn thread_pool(jobs: Option<NonZeroUsize>) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.map_or(0, NonZeroUsize::get))
        .build()
        .context("building worker pool")
}

fn tune(a: TuneArgs) -> anyhow::Result<()> {
    let s = &a.sweep;
    let grid = alpha_grid(s.grid_step)?;
    let scoring = ScoringConfig::new(s.collar)?;
    let domains = load_manifest(&s.manifest)?;
    let Some(domain) = domains.iter().find(|d| d.name == a.domain) else {
        bail!(Error::InvalidInput(format!(
            "domain {:?} not found in {}",
            a.domain,
            s.manifest.display()
        )));
    };
    if domain.dev.is_empty() {
        bail!(Error::InvalidInput(format!(
            "domain {} has no dev recordings",
            a.domain
        )));
    }
    let base = s.kmeans.pipeline();
    let sweep =
        thread_pool(s.jobs)?.install(|| sweep_alpha(&domain.dev, &grid, &base, &scoring))?;
    eprintln!(
        "{}: best alpha {:.2} with DER {:.3}% over {} dev recordings",
        a.domain,
        sweep.best_alpha,
        100.0 * sweep.best_der,
        domain.dev.len()
    );
    print!("{}", curve_report(&sweep));
    Ok(())
}

fn xdomain(a: XdomainArgs) -> anyhow::Result<()> {
    let s = &a.sweep;
    let grid = alpha_grid(s.grid_step)?;
    let scoring = ScoringConfig::new(s.collar)?;
    let domains = load_manifest(&s.manifest)?;
    let base = s.kmeans.pipeline();
    let report = thread_pool(s.jobs)?.install(|| cross_domain(&domains, &grid, &base, &scoring))?;
    create_dir(&a.out_dir)?;
    write_text(a.out_dir.join("matrix.tsv"), &matrix_report(&report))?;
    write_text(a.out_dir.join("alpha.tsv"), &alpha_summary(&report))?;
    for (name, sweep) in report.domains.iter().zip(&report.sweeps) {
        write_text(
            a.out_dir.join(format!("sweep_{name}.tsv")),
            &curve_report(sweep),
        )?;
    }
    for (name, alpha) in report.domains.iter().zip(report.alphas()) {
        eprintln!("{name}: best alpha {alpha:.2}");
    }
    Ok(())
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let spec = CorpusSpec::from_toml(&read_text(&a.spec_file)?)?;
    create_dir(&a.out_dir)?;
    let mut manifest = String::new();
    for domain in spec.generate()? {
        manifest.push_str(&write_domain(&domain, &a.out_dir)?);
        eprintln!(
            "{}: {} dev, {} eval recordings",
            domain.name,
            domain.dev.len(),
            domain.eval.len()
        );
    }
    let path = a.out_dir.join("manifest.tsv");
    write_text(&path, &manifest)?;
    println!("{}", path.display());
    Ok(())
}

fn count_error(a: CountErrorArgs) -> anyhow::Result<()> {
    let reference =
        parse_rttm(&read_text(&a.reference)?).with_context(|| a.reference.display().to_string())?;
    let by_rec = specdiar::io_formats::group_by_recording(&reference);
    if by_rec.is_empty() {
        bail!(Error::InvalidInput(format!(
            "{}: no reference turns",
            a.reference.display()
        )));
    }
    let mut out = String::from("recording\ttrue_speakers\testimated_speakers\tabs_error\n");
    let mut pairs = Vec::with_capacity(by_rec.len());
    for (rec, turns) in &by_rec {
        let path = a.hyp_dir.join(format!("{rec}.rttm"));
        let hyp: Vec<_> = parse_rttm(&read_text(&path)?)
            .with_context(|| path.display().to_string())?
            .into_iter()
            .filter(|t| &t.recording_id == rec)
            .collect();
        let (t, e) = (speaker_count(turns), speaker_count(&hyp));
        let _ = writeln!(out, "{rec}\t{t}\t{e}\t{}", t.abs_diff(e));
        pairs.push((t, e));
    }
    let _ = writeln!(out, "MEAN\t\t\t{:.4}", speaker_count_error(&pairs)?);
    print!("{out}");
    Ok(())
}
