//! Synthetic multi-speaker recordings with known ground truth.
//!
//! Each speaker gets a random unit "anchor" direction; anchors are drawn by
//! rejection so every pair is at least `inter_min_angle` apart. A segment's
//! embedding is its speaker's anchor plus isotropic Gaussian noise, then
//! re-normalized. Reference turns tile the whole recording on a 10 ms grid.

pub mod oracle;

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io_formats::{
    emit_rttm, emit_sad, write_embeddings, write_text, SegmentEmbeddings, SpeechRegion, Turn,
};
use crate::pipeline::{segment_regions, DEFAULT_SHIFT, DEFAULT_WINDOW};
use crate::tuning::{Bundle, Domain};

/// Attempts allowed when drawing anchors before a spec is declared infeasible.
const ANCHOR_BUDGET: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_speakers: usize,
    pub dim: usize,
    /// Seconds.
    pub duration: f64,
    /// Inclusive range of turn lengths, seconds.
    pub turn_len_range: (f64, f64),
    /// Standard deviation of the per-coordinate noise added before
    /// re-normalization.
    pub intra_noise: f64,
    /// Degrees.
    pub inter_min_angle: f64,
    pub seed: u64,
    pub window: f64,
    pub shift: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_speakers: 2,
            dim: 192,
            duration: 120.0,
            turn_len_range: (5.0, 15.0),
            intra_noise: 0.05,
            inter_min_angle: 75.0,
            seed: 0,
            window: DEFAULT_WINDOW,
            shift: DEFAULT_SHIFT,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.turn_len_range;
        let ok = self.n_speakers >= 1
            && self.dim >= 1
            && self.duration > 0.0
            && lo > 0.0
            && lo <= hi
            && self.intra_noise >= 0.0
            && (0.0..=180.0).contains(&self.inter_min_angle)
            && self.shift > 0.0
            && self.shift <= self.window;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid synthetic spec {self:?}"
            )))
        }
    }
}

/// One generated recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRecording {
    pub embeddings: SegmentEmbeddings,
    pub reference: Vec<Turn>,
    pub sad: Vec<SpeechRegion>,
    pub anchors: Vec<Vec<f64>>,
}

fn gaussian_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn sample_anchors(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let max_cos = spec.inter_min_angle.to_radians().cos();
    let mut anchors: Vec<Vec<f64>> = Vec::with_capacity(spec.n_speakers);
    let mut attempts = 0;
    while anchors.len() < spec.n_speakers {
        if attempts == ANCHOR_BUDGET {
            return Err(Error::Infeasible(format!(
                "could not place {} anchors {}° apart in {} dimensions ({} placed after {} draws)",
                spec.n_speakers,
                spec.inter_min_angle,
                spec.dim,
                anchors.len(),
                ANCHOR_BUDGET
            )));
        }
        attempts += 1;
        let candidate = gaussian_unit(rng, spec.dim);
        let fits = anchors.iter().all(|a| {
            let c: f64 = a.iter().zip(&candidate).map(|(x, y)| x * y).sum();
            c <= max_cos + 1e-12
        });
        if fits {
            anchors.push(candidate);
        }
    }
    Ok(anchors)
}

/// Turn layout in centiseconds: `(start, end, speaker)` tiling `[0, total)`.
fn layout_turns(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<(u64, u64, usize)> {
    let total = (spec.duration * 100.0).round() as u64;
    let lo = ((spec.turn_len_range.0 * 100.0).round() as u64).max(1);
    let hi = ((spec.turn_len_range.1 * 100.0).round() as u64).max(lo);

    // everybody speaks once before anyone repeats
    let mut order: Vec<usize> = (0..spec.n_speakers).collect();
    order.shuffle(rng);

    let mut turns: Vec<(u64, u64, usize)> = Vec::new();
    let mut t = 0;
    while t < total {
        let speaker = if turns.len() < order.len() {
            order[turns.len()]
        } else if spec.n_speakers == 1 {
            0
        } else {
            let prev = turns.last().map_or(usize::MAX, |x| x.2);
            let mut s = rng.random_range(0..spec.n_speakers - 1);
            if s >= prev {
                s += 1;
            }
            s
        };
        let len = rng.random_range(lo..=hi);
        let end = (t + len).min(total);
        if end - t < lo && !turns.is_empty() {
            // a too-short final piece joins the previous turn
            turns.last_mut().unwrap().1 = end;
        } else {
            turns.push((t, end, speaker));
        }
        t = end;
    }
    // merge neighbours that ended up with the same speaker
    let mut merged: Vec<(u64, u64, usize)> = Vec::with_capacity(turns.len());
    for turn in turns {
        match merged.last_mut() {
            Some(last) if last.2 == turn.2 => last.1 = turn.1,
            _ => merged.push(turn),
        }
    }
    merged
}

/// Generates one recording. Deterministic in `spec.seed`.
pub fn gen_recording(spec: &SynthSpec, recording_id: &str) -> Result<SyntheticRecording> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let anchors = sample_anchors(spec, &mut rng)?;
    let layout = layout_turns(spec, &mut rng);

    let reference: Vec<Turn> = layout
        .iter()
        .map(|&(a, b, s)| {
            Turn::new(
                recording_id,
                a as f64 / 100.0,
                (b - a) as f64 / 100.0,
                format!("S{s}"),
            )
        })
        .collect();
    let total = layout.last().map_or(0, |t| t.1);
    let sad = vec![SpeechRegion::new(recording_id, 0.0, total as f64 / 100.0)];
    let segments = segment_regions(&sad, spec.window, spec.shift);

    let owner = |t: f64| {
        let cs = t * 100.0;
        layout
            .iter()
            .find(|&&(a, b, _)| (a as f64) <= cs && cs < b as f64)
            .or(layout.last())
            .map(|x| x.2)
            .unwrap()
    };
    let vectors = segments
        .iter()
        .map(|&(on, off)| {
            let anchor = &anchors[owner(0.5 * (on + off))];
            let v: Vec<f64> = anchor
                .iter()
                .map(|a| a + spec.intra_noise * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();

    Ok(SyntheticRecording {
        embeddings: SegmentEmbeddings {
            recording_id: recording_id.to_string(),
            dim: spec.dim,
            segments,
            vectors,
        },
        reference,
        sad,
        anchors,
    })
}

impl SyntheticRecording {
    pub fn into_bundle(self) -> Bundle {
        Bundle {
            recording_id: self.embeddings.recording_id.clone(),
            sad: self.sad,
            embeddings: self.embeddings,
            reference: self.reference,
        }
    }
}

/// Builds a domain from `specs`: the first half become dev recordings, the
/// rest eval. Recording ids are `<name>-dev<i>` / `<name>-eval<i>`.
pub fn gen_domain(specs: &[SynthSpec], name: &str) -> Result<Domain> {
    if specs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "domain {name} needs at least 2 specs to split into dev and eval"
        )));
    }
    let n_dev = specs.len() / 2;
    let mut dev = Vec::with_capacity(n_dev);
    let mut eval = Vec::with_capacity(specs.len() - n_dev);
    for (i, spec) in specs.iter().enumerate() {
        if i < n_dev {
            dev.push(gen_recording(spec, &format!("{name}-dev{i:02}"))?.into_bundle());
        } else {
            eval.push(gen_recording(spec, &format!("{name}-eval{:02}", i - n_dev))?.into_bundle());
        }
    }
    Ok(Domain {
        name: name.to_string(),
        dev,
        eval,
    })
}

/// Writes every bundle of `domain` under `out_dir/<name>/` as `.sad`, `.emb`
/// and `.rttm` files and returns the matching manifest lines.
pub fn write_domain(domain: &Domain, out_dir: &Path) -> Result<String> {
    let dir = out_dir.join(&domain.name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut manifest = String::new();
    let splits = [("dev", &domain.dev), ("eval", &domain.eval)];
    for (split, bundles) in splits {
        for b in bundles.iter() {
            let sad = dir.join(format!("{}.sad", b.recording_id));
            let emb = dir.join(format!("{}.emb", b.recording_id));
            let rttm = dir.join(format!("{}.rttm", b.recording_id));
            write_text(&sad, &emit_sad(&b.sad))?;
            write_text(&emb, &write_embeddings(&b.embeddings))?;
            write_text(&rttm, &emit_rttm(&b.reference))?;
            let _ = writeln!(
                manifest,
                "{}\t{}\t{}\t{}\t{}\t{}",
                domain.name,
                split,
                b.recording_id,
                sad.display(),
                emb.display(),
                rttm.display()
            );
        }
    }
    Ok(manifest)
}

/// SplitMix64 step, used to derive independent per-recording seeds.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A synthetic corpus description, read from TOML.
///
/// ```toml
/// seed = 7
///
/// [[domain]]
/// name = "duo"
/// dev = 3
/// eval = 3
/// n_speakers = [2, 2]
/// duration = [60.0, 90.0]
/// turn_len = [5.0, 15.0]
/// intra_noise = 0.05
/// inter_min_angle = 75.0
/// dim = 192
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(rename = "domain")]
    pub domains: Vec<DomainSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub name: String,
    pub dev: usize,
    pub eval: usize,
    /// Inclusive range; each recording draws its speaker count uniformly.
    pub n_speakers: (usize, usize),
    /// Inclusive range of recording durations, seconds.
    pub duration: (f64, f64),
    pub turn_len: (f64, f64),
    pub intra_noise: f64,
    pub inter_min_angle: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_seed() -> u64 {
    42
}

fn default_dim() -> usize {
    192
}

impl CorpusSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: CorpusSpec =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("corpus spec: {e}")))?;
        let mut names: Vec<&str> = spec.domains.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != spec.domains.len() {
            return Err(Error::InvalidInput(
                "corpus spec: duplicate domain names".into(),
            ));
        }
        Ok(spec)
    }

    /// Expands domain `index` into per-recording specs (dev first, then eval).
    pub fn recording_specs(&self, index: usize) -> Result<Vec<SynthSpec>> {
        let d = &self.domains[index];
        if d.dev == 0 || d.eval == 0 || d.dev != d.eval {
            return Err(Error::InvalidInput(format!(
                "domain {}: dev and eval counts must be equal and positive",
                d.name
            )));
        }
        let count = d.dev + d.eval;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, index as u64, u64::MAX));
        let (s_lo, s_hi) = d.n_speakers;
        let (d_lo, d_hi) = d.duration;
        if s_lo == 0 || s_lo > s_hi || !(d_lo > 0.0 && d_lo <= d_hi) {
            return Err(Error::InvalidInput(format!(
                "domain {}: bad ranges",
                d.name
            )));
        }
        Ok((0..count)
            .map(|i| SynthSpec {
                n_speakers: rng.random_range(s_lo..=s_hi),
                dim: d.dim,
                duration: (rng.random_range(d_lo..=d_hi) * 100.0).round() / 100.0,
                turn_len_range: d.turn_len,
                intra_noise: d.intra_noise,
                inter_min_angle: d.inter_min_angle,
                seed: derive_seed(self.seed, index as u64, i as u64),
                ..SynthSpec::default()
            })
            .collect())
    }

    pub fn generate(&self) -> Result<Vec<Domain>> {
        (0..self.domains.len())
            .map(|i| gen_domain(&self.recording_specs(i)?, &self.domains[i].name))
            .collect()
    }
}
