//! Text formats: RTTM annotations, SAD region lists and segment-embedding files.
//!
//! ```text
//! SPEAKER <rec> 1 <onset> <dur> <NA> <NA> <spk> <NA> <NA>
//! <rec> <onset> <offset>                      (SAD)
//! <rec> <N> <d>                               (embedding header)
//! <onset> <offset> <v1> ... <vd>              (N rows)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One speaker-attributed interval of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub recording_id: String,
    pub onset: f64,
    pub duration: f64,
    pub speaker: String,
}

impl Turn {
    pub fn new(
        recording_id: impl Into<String>,
        onset: f64,
        duration: f64,
        speaker: impl Into<String>,
    ) -> Self {
        Turn {
            recording_id: recording_id.into(),
            onset,
            duration,
            speaker: speaker.into(),
        }
    }

    /// Builds a turn from its extent rather than its duration.
    pub fn spanning(
        recording_id: impl Into<String>,
        onset: f64,
        offset: f64,
        speaker: impl Into<String>,
    ) -> Self {
        Turn::new(recording_id, onset, offset - onset, speaker)
    }

    pub fn offset(&self) -> f64 {
        self.onset + self.duration
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeechRegion {
    pub recording_id: String,
    pub onset: f64,
    pub offset: f64,
}

impl SpeechRegion {
    pub fn new(recording_id: impl Into<String>, onset: f64, offset: f64) -> Self {
        SpeechRegion {
            recording_id: recording_id.into(),
            onset,
            offset,
        }
    }

    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

/// Per-segment embedding vectors of one recording, with the time extent of
/// each segment. Vectors are stored as read; nothing is normalized here.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEmbeddings {
    pub recording_id: String,
    pub dim: usize,
    pub segments: Vec<(f64, f64)>,
    pub vectors: Vec<Vec<f64>>,
}

impl SegmentEmbeddings {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Reads a whole file, attaching the path to any I/O error.
pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_time(what: &'static str, line: usize, column: usize, field: &str) -> Result<f64> {
    let value: f64 = field
        .parse()
        .map_err(|_| Error::parse_at(what, line, column, format!("not a number: {field:?}")))?;
    if !value.is_finite() {
        return Err(Error::parse_at(
            what,
            line,
            column,
            format!("non-finite value {field:?}"),
        ));
    }
    Ok(value)
}

/// Parses RTTM text. Only `SPEAKER` lines produce turns; other record types
/// and blank lines are skipped. Turns keep file order.
pub fn parse_rttm(text: &str) -> Result<Vec<Turn>> {
    const WHAT: &str = "rttm";
    let mut turns = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.first() != Some(&"SPEAKER") {
            continue;
        }
        if fields.len() < 9 {
            return Err(Error::parse(
                WHAT,
                lineno,
                format!("expected at least 9 fields, found {}", fields.len()),
            ));
        }
        let onset = parse_time(WHAT, lineno, 4, fields[3])?;
        let duration = parse_time(WHAT, lineno, 5, fields[4])?;
        if onset < 0.0 {
            return Err(Error::parse_at(WHAT, lineno, 4, "negative onset"));
        }
        if duration <= 0.0 {
            return Err(Error::parse_at(
                WHAT,
                lineno,
                5,
                format!("non-positive duration {duration}"),
            ));
        }
        turns.push(Turn::new(fields[1], onset, duration, fields[7]));
    }
    Ok(turns)
}

/// Emits turns as RTTM, sorted by (recording, onset, speaker), times at
/// millisecond precision.
pub fn emit_rttm(turns: &[Turn]) -> String {
    let mut sorted: Vec<&Turn> = turns.iter().collect();
    sorted.sort_by(|a, b| {
        a.recording_id
            .cmp(&b.recording_id)
            .then(a.onset.total_cmp(&b.onset))
            .then_with(|| a.speaker.cmp(&b.speaker))
    });
    let mut out = String::new();
    for t in sorted {
        let _ = writeln!(
            out,
            "SPEAKER {} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
            t.recording_id, t.onset, t.duration, t.speaker
        );
    }
    out
}

/// Groups turns by recording id, keeping per-recording order.
pub fn group_by_recording(turns: &[Turn]) -> BTreeMap<String, Vec<Turn>> {
    let mut groups: BTreeMap<String, Vec<Turn>> = BTreeMap::new();
    for t in turns {
        groups
            .entry(t.recording_id.clone())
            .or_default()
            .push(t.clone());
    }
    groups
}

/// Parses SAD lines. The result is sorted by recording then onset, and
/// overlapping or touching regions of a recording are merged.
pub fn parse_sad(text: &str) -> Result<Vec<SpeechRegion>> {
    const WHAT: &str = "sad";
    let mut by_rec: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::parse(
                WHAT,
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let onset = parse_time(WHAT, lineno, 2, fields[1])?;
        let offset = parse_time(WHAT, lineno, 3, fields[2])?;
        if onset < 0.0 {
            return Err(Error::parse_at(WHAT, lineno, 2, "negative onset"));
        }
        if offset <= onset {
            return Err(Error::parse(
                WHAT,
                lineno,
                format!("offset {offset} not after onset {onset}"),
            ));
        }
        by_rec.entry(fields[0]).or_default().push((onset, offset));
    }

    let mut regions = Vec::new();
    for (rec, mut spans) in by_rec {
        spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
        for (on, off) in spans {
            match merged.last_mut() {
                Some(last) if on <= last.1 => last.1 = last.1.max(off),
                _ => merged.push((on, off)),
            }
        }
        regions.extend(
            merged
                .into_iter()
                .map(|(on, off)| SpeechRegion::new(rec, on, off)),
        );
    }
    Ok(regions)
}

pub fn emit_sad(regions: &[SpeechRegion]) -> String {
    let mut out = String::new();
    for r in regions {
        let _ = writeln!(out, "{} {:.3} {:.3}", r.recording_id, r.onset, r.offset);
    }
    out
}

/// Parses a segment-embedding file.
pub fn read_embeddings(text: &str) -> Result<SegmentEmbeddings> {
    const WHAT: &str = "embeddings";
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(WHAT, 1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::parse(
            WHAT,
            header_line,
            "header must be `<recording_id> <N> <d>`",
        ));
    }
    let count: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse_at(WHAT, header_line, 2, format!("bad count {:?}", fields[1])))?;
    let dim: usize = fields[2].parse().map_err(|_| {
        Error::parse_at(
            WHAT,
            header_line,
            3,
            format!("bad dimension {:?}", fields[2]),
        )
    })?;
    if dim == 0 {
        return Err(Error::parse_at(
            WHAT,
            header_line,
            3,
            "dimension must be positive",
        ));
    }

    // The header is untrusted; don't let it drive allocation.
    let mut segments = Vec::with_capacity(count.min(1 << 16));
    let mut vectors = Vec::with_capacity(count.min(1 << 16));
    let mut last_line = header_line;
    for (lineno, line) in lines {
        last_line = lineno;
        if vectors.len() == count {
            return Err(Error::parse(
                WHAT,
                lineno,
                format!("more than {count} data rows"),
            ));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim + 2 {
            return Err(Error::parse(
                WHAT,
                lineno,
                format!("expected {} columns, found {}", dim + 2, fields.len()),
            ));
        }
        let onset = parse_time(WHAT, lineno, 1, fields[0])?;
        let offset = parse_time(WHAT, lineno, 2, fields[1])?;
        if offset <= onset {
            return Err(Error::parse(WHAT, lineno, "segment offset not after onset"));
        }
        if let Some(&(prev, _)) = segments.last() {
            if onset < prev {
                return Err(Error::parse(WHAT, lineno, "segments not sorted by onset"));
            }
        }
        let vector = fields[2..]
            .iter()
            .enumerate()
            .map(|(j, f)| parse_time(WHAT, lineno, j + 3, f))
            .collect::<Result<Vec<f64>>>()?;
        segments.push((onset, offset));
        vectors.push(vector);
    }
    if vectors.len() != count {
        return Err(Error::parse(
            WHAT,
            last_line,
            format!("header declares {count} rows, found {}", vectors.len()),
        ));
    }
    Ok(SegmentEmbeddings {
        recording_id: fields[0].to_string(),
        dim,
        segments,
        vectors,
    })
}

/// Serializes embeddings using shortest round-trip float formatting, so
/// `read_embeddings(&write_embeddings(e)) == e`.
pub fn write_embeddings(e: &SegmentEmbeddings) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", e.recording_id, e.vectors.len(), e.dim);
    for ((onset, offset), v) in e.segments.iter().zip(&e.vectors) {
        let _ = write!(out, "{onset} {offset}");
        for x in v {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
    }
    out
}
