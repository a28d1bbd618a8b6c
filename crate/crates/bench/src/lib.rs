//! Fixtures shared by the benchmarks.

use specdiar::synthetic::{gen_recording, SynthSpec};
use specdiar::SegmentEmbeddings;

/// Embeddings of a synthetic recording of roughly `segments` windows.
pub fn recording(speakers: usize, segments: usize, seed: u64) -> SegmentEmbeddings {
    let spec = SynthSpec {
        n_speakers: speakers,
        duration: 1.5 * (segments as f64 + 1.0),
        seed,
        ..SynthSpec::default()
    };
    gen_recording(&spec, "bench")
        .expect("feasible bench spec")
        .embeddings
}
