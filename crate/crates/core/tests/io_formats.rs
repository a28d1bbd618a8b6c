use proptest::prelude::*;

use specdiar::io_formats::{
    emit_rttm, emit_sad, parse_rttm, parse_sad, read_embeddings, write_embeddings,
    SegmentEmbeddings, SpeechRegion, Turn,
};

fn turn() -> impl Strategy<Value = Turn> {
    (
        "[a-z][a-z0-9_]{0,6}",
        0u32..1_000_000,
        1u32..100_000,
        "[A-Za-z][A-Za-z0-9]{0,5}",
    )
        .prop_map(|(rec, on, dur, spk)| {
            Turn::new(rec, on as f64 / 1000.0, dur as f64 / 1000.0, spk)
        })
}

proptest! {
    #[test]
    fn rttm_round_trip(turns in prop::collection::vec(turn(), 0..30)) {
        let text = emit_rttm(&turns);
        let back = parse_rttm(&text).unwrap();
        // emission sorts; emitting again reproduces the same bytes
        prop_assert_eq!(emit_rttm(&back), text);
        prop_assert_eq!(back.len(), turns.len());
        let mut expected = turns.clone();
        expected.sort_by(|a, b| (&a.recording_id, a.onset, &a.speaker).partial_cmp(&(&b.recording_id, b.onset, &b.speaker)).unwrap());
        for (a, b) in back.iter().zip(&expected) {
            prop_assert_eq!(&a.recording_id, &b.recording_id);
            prop_assert_eq!(&a.speaker, &b.speaker);
            prop_assert!((a.onset - b.onset).abs() < 1e-9);
            prop_assert!((a.duration - b.duration).abs() < 1e-9);
        }
    }

    #[test]
    fn sad_output_sorted_and_disjoint(
        raw in prop::collection::vec((0usize..3, 0u32..100_000, 1u32..20_000), 1..40)
    ) {
        let text: String = raw
            .iter()
            .map(|&(r, on, len)| format!("rec{r} {:.3} {:.3}\n", on as f64 / 1000.0, (on + len) as f64 / 1000.0))
            .collect();
        let regions = parse_sad(&text).unwrap();
        for w in regions.windows(2) {
            if w[0].recording_id == w[1].recording_id {
                prop_assert!(w[0].offset < w[1].onset, "{:?} touches {:?}", w[0], w[1]);
            } else {
                prop_assert!(w[0].recording_id < w[1].recording_id);
            }
        }
        // merging never loses or invents speech
        for &(r, on, len) in &raw {
            let mid = (on as f64 + len as f64 / 2.0) / 1000.0;
            let rec = format!("rec{r}");
            prop_assert!(regions.iter().any(|g| g.recording_id == rec && g.onset <= mid && mid <= g.offset));
        }
        prop_assert_eq!(parse_sad(&emit_sad(&regions)).unwrap(), regions);
    }

    #[test]
    fn embeddings_round_trip_exactly(
        dim in 1usize..10,
        rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 10), 1..20),
    ) {
        let e = SegmentEmbeddings {
            recording_id: "rec".into(),
            dim,
            segments: (0..rows.len()).map(|i| (i as f64 * 0.75, i as f64 * 0.75 + 3.0)).collect(),
            vectors: rows.iter().map(|r| r[..dim].to_vec()).collect(),
        };
        prop_assert_eq!(read_embeddings(&write_embeddings(&e)).unwrap(), e);
    }

    #[test]
    fn parsers_never_panic(text in "\\PC{0,200}") {
        let _ = parse_rttm(&text);
        let _ = parse_sad(&text);
        let _ = read_embeddings(&text);
    }
}

#[test]
fn rttm_skips_other_record_types() {
    let text = "SPKR-INFO r 1 <NA> <NA> <NA> unknown A <NA> <NA>\nSPEAKER r 1 0.500 2.000 <NA> <NA> A <NA> <NA>\n";
    let turns = parse_rttm(text).unwrap();
    assert_eq!(turns, vec![Turn::new("r", 0.5, 2.0, "A")]);
}

#[test]
fn sad_merges_overlaps_per_recording() {
    let regions = parse_sad("b 0 1\na 2 3\na 0 2.5\n").unwrap();
    assert_eq!(
        regions,
        vec![
            SpeechRegion::new("a", 0.0, 3.0),
            SpeechRegion::new("b", 0.0, 1.0)
        ]
    );
}
