use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = r#"
seed = 3

[[domain]]
name = "duo"
dev = 1
eval = 1
n_speakers = [2, 2]
duration = [40.0, 40.0]
turn_len = [5.0, 10.0]
intra_noise = 0.05
inter_min_angle = 80.0
dim = 24
"#;

fn specdiar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specdiar"))
        .args(args)
        .current_dir(dir)
        .env_remove("DIARIZE_JOBS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Generates the small corpus and returns the temp dir holding it.
fn corpus() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("spec.toml"), SPEC).unwrap();
    let out = specdiar(
        tmp.path(),
        &["synth", "--spec-file", "spec.toml", "--out-dir", "c"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(stdout(&out).trim(), "c/manifest.tsv");
    tmp
}

#[test]
fn help_documents_every_subcommand_and_flag() {
    let dir = std::env::temp_dir();
    let top = specdiar(&dir, &["--help"]);
    assert!(top.status.success());
    let cases: &[(&str, &[&str])] = &[
        ("segment", &["--sad", "--window", "--shift"]),
        (
            "diarize",
            &[
                "--emb",
                "--sad",
                "--alpha",
                "--oracle-k",
                "--k-max",
                "--seed",
                "--restarts",
                "--out",
            ],
        ),
        ("score", &["--ref", "--hyp", "--collar"]),
        (
            "tune",
            &["--manifest", "--domain", "--grid-step", "--jobs", "--seed"],
        ),
        (
            "xdomain",
            &["--manifest", "--grid-step", "--out-dir", "--jobs"],
        ),
        ("synth", &["--spec-file", "--out-dir"]),
        ("count-error", &["--ref", "--hyp-dir"]),
    ];
    for (sub, flags) in cases {
        assert!(stdout(&top).contains(sub), "top-level help lacks {sub}");
        let out = specdiar(&dir, &[sub, "--help"]);
        assert!(out.status.success());
        let text = stdout(&out);
        for flag in *flags {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }
    let diarize = stdout(&specdiar(&dir, &["diarize", "--help"]));
    assert!(diarize.contains("[default: 42]"));
    let score = stdout(&specdiar(&dir, &["score", "--help"]));
    assert!(score.contains("[default: 0.25]"));
}

#[test]
fn exit_codes() {
    let tmp = corpus();
    let d = tmp.path();
    assert_eq!(specdiar(d, &["score", "--bogus"]).status.code(), Some(1));
    assert_eq!(specdiar(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        specdiar(
            d,
            &["score", "--ref", "missing.rttm", "--hyp", "missing.rttm"]
        )
        .status
        .code(),
        Some(2)
    );
    std::fs::write(
        d.join("bad.rttm"),
        "SPEAKER r 1 zero 1 <NA> <NA> A <NA> <NA>\n",
    )
    .unwrap();
    let out = specdiar(d, &["score", "--ref", "bad.rttm", "--hyp", "bad.rttm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let emb = "c/duo/duo-dev00.emb";
    let sad = "c/duo/duo-dev00.sad";
    let out = specdiar(
        d,
        &[
            "diarize", "--emb", emb, "--sad", sad, "--alpha", "1.5", "--out", "x.rttm",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn diarize_then_score() {
    let tmp = corpus();
    let d = tmp.path();
    let out = specdiar(
        d,
        &[
            "diarize",
            "--emb",
            "c/duo/duo-dev00.emb",
            "--sad",
            "c/duo/duo-dev00.sad",
            "--alpha",
            "0.2",
            "--out",
            "hyp.rttm",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).is_empty(), "diarize writes only the RTTM file");
    let score = specdiar(
        d,
        &[
            "score",
            "--ref",
            "c/duo/duo-dev00.rttm",
            "--hyp",
            "hyp.rttm",
        ],
    );
    assert!(score.status.success());
    let text = stdout(&score);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "recording\tmissed\tfalse_alarm\tspeaker_error\tscored_ref\tder_percent"
    );
    assert!(lines[1].starts_with("duo-dev00\t"));
    assert!(lines[2].starts_with("ALL\t"));
    let der: f64 = lines[2].rsplit('\t').next().unwrap().parse().unwrap();
    assert!(der < 5.0, "DER {der}%");

    std::fs::create_dir(d.join("hyps")).unwrap();
    std::fs::copy(d.join("hyp.rttm"), d.join("hyps/duo-dev00.rttm")).unwrap();
    let counts = specdiar(
        d,
        &[
            "count-error",
            "--ref",
            "c/duo/duo-dev00.rttm",
            "--hyp-dir",
            "hyps",
        ],
    );
    assert!(
        counts.status.success(),
        "{}",
        String::from_utf8_lossy(&counts.stderr)
    );
    assert_eq!(stdout(&counts), "recording\ttrue_speakers\testimated_speakers\tabs_error\nduo-dev00\t2\t2\t0\nMEAN\t\t\t0.0000\n");
}

#[test]
fn segment_prints_windows() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("r.sad"), "r 0 7.5\nr 10 10.2\n").unwrap();
    let out = specdiar(tmp.path(), &["segment", "--sad", "r.sad"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "recording\tonset\toffset\nr\t0\t3\nr\t1.5\t4.5\nr\t3\t6\nr\t4.5\t7.5\n"
    );
}

#[test]
fn tune_prints_full_sweep() {
    let tmp = corpus();
    let out = specdiar(
        tmp.path(),
        &[
            "tune",
            "--manifest",
            "c/manifest.tsv",
            "--domain",
            "duo",
            "--jobs",
            "2",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha\tder_percent\tmarker");
    assert_eq!(lines.len(), 1 + 101 + 1);
    assert!(lines[102].ends_with("\tmin"));
    let missing = specdiar(
        tmp.path(),
        &["tune", "--manifest", "c/manifest.tsv", "--domain", "nope"],
    );
    assert_eq!(missing.status.code(), Some(2));
}
