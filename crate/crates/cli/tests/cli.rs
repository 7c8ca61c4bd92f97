use std::path::Path;
use std::process::{Command, Output};

use capgen_core::MetricsReport;

fn capgen(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_capgen"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("CAPGEN_")) {
        cmd.env_remove(k);
    }
    cmd.envs(env.iter().copied()).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Fixture plus a briefly trained checkpoint in `dir`.
fn trained(dir: &Path) -> (String, String, String) {
    let d = dir.to_str().unwrap();
    let (f, c, m) = (format!("{d}/features.bnf"), format!("{d}/captions.tsv"), format!("{d}/m.bnck"));
    assert!(capgen(&["fixture", "--out", d, "--images", "6", "--seed", "1"], &[]).status.success());
    let out = capgen(
        &[
            "train",
            "--features",
            &f,
            "--captions",
            &c,
            "--out",
            &m,
            "--epochs",
            "40",
            "--hidden",
            "16",
            "--embed",
            "8",
            "--lr",
            "0.01",
            "--split",
            "all",
        ],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (f, c, m)
}

#[test]
fn exit_codes() {
    assert_eq!(capgen(&["--help"], &[]).status.code(), Some(0));
    assert_eq!(capgen(&[], &[]).status.code(), Some(1));
    assert_eq!(capgen(&["train", "--nope"], &[]).status.code(), Some(1));
    assert_eq!(capgen(&["gradcheck", "--seed", "x"], &[]).status.code(), Some(1));
    let missing = capgen(&["caption", "--checkpoint", "/nonexistent/m.bnck", "--features", "f", "--id", "x"], &[]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/m.bnck"));
    assert!(missing.stdout.is_empty());
}

#[test]
fn gradcheck_reports_a_small_error() {
    let out = capgen(&["gradcheck", "--seed", "4"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let line = stdout(&out);
    let err: f64 = line.trim().strip_prefix("max_rel_error=").unwrap().parse().unwrap();
    assert!(err < 1e-4);
}

#[test]
fn fixture_flags_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = capgen(&["fixture", "--out", a.to_str().unwrap()], &[("CAPGEN_IMAGES", "3"), ("CAPGEN_SEED", "5")]);
    assert!(out.status.success());
    let caps = std::fs::read_to_string(a.join("captions.tsv")).unwrap();
    assert_eq!(caps.lines().count(), 15);

    let out = capgen(
        &["fixture", "--out", b.to_str().unwrap(), "--images", "2", "--seed", "5"],
        &[("CAPGEN_IMAGES", "3")],
    );
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(b.join("captions.tsv")).unwrap().lines().count(), 10);
    assert!(caps.starts_with(&std::fs::read_to_string(b.join("captions.tsv")).unwrap()));
}

#[test]
fn caption_beam_one_equals_greedy() {
    let dir = tempfile::tempdir().unwrap();
    let (f, _, m) = trained(dir.path());
    for id in ["img_0000", "img_0003", "img_0005"] {
        for dir in ["forward", "backward", "both"] {
            let greedy = capgen(
                &["caption", "--checkpoint", &m, "--features", &f, "--id", id, "--greedy", "--direction", dir],
                &[],
            );
            let beam = capgen(
                &["caption", "--checkpoint", &m, "--features", &f, "--id", id, "--beam", "1", "--direction", dir],
                &[],
            );
            assert!(greedy.status.success() && beam.status.success());
            assert_eq!(stdout(&greedy), stdout(&beam), "{id} {dir}");
            assert!(!stdout(&greedy).trim().is_empty());
        }
    }
    let unknown = capgen(&["caption", "--checkpoint", &m, "--features", &f, "--id", "img_9999"], &[]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn evaluate_prints_table_and_parsable_line() {
    let dir = tempfile::tempdir().unwrap();
    let (f, c, m) = trained(dir.path());
    let out = capgen(
        &[
            "evaluate",
            "--checkpoint",
            &m,
            "--features",
            &f,
            "--captions",
            &c,
            "--split",
            "all",
            "--beam",
            "3",
        ],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("| BLEU-1 | BLEU-2 | BLEU-3 | BLEU-4 | METEOR |"));
    assert!(text.contains("beam-3 both"));
    let line = text.lines().last().unwrap();
    let report: MetricsReport = line.parse().unwrap();
    assert_eq!(report.n_sentences, 6);
    assert_eq!(report.machine_line(), line);

    let test_split = capgen(&["evaluate", "--checkpoint", &m, "--features", &f, "--captions", &c], &[]);
    assert!(test_split.status.success());
    let r: MetricsReport = stdout(&test_split).lines().last().unwrap().parse().unwrap();
    assert_eq!(r.n_sentences, 1);
}

#[test]
fn train_writes_curves_next_to_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path());
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epoch,loss,accuracy"));
    assert_eq!(lines.count(), 40);
}

#[test]
fn train_rejects_bad_inputs_as_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(capgen(&["fixture", "--out", d, "--images", "4"], &[]).status.success());
    std::fs::write(dir.path().join("bad.tsv"), "img_0000 no tab here\n").unwrap();
    let out = capgen(
        &[
            "train",
            "--features",
            &format!("{d}/features.bnf"),
            "--captions",
            &format!("{d}/bad.tsv"),
            "--out",
            &format!("{d}/m.bnck"),
            "--epochs",
            "1",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}
