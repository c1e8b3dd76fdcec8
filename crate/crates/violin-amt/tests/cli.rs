//! CLI surface: subcommand behavior, exit codes, output formats, and
//! determinism of file outputs.

use std::fs;
use std::process::Command;

use violin_amt::cli::run_with_output;
use violin_amt::{evaluate, EvalReport, EvalTolerances};

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut full = vec!["vamt"];
    full.extend_from_slice(args);
    let mut out = Vec::new();
    let code = run_with_output(full, &mut out);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn synth_writes_expected_files_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let (code, _) = run_cli(&["synth", "--seed", "7", "--count", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let mut names: Vec<String> = fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        vec![
            "clip000.notes.json",
            "clip000.wav",
            "clip001.notes.json",
            "clip001.wav",
            "clip002.notes.json",
            "clip002.wav",
        ]
    );
    for name in &names {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn eval_self_comparison_prints_perfect_report() {
    let dir = tempfile::tempdir().unwrap();
    let notes = dir.path().join("x.notes.json");
    fs::write(
        &notes,
        r#"{"notes":[{"onset_s":0.5,"offset_s":1.0,"pitch_midi":69.0,"velocity":0.8}]}"#,
    )
    .unwrap();
    let (code, out) = run_cli(&["eval", "--ref", notes.to_str().unwrap(), "--est", notes.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: EvalReport = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(report.f1, 1.0);
    assert_eq!(report.n_match, 1);

    // identical to the library call, byte for byte
    let list = violin_amt::load_notes_json(&notes).unwrap();
    let lib_json = serde_json::to_string(&evaluate(&list, &list, &EvalTolerances::default())).unwrap();
    assert_eq!(out.trim(), lib_json);
}

#[test]
fn eval_accepts_tsv_reference() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("ref.tsv");
    fs::write(&tsv, "0.5\t440.0\t0.5\n").unwrap();
    let est = dir.path().join("est.notes.json");
    fs::write(
        &est,
        r#"{"notes":[{"onset_s":0.51,"offset_s":1.0,"pitch_midi":69.1,"velocity":0.8}]}"#,
    )
    .unwrap();
    let (code, out) = run_cli(&["eval", "--ref", tsv.to_str().unwrap(), "--est", est.to_str().unwrap(), "--onset-only"]);
    assert_eq!(code, 0);
    let report: EvalReport = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(report.n_match_no, 1);
    assert_eq!(report.f1, report.f1_no);
}

#[test]
fn augment_writes_prefixed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run_cli(&["synth", "--seed", "3", "--count", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let wav = dir.path().join("clip000.wav");
    let notes = dir.path().join("clip000.notes.json");
    let prefix = dir.path().join("aug000");
    let (code, _) = run_cli(&[
        "augment",
        "--in",
        wav.to_str().unwrap(),
        "--notes",
        notes.to_str().unwrap(),
        "--seed",
        "5",
        "--out-prefix",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(dir.path().join("aug000.wav").exists());
    assert!(dir.path().join("aug000.notes.json").exists());
    let orig = violin_amt::load_notes_json(&notes).unwrap();
    let aug = violin_amt::load_notes_json(dir.path().join("aug000.notes.json")).unwrap();
    assert_eq!(orig.len(), aug.len());
}

#[test]
fn missing_checkpoint_fails_with_its_path_in_the_message() {
    let (code, _) = run_cli(&[
        "transcribe",
        "--in",
        "/nonexistent/in.wav",
        "--ckpt",
        "/nonexistent/model.ckpt",
        "--out",
        "/tmp/out.json",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn bad_config_schema_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"train":{"learning_rate":1.0}}"#).unwrap();
    let notes = dir.path().join("x.notes.json");
    fs::write(&notes, r#"{"notes":[]}"#).unwrap();
    let (code, _) = run_cli(&[
        "eval",
        "--ref",
        notes.to_str().unwrap(),
        "--est",
        notes.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn usage_errors_exit_2_through_real_binary() {
    let out = Command::new(env!("CARGO_BIN_EXE_vamt"))
        .arg("frobnicate")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let ok = Command::new(env!("CARGO_BIN_EXE_vamt"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}
