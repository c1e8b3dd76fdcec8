//! Command-line entry point wiring the modules into end-to-end workflows:
//! synthesize data, augment clips, train (from scratch or from a
//! checkpoint), transcribe, and evaluate.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors.
//! `eval` prints its report JSON on standard output; `train` prints
//! `step=<n> lr=<float> loss=<float>` lines there; diagnostics go to
//! standard error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::augment::{apply_chain, sample_chain_params, AugmentConfig};
use crate::dataset::{
    load_manifest_dir, load_notes_json, load_notes_tsv, save_notes_json, synth_clip, SynthConfig,
};
use crate::eval::{evaluate, evaluate_onset_only, EvalReport, EvalTolerances};
use crate::features::{log_mel, FeatureConfig};
use crate::model::{
    forward, load_checkpoint, save_checkpoint, train, ModelConfig, TrainConfig, TrainSetup,
};
use crate::note::NoteList;
use crate::rng;
use crate::targets::{decode_notes, DecodeConfig};

/// One JSON document configuring every stage. Omitted sections use module
/// defaults; unknown keys anywhere are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
    pub decode: DecodeConfig,
    pub eval: EvalTolerances,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| format!("{}: config schema violation: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.features.validate().map_err(|e| format!("features: {e}"))?;
        self.model.validate().map_err(|e| format!("model: {e}"))?;
        self.train.validate().map_err(|e| format!("train: {e}"))?;
        self.augment.validate().map_err(|e| format!("augment: {e}"))?;
        self.eval.validate().map_err(|e| format!("eval: {e}"))?;
        Ok(())
    }
}

#[derive(Parser)]
#[command(name = "vamt", version, about = "Violin transcription toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic labeled clips into a directory.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply one seeded realization of the augmentation chain.
    Augment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        notes: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_prefix: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train from scratch, or fine-tune when --init is given.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Transcribe a WAV file with a trained checkpoint.
    Transcribe {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score an estimate against a reference (files or directories).
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        onset_only: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Runs the CLI against an argument vector (the first element is the
/// program name) and returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    run_with_output(args, &mut std::io::stdout())
}

/// Same as [`run`] but with standard output captured, for tests.
pub fn run_with_output<I, S, W>(args: I, stdout: &mut W) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    2
                }
            }
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, String> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn dispatch(cmd: Command, stdout: &mut impl Write) -> Result<(), String> {
    match cmd {
        Command::Synth { seed, count, out } => run_synth(seed, count, &out),
        Command::Augment {
            input,
            notes,
            seed,
            out_prefix,
            config,
        } => run_augment(&input, &notes, seed, &out_prefix, &load_config(&config)?),
        Command::Train {
            data,
            out,
            init,
            config,
            steps,
        } => run_train(&data, &out, init.as_deref(), &load_config(&config)?, steps, stdout),
        Command::Transcribe {
            input,
            ckpt,
            out,
            config,
        } => run_transcribe(&input, &ckpt, &out, &load_config(&config)?),
        Command::Eval {
            reference,
            est,
            onset_only,
            config,
        } => run_eval(&reference, &est, onset_only, &load_config(&config)?, stdout),
    }
}

fn run_synth(seed: u64, count: usize, out: &Path) -> Result<(), String> {
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let mut stream = rng::seeded(seed);
    for k in 0..count {
        let clip_seed = stream.next_u64();
        let clip = synth_clip(&SynthConfig {
            seed: clip_seed,
            ..SynthConfig::default()
        });
        let id = format!("clip{k:03}");
        let wav = out.join(format!("{id}.wav"));
        let json = out.join(format!("{id}.notes.json"));
        crate::audio_io::write_wav(&clip.audio, &wav).map_err(|e| e.to_string())?;
        save_notes_json(&clip.notes, &json).map_err(|e| e.to_string())?;
        eprintln!(
            "synth: wrote {} ({} notes, {:.2} s)",
            wav.display(),
            clip.notes.len(),
            clip.audio.duration_s()
        );
    }
    Ok(())
}

fn run_augment(
    input: &Path,
    notes_path: &Path,
    seed: u64,
    out_prefix: &str,
    cfg: &RunConfig,
) -> Result<(), String> {
    let clip = crate::audio_io::read_wav(input, Some(cfg.features.sr)).map_err(|e| e.to_string())?;
    let notes = load_notes(notes_path)?;
    let params = sample_chain_params(seed, &cfg.augment);
    let (audio, notes_out) = apply_chain(&clip, &notes, &params).map_err(|e| e.to_string())?;
    let wav = PathBuf::from(format!("{out_prefix}.wav"));
    let json = PathBuf::from(format!("{out_prefix}.notes.json"));
    crate::audio_io::write_wav(&audio, &wav).map_err(|e| e.to_string())?;
    save_notes_json(&notes_out, &json).map_err(|e| e.to_string())?;
    eprintln!(
        "augment: pitch {:+.4} st, band-passes {:.0}/{:.0} Hz -> {}",
        params.pitch_semitones, params.bp1_fc, params.bp2_fc, wav.display()
    );
    Ok(())
}

fn run_train(
    data_dir: &Path,
    out: &Path,
    init: Option<&Path>,
    cfg: &RunConfig,
    steps: Option<u64>,
    stdout: &mut impl Write,
) -> Result<(), String> {
    let mut tcfg = cfg.train.clone();
    if let Some(steps) = steps {
        tcfg.total_steps = steps;
    }
    tcfg.validate().map_err(|e| format!("train: {e}"))?;
    let data = load_manifest_dir(data_dir, Some(cfg.features.sr)).map_err(|e| e.to_string())?;
    eprintln!(
        "train: {} clips, {} steps, batch {}, augment {}",
        data.len(),
        tcfg.total_steps,
        tcfg.batch_size,
        tcfg.augment
    );
    let init_ckpt = match init {
        Some(p) => Some(load_checkpoint(p).map_err(|e| e.to_string())?),
        None => None,
    };
    let setup = TrainSetup {
        train: &tcfg,
        model: &cfg.model,
        features: &cfg.features,
        augment: &cfg.augment,
        decode: &cfg.decode,
    };
    let total = tcfg.total_steps;
    let mut log_err: Option<std::io::Error> = None;
    let ckpt = train(&setup, &data, init_ckpt.as_ref(), |info| {
        if info.step % 100 == 0 || info.step == total {
            if let Err(e) = writeln!(stdout, "step={} lr={} loss={}", info.step, info.lr, info.loss)
            {
                log_err.get_or_insert(e);
            }
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(e) = log_err {
        return Err(format!("writing training log: {e}"));
    }
    save_checkpoint(&ckpt, out).map_err(|e| e.to_string())?;
    eprintln!("train: saved checkpoint to {}", out.display());
    Ok(())
}

fn run_transcribe(
    input: &Path,
    ckpt_path: &Path,
    out: &Path,
    cfg: &RunConfig,
) -> Result<(), String> {
    let ckpt = load_checkpoint(ckpt_path).map_err(|e| e.to_string())?;
    let clip = crate::audio_io::read_wav(input, Some(cfg.features.sr)).map_err(|e| e.to_string())?;
    let feats = log_mel(&clip, &cfg.features).map_err(|e| e.to_string())?;
    let heads = forward(&ckpt.params, &feats).map_err(|e| e.to_string())?;
    let notes = decode_notes(&heads, &cfg.decode);
    save_notes_json(&notes, out).map_err(|e| e.to_string())?;
    eprintln!(
        "transcribe: {} -> {} notes -> {}",
        input.display(),
        notes.len(),
        out.display()
    );
    Ok(())
}

fn load_notes(path: &Path) -> Result<NoteList, String> {
    let is_tsv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
    if is_tsv {
        load_notes_tsv(path).map_err(|e| e.to_string())
    } else {
        load_notes_json(path).map_err(|e| e.to_string())
    }
}

/// Aggregate report for directory evaluation: per-file scores plus their
/// arithmetic mean and the pooled-count scores.
#[derive(Debug, Serialize)]
struct BatchReport {
    files: BTreeMap<String, EvalReport>,
    mean: EvalReport,
    pooled: EvalReport,
}

fn run_eval(
    reference: &Path,
    est: &Path,
    onset_only: bool,
    cfg: &RunConfig,
    stdout: &mut impl Write,
) -> Result<(), String> {
    let score = |r: &NoteList, e: &NoteList| -> EvalReport {
        if onset_only {
            evaluate_onset_only(r, e, &cfg.eval)
        } else {
            evaluate(r, e, &cfg.eval)
        }
    };

    if reference.is_dir() != est.is_dir() {
        return Err("--ref and --est must both be files or both be directories".into());
    }
    if !reference.is_dir() {
        let report = score(&load_notes(reference)?, &load_notes(est)?);
        let json = serde_json::to_string(&report).expect("report serializes");
        writeln!(stdout, "{json}").map_err(|e| e.to_string())?;
        return Ok(());
    }

    // directory mode: pair <id>.notes.json files by id
    let mut ids: Vec<String> = fs::read_dir(reference)
        .map_err(|e| format!("{}: {e}", reference.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter_map(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".notes.json"))
                .map(str::to_string)
        })
        .collect();
    ids.sort();
    if ids.is_empty() {
        return Err(format!(
            "{}: no <id>.notes.json files to evaluate",
            reference.display()
        ));
    }

    let mut files = BTreeMap::new();
    let mut sums = EvalReport {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        f1_no: 0.0,
        n_ref: 0,
        n_est: 0,
        n_match: 0,
        n_match_no: 0,
    };
    for id in &ids {
        let r = load_notes(&reference.join(format!("{id}.notes.json")))?;
        let e = load_notes(&est.join(format!("{id}.notes.json")))?;
        let report = score(&r, &e);
        sums.precision += report.precision;
        sums.recall += report.recall;
        sums.f1 += report.f1;
        sums.f1_no += report.f1_no;
        sums.n_ref += report.n_ref;
        sums.n_est += report.n_est;
        sums.n_match += report.n_match;
        sums.n_match_no += report.n_match_no;
        files.insert(id.clone(), report);
    }
    let n = ids.len() as f64;
    let prf = |mat: usize, n_ref: usize, n_est: usize| -> (f64, f64, f64) {
        let p = if n_est > 0 { mat as f64 / n_est as f64 } else { 0.0 };
        let r = if n_ref > 0 { mat as f64 / n_ref as f64 } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        (p, r, f)
    };
    let (pp, pr, pf) = prf(sums.n_match, sums.n_ref, sums.n_est);
    let (_, _, pf_no) = prf(sums.n_match_no, sums.n_ref, sums.n_est);
    let batch = BatchReport {
        mean: EvalReport {
            precision: sums.precision / n,
            recall: sums.recall / n,
            f1: sums.f1 / n,
            f1_no: sums.f1_no / n,
            n_ref: sums.n_ref,
            n_est: sums.n_est,
            n_match: sums.n_match,
            n_match_no: sums.n_match_no,
        },
        pooled: EvalReport {
            precision: pp,
            recall: pr,
            f1: pf,
            f1_no: pf_no,
            n_ref: sums.n_ref,
            n_est: sums.n_est,
            n_match: sums.n_match,
            n_match_no: sums.n_match_no,
        },
        files,
    };
    let json = serde_json::to_string_pretty(&batch).expect("report serializes");
    writeln!(stdout, "{json}").map_err(|e| e.to_string())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"train":{"batch_siz":4}}"#).unwrap_err();
        assert!(err.to_string().contains("batch_siz"));
        let err = serde_json::from_str::<RunConfig>(r#"{"trainer":{}}"#).unwrap_err();
        assert!(err.to_string().contains("trainer"));
    }

    #[test]
    fn omitted_sections_use_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"train":{"batch_size":2}}"#).unwrap();
        assert_eq!(cfg.train.batch_size, 2);
        assert_eq!(cfg.train.total_steps, 10_000);
        assert_eq!(cfg.features, FeatureConfig::default());
        assert_eq!(cfg.model, ModelConfig::default());
    }

    #[test]
    fn usage_errors_exit_2() {
        let mut out = Vec::new();
        assert_eq!(run_with_output(["vamt", "bogus"], &mut out), 2);
        assert_eq!(run_with_output(["vamt", "eval", "--ref"], &mut out), 2);
        assert_eq!(run_with_output(["vamt"], &mut out), 2);
    }

    #[test]
    fn missing_files_exit_1() {
        let mut out = Vec::new();
        let code = run_with_output(
            [
                "vamt",
                "transcribe",
                "--in",
                "/nonexistent/x.wav",
                "--ckpt",
                "/nonexistent/m.ckpt",
                "--out",
                "/tmp/never.json",
            ],
            &mut out,
        );
        assert_eq!(code, 1);
    }
}
