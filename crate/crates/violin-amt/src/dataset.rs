//! Note-annotation I/O, clip segmentation, and a synthetic data generator.
//!
//! A dataset on disk is a directory of `<id>.wav` + `<id>.notes.json` pairs.
//! Note annotations also load from URMP-style TSV
//! (`onset_s<TAB>freq_hz<TAB>duration_s` per line). The synthetic generator
//! produces monophonic additive-harmonic clips whose ground truth matches
//! the synthesis exactly, so training and end-to-end tests run without any
//! external corpus.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::AudioClip;
use crate::note::{hz_to_midi, NoteError, NoteEvent, NoteList};
use crate::rng;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}:{line}: frequency must be positive, got {freq}")]
    NonPositiveFrequency {
        path: String,
        line: usize,
        freq: f64,
    },
    #[error("{path}: schema error: {msg}")]
    Schema { path: String, msg: String },
    #[error("{path}: invalid note: {source}")]
    InvalidNote { path: String, source: NoteError },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("no .wav files found under {0}")]
    EmptyManifest(String),
    #[error("{wav} has no matching notes file {notes}")]
    MissingNotes { wav: String, notes: String },
}

/// Audio paired with its note annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub id: String,
    pub audio: AudioClip,
    pub notes: NoteList,
}

impl LabeledClip {
    /// Notes may overhang the audio by at most 1 ms.
    pub fn validate(&self) -> Result<(), String> {
        let limit = self.audio.duration_s() + 1e-3;
        for n in self.notes.iter() {
            if n.offset_s > limit {
                return Err(format!(
                    "note offset {} s past audio end {} s",
                    n.offset_s,
                    self.audio.duration_s()
                ));
            }
        }
        Ok(())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Loads URMP-style TSV: `onset_s<TAB>freq_hz<TAB>duration_s`, `#` comments.
/// Pitch becomes float MIDI; velocity defaults to 0.8.
pub fn load_notes_tsv(path: impl AsRef<Path>) -> Result<NoteList, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut events = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse = |field: &str, what: &str| -> Result<f64, DatasetError> {
            field.trim().parse::<f64>().map_err(|_| DatasetError::Parse {
                path: path.display().to_string(),
                line: line_no,
                msg: format!("bad {what}: {field:?}"),
            })
        };
        let mut cols = line.split('\t');
        let (onset, freq, dur) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), Some(c)) => (parse(a, "onset")?, parse(b, "frequency")?, parse(c, "duration")?),
            _ => {
                return Err(DatasetError::Parse {
                    path: path.display().to_string(),
                    line: line_no,
                    msg: "expected onset<TAB>freq_hz<TAB>duration".into(),
                })
            }
        };
        if freq <= 0.0 {
            return Err(DatasetError::NonPositiveFrequency {
                path: path.display().to_string(),
                line: line_no,
                freq,
            });
        }
        if dur <= 0.0 {
            return Err(DatasetError::Parse {
                path: path.display().to_string(),
                line: line_no,
                msg: format!("non-positive duration {dur}"),
            });
        }
        events.push(NoteEvent {
            onset_s: onset,
            offset_s: onset + dur,
            pitch_midi: hz_to_midi(freq),
            velocity: 0.8,
        });
    }
    Ok(NoteList::from_events(events))
}

pub fn save_notes_json(notes: &NoteList, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(notes).expect("note list serializes");
    fs::write(path, json).map_err(|e| io_err(path, e))
}

pub fn load_notes_json(path: impl AsRef<Path>) -> Result<NoteList, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let list: NoteList = serde_json::from_str(&text).map_err(|e| DatasetError::Schema {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    for n in list.iter() {
        n.validate().map_err(|e| DatasetError::InvalidNote {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    Ok(NoteList::from_events(list.notes().to_vec()))
}

/// Notes intersecting `[t0, t1)` clipped to the window and re-based to its
/// start; fragments shorter than `min_keep_s` are dropped.
pub fn clip_notes_to_window(notes: &NoteList, t0: f64, t1: f64, min_keep_s: f64) -> NoteList {
    let events = notes
        .iter()
        .filter(|n| n.offset_s > t0 && n.onset_s < t1)
        .filter_map(|n| {
            let onset = n.onset_s.max(t0) - t0;
            let offset = n.offset_s.min(t1) - t0;
            (offset - onset >= min_keep_s).then_some(NoteEvent {
                onset_s: onset,
                offset_s: offset,
                ..*n
            })
        })
        .collect();
    NoteList::from_events(events)
}

const SEGMENT_MIN_FRAGMENT_S: f64 = 0.03;

/// Tiles a clip into fixed-length windows `[k*hop_s, k*hop_s + seg_s)`.
/// The audio of the last window is zero-padded to full length.
pub fn segment(clip: &LabeledClip, seg_s: f64, hop_s: f64) -> Vec<LabeledClip> {
    assert!(seg_s > 0.0 && hop_s > 0.0);
    let sr = clip.audio.sample_rate;
    let duration = clip.audio.duration_s();
    let seg_samples = (seg_s * sr as f64).round() as usize;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t0 = k as f64 * hop_s;
        if k > 0 && t0 >= duration {
            break;
        }
        let s0 = (t0 * sr as f64).round() as usize;
        let mut samples = vec![0.0f32; seg_samples];
        if s0 < clip.audio.samples.len() {
            let avail = (clip.audio.samples.len() - s0).min(seg_samples);
            samples[..avail].copy_from_slice(&clip.audio.samples[s0..s0 + avail]);
        }
        out.push(LabeledClip {
            id: format!("{}.seg{:03}", clip.id, k),
            audio: AudioClip::new(samples, sr),
            notes: clip_notes_to_window(&clip.notes, t0, t0 + seg_s, SEGMENT_MIN_FRAGMENT_S),
        });
        k += 1;
    }
    out
}

/// Settings for the synthetic violin-like generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub sample_rate: u32,
    pub n_notes_range: [usize; 2],
    pub pitch_range_midi: [i64; 2],
    pub duration_range_s: [f64; 2],
    pub gap_range_s: [f64; 2],
    pub amp_range: [f64; 2],
    pub harmonics: usize,
    pub vibrato_rate_hz: f64,
    pub vibrato_depth_semitones: f64,
    pub vibrato_prob: f64,
    pub attack_s: f64,
    pub release_s: f64,
    pub noise_floor_db: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            n_notes_range: [3, 12],
            pitch_range_midi: [55, 96], // violin G3 upward
            duration_range_s: [0.2, 1.0],
            gap_range_s: [0.05, 0.3],
            amp_range: [0.3, 0.9],
            harmonics: 8,
            vibrato_rate_hz: 5.5,
            vibrato_depth_semitones: 0.2,
            vibrato_prob: 0.5,
            attack_s: 0.02,
            release_s: 0.05,
            noise_floor_db: -60.0,
            seed: 0,
        }
    }
}

/// Renders a monophonic sequence of additive-harmonic notes (8 harmonics at
/// 1/k amplitude, normalized), with linear attack/release ramps, per-note
/// optional vibrato, and a Gaussian noise floor. Ground truth matches the
/// synthesis schedule exactly; velocity is the per-note amplitude scalar.
pub fn synth_clip(cfg: &SynthConfig) -> LabeledClip {
    let sr = cfg.sample_rate as f64;
    let mut rng = rng::seeded(cfg.seed);
    let n_notes =
        rng::uniform_range_i64(&mut rng, cfg.n_notes_range[0] as i64, cfg.n_notes_range[1] as i64)
            as usize;

    struct PlannedNote {
        onset: f64,
        dur: f64,
        pitch: i64,
        amp: f64,
        vibrato: bool,
    }
    let mut planned = Vec::with_capacity(n_notes);
    let mut t = rng::uniform_f64(&mut rng, cfg.gap_range_s[0], cfg.gap_range_s[1]);
    for _ in 0..n_notes {
        let dur = rng::uniform_f64(&mut rng, cfg.duration_range_s[0], cfg.duration_range_s[1]);
        planned.push(PlannedNote {
            onset: t,
            dur,
            pitch: rng::uniform_range_i64(&mut rng, cfg.pitch_range_midi[0], cfg.pitch_range_midi[1]),
            amp: rng::uniform_f64(&mut rng, cfg.amp_range[0], cfg.amp_range[1]),
            vibrato: rng::uniform_f64(&mut rng, 0.0, 1.0) < cfg.vibrato_prob,
        });
        t += dur + rng::uniform_f64(&mut rng, cfg.gap_range_s[0], cfg.gap_range_s[1]);
    }

    let total_s = t + 0.1;
    let n_samples = (total_s * sr).ceil() as usize;
    let mut samples = vec![0.0f64; n_samples];
    let harmonic_norm: f64 = (1..=cfg.harmonics).map(|k| 1.0 / k as f64).sum();

    for note in &planned {
        let f0 = crate::note::midi_to_hz(note.pitch as f64);
        let start = (note.onset * sr).round() as usize;
        let len = (note.dur * sr).round() as usize;
        let mut phase = 0.0f64;
        for i in 0..len.min(n_samples.saturating_sub(start)) {
            let t_rel = i as f64 / sr;
            let f = if note.vibrato {
                f0 * ((cfg.vibrato_depth_semitones
                    * (std::f64::consts::TAU * cfg.vibrato_rate_hz * t_rel).sin())
                    / 12.0)
                    .exp2()
            } else {
                f0
            };
            phase += std::f64::consts::TAU * f / sr;
            let mut s = 0.0;
            for k in 1..=cfg.harmonics {
                s += (phase * k as f64).sin() / k as f64;
            }
            let env_attack = (t_rel / cfg.attack_s).min(1.0);
            let env_release = ((note.dur - t_rel) / cfg.release_s).clamp(0.0, 1.0);
            samples[start + i] += note.amp * s / harmonic_norm * env_attack * env_release;
        }
    }

    let noise_sigma = 10f64.powf(cfg.noise_floor_db / 20.0);
    for s in samples.iter_mut() {
        *s += rng::normal_f64(&mut rng, 0.0, noise_sigma);
    }

    let events = planned
        .iter()
        .map(|n| NoteEvent {
            onset_s: n.onset,
            offset_s: n.onset + n.dur,
            pitch_midi: n.pitch as f64,
            velocity: n.amp,
        })
        .collect();
    LabeledClip {
        id: format!("synth-{:08x}", cfg.seed),
        audio: AudioClip::new(samples.iter().map(|&s| s as f32).collect(), cfg.sample_rate),
        notes: NoteList::from_events(events),
    }
}

/// Discovers `<id>.wav` + `<id>.notes.json` pairs under a directory, sorted
/// by id. Audio is resampled to `target_sr` when given.
pub fn load_manifest_dir(
    dir: impl AsRef<Path>,
    target_sr: Option<u32>,
) -> Result<Vec<LabeledClip>, DatasetError> {
    let dir = dir.as_ref();
    let mut wavs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
        .collect();
    wavs.sort();
    if wavs.is_empty() {
        return Err(DatasetError::EmptyManifest(dir.display().to_string()));
    }
    let mut clips = Vec::with_capacity(wavs.len());
    for wav in wavs {
        let id = wav
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let notes_path = dir.join(format!("{id}.notes.json"));
        if !notes_path.exists() {
            return Err(DatasetError::MissingNotes {
                wav: wav.display().to_string(),
                notes: notes_path.display().to_string(),
            });
        }
        let audio = crate::audio_io::read_wav(&wav, target_sr).map_err(|e| DatasetError::Io {
            path: wav.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        })?;
        let notes = load_notes_json(&notes_path)?;
        clips.push(LabeledClip { id, audio, notes });
    }
    Ok(clips)
}
