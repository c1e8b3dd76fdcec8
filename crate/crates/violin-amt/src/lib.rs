//! End-to-end violin transcription toolkit.
//!
//! The pipeline runs from raw audio to scored note events:
//!
//! ```text
//! WAV -> AudioClip -> [augment chain] -> log-mel -> acoustic model
//!     -> onset/offset regression heads -> decoded NoteList -> evaluation
//! ```
//!
//! Capabilities, one module each:
//!
//! - [`audio_io`]: WAV read/write, mono mixdown, windowed-sinc resampling.
//! - [`augment`]: seeded effects chain (pitch shift, gain, two band-passes,
//!   reverb) with label-consistent note rescaling.
//! - [`features`]: STFT and Slaney-scale log-mel spectrograms at a fixed
//!   100 frames/s grid, plus the binary `FMAT` matrix dump.
//! - [`targets`]: triangular onset/offset regression targets and sub-frame
//!   peak decoding back to notes.
//! - [`model`]: a trainable four-head acoustic model with hand-written
//!   reverse-mode gradients, Adam, cosine learning-rate annealing,
//!   checkpointing, and a finite-difference gradient check.
//! - [`dataset`]: note-annotation I/O (TSV and JSON), clip segmentation, a
//!   synthetic violin-like clip generator, and directory manifests.
//! - [`eval`]: note-level precision/recall/F1 (with and without offsets)
//!   via maximum bipartite matching, plus an exhaustive matching oracle.
//! - [`cli`]: the `vamt` command-line tool built from the pieces above.
//!
//! Every capability has a runnable demo under `examples/`:
//!
//! ```bash
//! cargo run --release --example synthesize_dataset
//! cargo run --release --example augment_clip
//! cargo run --release --example extract_features
//! cargo run --release --example roundtrip_targets
//! cargo run --release --example gradient_check
//! cargo run --release --example train_from_scratch
//! cargo run --release --example fine_tune
//! cargo run --release --example transcribe_and_score
//! ```
//!
//! Randomness is always an explicit seed; equal seeds give bit-identical
//! audio, checkpoints, and transcriptions.

pub mod audio_io;
pub mod augment;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod mat;
pub mod model;
pub mod note;
pub mod rng;
pub mod targets;

pub use audio_io::{read_wav, resample, write_wav, AudioClip, AudioError};
pub use augment::{
    apply_biquad, apply_chain, apply_gain_db, biquad_bandpass_coeffs, pitch_shift_resample,
    reverb_freeverb, sample_chain_params, AugmentConfig, BiquadCoeffs, ChainParams, DspError,
};
pub use dataset::{
    load_notes_json, load_notes_tsv, save_notes_json, segment, synth_clip, DatasetError,
    LabeledClip, SynthConfig,
};
pub use eval::{
    evaluate, match_notes, oracle_match, EvalError, EvalReport, EvalTolerances, MatchMode,
};
pub use features::{log_mel, mel_filterbank, stft_power, FeatureConfig, FeatureMatrix};
pub use mat::Mat;
pub use model::{
    cosine_lr, forward, grad_check, load_checkpoint, loss, model_init, save_checkpoint, train,
    Checkpoint, ModelConfig, ModelError, ModelParams, TrainConfig, TrainSetup,
};
pub use note::{hz_to_midi, midi_to_hz, NoteEvent, NoteList};
pub use targets::{decode_notes, encode_targets, refine_peak, DecodeConfig, FrameHeads};
