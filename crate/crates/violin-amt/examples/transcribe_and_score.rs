//! The full loop in miniature: train briefly on synthetic clips, transcribe
//! one of them, and score the transcription against its ground truth.
//!
//! ```bash
//! cargo run --release --example transcribe_and_score
//! ```

use violin_amt::model::{train, TrainSetup};
use violin_amt::{
    decode_notes, evaluate, forward, log_mel, synth_clip, AugmentConfig, DecodeConfig,
    EvalTolerances, FeatureConfig, ModelConfig, SynthConfig, TrainConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clips: Vec<_> = (0..2u64)
        .map(|k| {
            synth_clip(&SynthConfig {
                seed: 300 + k,
                ..SynthConfig::default()
            })
        })
        .collect();

    let features = FeatureConfig {
        n_fft: 512,
        win_length: 512,
        n_mels: 64,
        amin: 1e-6,
        ..FeatureConfig::default()
    };
    let model_cfg = ModelConfig {
        context_frames: 3,
        n_mels: 64,
        hidden_sizes: vec![256],
        pitch_lo: 50,
        pitch_bins: 50,
        init_seed: 3,
    };
    let train_cfg = TrainConfig {
        total_steps: 800,
        segment_s: 2.0,
        lr0: 5e-3,
        lr_min: 5e-4,
        seed: 4,
        ..TrainConfig::default()
    };
    let decode_cfg = DecodeConfig {
        onset_threshold: 0.1,
        offset_threshold: 0.1,
        ..DecodeConfig::default()
    };
    let setup = TrainSetup {
        train: &train_cfg,
        model: &model_cfg,
        features: &features,
        augment: &AugmentConfig::default(),
        decode: &decode_cfg,
    };

    eprintln!("training {} steps on {} clips...", train_cfg.total_steps, clips.len());
    let ckpt = train(&setup, &clips, None, |info| {
        if info.step % 200 == 0 {
            eprintln!("  step={} loss={:.4}", info.step, info.loss);
        }
    })?;

    for clip in &clips {
        let feats = log_mel(&clip.audio, &features)?;
        let heads = forward(&ckpt.params, &feats)?;
        let transcription = decode_notes(&heads, &decode_cfg);
        let report = evaluate(&clip.notes, &transcription, &EvalTolerances::default());
        println!(
            "{}: {} true notes, {} transcribed | P {:.2} R {:.2} F1 {:.2} F1_no {:.2}",
            clip.id,
            report.n_ref,
            report.n_est,
            report.precision,
            report.recall,
            report.f1,
            report.f1_no
        );
    }
    Ok(())
}
