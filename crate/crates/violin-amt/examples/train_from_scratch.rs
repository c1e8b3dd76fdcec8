//! Train a small model from random initialization on synthetic clips and
//! save a checkpoint.
//!
//! ```bash
//! cargo run --release --example train_from_scratch
//! ```
//!
//! A short run on a deliberately small model; see the README for the full
//! CLI-driven recipe.

use violin_amt::model::{train, TrainSetup};
use violin_amt::{
    save_checkpoint, synth_clip, AugmentConfig, DecodeConfig, FeatureConfig, ModelConfig,
    SynthConfig, TrainConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clips: Vec<_> = (0..4u64)
        .map(|k| {
            synth_clip(&SynthConfig {
                seed: 100 + k,
                ..SynthConfig::default()
            })
        })
        .collect();
    println!("training on {} synthetic clips", clips.len());

    let features = FeatureConfig {
        n_fft: 512,
        win_length: 512,
        n_mels: 64,
        amin: 1e-6,
        ..FeatureConfig::default()
    };
    let model = ModelConfig {
        context_frames: 3,
        n_mels: 64,
        hidden_sizes: vec![128],
        pitch_lo: 50,
        pitch_bins: 50,
        init_seed: 7,
    };
    let train_cfg = TrainConfig {
        total_steps: 300,
        segment_s: 2.0,
        lr0: 5e-3,
        lr_min: 5e-4,
        seed: 1,
        ..TrainConfig::default()
    };
    let setup = TrainSetup {
        train: &train_cfg,
        model: &model,
        features: &features,
        augment: &AugmentConfig::default(),
        decode: &DecodeConfig::default(),
    };

    let ckpt = train(&setup, &clips, None, |info| {
        if info.step % 50 == 0 {
            println!("step={} lr={:.2e} loss={:.4}", info.step, info.lr, info.loss);
        }
    })?;

    std::fs::create_dir_all("target")?;
    save_checkpoint(&ckpt, "target/demo-model.ckpt")?;
    println!(
        "saved target/demo-model.ckpt ({} parameters, step {})",
        ckpt.params.num_params(),
        ckpt.step
    );
    Ok(())
}
