//! Continue training from a saved checkpoint (the fine-tuning arm): same
//! loop, same schedule, only the initialization differs.
//!
//! ```bash
//! cargo run --release --example train_from_scratch   # writes the checkpoint
//! cargo run --release --example fine_tune
//! ```

use violin_amt::model::{train, TrainSetup};
use violin_amt::{
    load_checkpoint, synth_clip, AugmentConfig, DecodeConfig, FeatureConfig, SynthConfig,
    TrainConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ckpt_path = "target/demo-model.ckpt";
    if !std::path::Path::new(ckpt_path).exists() {
        eprintln!("{ckpt_path} not found; run the train_from_scratch example first");
        std::process::exit(1);
    }
    let init = load_checkpoint(ckpt_path)?;
    println!(
        "loaded {ckpt_path}: {} parameters, trained {} steps",
        init.params.num_params(),
        init.step
    );

    // new data the checkpointed model has never seen
    let clips: Vec<_> = (0..3u64)
        .map(|k| {
            synth_clip(&SynthConfig {
                seed: 500 + k,
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
    let train_cfg = TrainConfig {
        total_steps: 100,
        segment_s: 2.0,
        lr0: 1e-3, // gentler rate for adaptation
        seed: 2,
        ..TrainConfig::default()
    };
    let setup = TrainSetup {
        train: &train_cfg,
        model: init.config(),
        features: &features,
        augment: &AugmentConfig::default(),
        decode: &DecodeConfig::default(),
    };

    let tuned = train(&setup, &clips, Some(&init), |info| {
        if info.step % 20 == 0 {
            println!("step={} lr={:.2e} loss={:.4}", info.step, info.lr, info.loss);
        }
    })?;
    println!("fine-tuned for {} steps on {} new clips", tuned.step, clips.len());
    Ok(())
}
