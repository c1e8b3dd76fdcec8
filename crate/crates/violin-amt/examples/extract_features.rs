//! Compute a log-mel spectrogram and dump it in the binary FMAT format.
//!
//! ```bash
//! cargo run --release --example extract_features [INPUT_WAV]
//! ```
//!
//! Without an argument a synthetic clip is analyzed.

use violin_amt::features::{read_fmat, write_fmat};
use violin_amt::{log_mel, read_wav, synth_clip, FeatureConfig, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = FeatureConfig::default();
    let clip = match std::env::args().nth(1) {
        Some(path) => read_wav(path, Some(cfg.sr))?,
        None => {
            synth_clip(&SynthConfig {
                seed: 5,
                ..SynthConfig::default()
            })
            .audio
        }
    };

    let feats = log_mel(&clip, &cfg)?;
    println!(
        "{} frames x {} mel bands at {} frames/s",
        feats.frames(),
        feats.bins(),
        feats.frame_rate
    );
    let (lo, hi) = feats
        .data
        .data()
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    println!("value range: {lo:.1} dB .. {hi:.1} dB");

    let path = "target/features.fmat";
    write_fmat(&feats.data, path)?;
    let back = read_fmat(path)?;
    assert_eq!(back, feats.data);
    println!("wrote {path} ({} x {}), round trip verified", back.rows(), back.cols());
    Ok(())
}
