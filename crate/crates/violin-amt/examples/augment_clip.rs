//! Apply one seeded realization of the augmentation chain to a synthetic
//! clip and show how the note annotations track the pitch shift.
//!
//! ```bash
//! cargo run --release --example augment_clip
//! ```

use violin_amt::{apply_chain, sample_chain_params, synth_clip, AugmentConfig, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clip = synth_clip(&SynthConfig {
        seed: 42,
        ..SynthConfig::default()
    });
    println!(
        "input: {:.2} s, {} notes",
        clip.audio.duration_s(),
        clip.notes.len()
    );

    let cfg = AugmentConfig::default();
    for seed in [1u64, 2, 3] {
        let params = sample_chain_params(seed, &cfg);
        let (audio, notes) = apply_chain(&clip.audio, &clip.notes, &params)?;
        let first_in = clip.notes.notes()[0];
        let first_out = notes.notes()[0];
        println!(
            "\nseed {seed}: pitch {:+.4} st, band-passes {:.0} Hz (Q {:.2}) and {:.0} Hz (Q {:.2})",
            params.pitch_semitones, params.bp1_fc, params.bp1_q, params.bp2_fc, params.bp2_q
        );
        println!(
            "  duration {:.3} s -> {:.3} s; first note onset {:.4} -> {:.4}, pitch {:.1} -> {:.4}",
            clip.audio.duration_s(),
            audio.duration_s(),
            first_in.onset_s,
            first_out.onset_s,
            first_in.pitch_midi,
            first_out.pitch_midi,
        );
    }
    Ok(())
}
