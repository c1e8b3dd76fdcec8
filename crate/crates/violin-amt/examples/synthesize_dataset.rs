//! Generate a small labeled dataset of synthetic violin-like clips.
//!
//! Writes `<id>.wav` + `<id>.notes.json` pairs, the manifest layout the
//! training tools consume.
//!
//! ```bash
//! cargo run --release --example synthesize_dataset [OUT_DIR]
//! ```

use violin_amt::{save_notes_json, synth_clip, write_wav, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/demo-data".into());
    std::fs::create_dir_all(&out)?;

    for k in 0..4u64 {
        let clip = synth_clip(&SynthConfig {
            seed: 100 + k,
            ..SynthConfig::default()
        });
        let wav = format!("{out}/clip{k:03}.wav");
        let json = format!("{out}/clip{k:03}.notes.json");
        write_wav(&clip.audio, &wav)?;
        save_notes_json(&clip.notes, &json)?;
        println!(
            "{wav}: {:.2} s, {} notes, pitches {:?}",
            clip.audio.duration_s(),
            clip.notes.len(),
            clip.notes
                .iter()
                .map(|n| n.pitch_midi as i32)
                .collect::<Vec<_>>()
        );
    }
    println!("\nwrote dataset to {out}/");
    Ok(())
}
