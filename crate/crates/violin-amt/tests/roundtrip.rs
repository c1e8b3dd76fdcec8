//! Encode/decode round-trip properties and decoder behavior under
//! threshold changes.

mod support;

use proptest::prelude::*;
use rand_core::SeedableRng;
use support::roundtrippable_notes;
use violin_amt::{decode_notes, encode_targets, evaluate, refine_peak, DecodeConfig, EvalTolerances};

const FRAME_RATE: f64 = 100.0;

#[test]
fn random_note_lists_round_trip_exactly() {
    let cfg = DecodeConfig::default();
    let span = 6.0;
    let frames = (span * FRAME_RATE) as usize;
    for seed in 0..40u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let notes = roundtrippable_notes(&mut rng, span, cfg.target_halfwidth_s, cfg.min_duration_s);
        let heads = encode_targets(&notes, frames, &cfg, FRAME_RATE, 21, 88).unwrap();
        let decoded = decode_notes(&heads, &cfg);
        assert_eq!(decoded.len(), notes.len(), "seed {seed}");
        for (orig, dec) in notes.iter().zip(decoded.iter()) {
            assert!(
                (orig.onset_s - dec.onset_s).abs() <= 1e-3,
                "seed {seed}: onset {} vs {}",
                orig.onset_s,
                dec.onset_s
            );
            assert!(
                (orig.offset_s - dec.offset_s).abs() <= 1e-3,
                "seed {seed}: offset {} vs {}",
                orig.offset_s,
                dec.offset_s
            );
            assert_eq!(orig.pitch_midi, dec.pitch_midi, "seed {seed}");
            assert!((orig.velocity - dec.velocity).abs() < 1e-6, "seed {seed}");
        }
        let report = evaluate(&decoded, &notes, &EvalTolerances::default());
        assert_eq!(report.f1, 1.0, "seed {seed}");
    }
}

#[test]
fn raising_onset_threshold_never_adds_notes() {
    let span = 6.0;
    let frames = (span * FRAME_RATE) as usize;
    let base = DecodeConfig::default();
    for seed in 100..120u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let notes = roundtrippable_notes(&mut rng, span, base.target_halfwidth_s, base.min_duration_s);
        let heads = encode_targets(&notes, frames, &base, FRAME_RATE, 21, 88).unwrap();
        let mut prev = usize::MAX;
        for threshold in [0.05f32, 0.2, 0.4, 0.6, 0.8, 0.95] {
            let cfg = DecodeConfig {
                onset_threshold: threshold,
                ..base.clone()
            };
            let count = decode_notes(&heads, &cfg).len();
            assert!(count <= prev, "seed {seed}: {count} notes at threshold {threshold}");
            prev = count;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn refine_peak_scale_invariant(delta in -0.005f64..0.005, scale in 0.01f64..10.0) {
        let h = 0.01;
        let w = 0.05;
        let a = 1.0 - (h + delta) / w;
        let b = 1.0 - delta.abs() / w;
        let c = 1.0 - (h - delta) / w;
        let d1 = refine_peak(a, b, c, h);
        let d2 = refine_peak(scale * a, scale * b, scale * c, h);
        prop_assert!((d1 - delta).abs() < 1e-9);
        prop_assert!((d1 - d2).abs() < 1e-9);
    }

    #[test]
    fn decoded_notes_satisfy_invariants(seed in 0u64..500) {
        let cfg = DecodeConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let notes = roundtrippable_notes(&mut rng, 4.0, cfg.target_halfwidth_s, cfg.min_duration_s);
        let heads = encode_targets(&notes, 400, &cfg, FRAME_RATE, 21, 88).unwrap();
        let decoded = decode_notes(&heads, &cfg);
        for n in decoded.iter() {
            prop_assert!(n.offset_s > n.onset_s);
            prop_assert!((0.0..=127.0).contains(&n.pitch_midi));
            prop_assert!((0.0..=1.0).contains(&n.velocity));
        }
    }
}
