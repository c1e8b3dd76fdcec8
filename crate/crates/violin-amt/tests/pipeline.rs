//! Signal-path checks measured with the independent spectral oracles in
//! `support`: resampling, pitch shifting, filtering, and WAV round trips.

mod support;

use proptest::prelude::*;
use support::{dominant_freq_hz, tone, tone_to_artifact_db};
use violin_amt::{
    apply_biquad, apply_chain, biquad_bandpass_coeffs, pitch_shift_resample, read_wav, resample,
    sample_chain_params, write_wav, AudioClip, AugmentConfig, NoteEvent, NoteList,
};

#[test]
fn resample_preserves_tone_frequency_44100_to_16000() {
    let clip = tone(440.0, 44100, 1.0, 0.5);
    let out = resample(&clip, 16000);
    assert_eq!(out.samples.len(), 16000);
    let peak = dominant_freq_hz(&out);
    assert!((peak - 440.0).abs() < 0.1, "peak at {peak} Hz");
    let ratio = tone_to_artifact_db(&out);
    assert!(ratio >= 60.0, "tone-to-artifact ratio {ratio:.1} dB");
}

#[test]
fn resample_upsampling_is_clean_too() {
    let clip = tone(1234.0, 16000, 1.0, 0.5);
    let out = resample(&clip, 44100);
    let peak = dominant_freq_hz(&out);
    assert!((peak - 1234.0).abs() < 0.1, "peak at {peak} Hz");
    let ratio = tone_to_artifact_db(&out);
    assert!(ratio >= 60.0, "tone-to-artifact ratio {ratio:.1} dB");
}

#[test]
fn resample_near_edge_of_guaranteed_band() {
    // 0.4 * min Nyquist for 44100 -> 16000 is 3200 Hz
    let clip = tone(3150.0, 44100, 1.0, 0.5);
    let out = resample(&clip, 16000);
    let peak = dominant_freq_hz(&out);
    assert!((peak - 3150.0).abs() < 0.1, "peak at {peak} Hz");
    assert!(tone_to_artifact_db(&out) >= 60.0);
}

#[test]
fn read_wav_with_target_rate_resamples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tone8k.wav");
    write_wav(&tone(440.0, 8000, 1.0, 0.5), &path).unwrap();
    let clip = read_wav(&path, Some(16000)).unwrap();
    assert_eq!(clip.sample_rate, 16000);
    assert!((clip.samples.len() as i64 - 16000).abs() <= 1);
    let peak = dominant_freq_hz(&clip);
    assert!((peak - 440.0).abs() < 0.5, "peak at {peak} Hz");
}

#[test]
fn resample_is_linear() {
    let a = tone(440.0, 16000, 0.25, 0.4);
    let b = tone(1000.0, 16000, 0.25, 0.3);
    let mix = AudioClip::new(
        a.samples
            .iter()
            .zip(&b.samples)
            .map(|(&x, &y)| 0.7 * x + 0.2 * y)
            .collect(),
        16000,
    );
    let ra = resample(&a, 12000);
    let rb = resample(&b, 12000);
    let rmix = resample(&mix, 12000);
    for i in 0..rmix.samples.len() {
        let lin = 0.7 * ra.samples[i] + 0.2 * rb.samples[i];
        assert!((rmix.samples[i] - lin).abs() < 1e-6, "sample {i}");
    }
}

#[test]
fn pitch_shift_frequency_and_label_rescaling() {
    let clip = tone(440.0, 16000, 1.0, 0.5);
    let notes = NoteList::from_events(vec![NoteEvent::new(1.0 - 0.25, 1.0, 69.0, 0.8).unwrap()]);
    let (shifted, shifted_notes) = pitch_shift_resample(&clip, 0.1, Some(&notes));
    let peak = dominant_freq_hz(&shifted);
    let expect = 440.0 * (0.1f64 / 12.0).exp2();
    assert!((expect - 442.55).abs() < 0.01);
    assert!((peak - expect).abs() < 0.2, "peak at {peak} Hz");
    let n = shifted_notes.unwrap();
    let rate = (0.1f64 / 12.0).exp2();
    assert!((n.notes()[0].offset_s - 1.0 / rate).abs() < 1e-9);
}

#[test]
fn pitch_shift_keeps_labels_aligned_with_audio() {
    // tone burst starting at exactly 1.0 s with an instant attack
    let sr = 16000u32;
    let mut samples = vec![0.0f32; 2 * sr as usize];
    for i in sr as usize..(sr as usize * 3 / 2) {
        samples[i] = (std::f64::consts::TAU * 440.0 * i as f64 / sr as f64).sin() as f32 * 0.7;
    }
    let clip = AudioClip::new(samples, sr);
    let notes = NoteList::from_events(vec![NoteEvent::new(1.0, 1.5, 69.0, 0.8).unwrap()]);

    let (shifted, shifted_notes) = pitch_shift_resample(&clip, 0.1, Some(&notes));
    let annotated = shifted_notes.unwrap().notes()[0].onset_s;
    assert!((annotated - 0.99424).abs() < 1e-4);

    // locate the audio onset: first 1 ms hop where local RMS crosses half max
    let hop = sr as usize / 1000;
    let win = 4 * hop;
    let rms: Vec<f64> = (0..(shifted.samples.len() - win) / hop)
        .map(|k| {
            let s = &shifted.samples[k * hop..k * hop + win];
            (s.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / win as f64).sqrt()
        })
        .collect();
    let max_rms = rms.iter().cloned().fold(0.0, f64::max);
    let first = rms.iter().position(|&v| v >= 0.5 * max_rms).unwrap();
    // the window reaches half-max RMS roughly half a window after signal start
    let measured_onset = first as f64 * hop as f64 / sr as f64;
    let expected_window_lag = 0.5 * win as f64 / sr as f64;
    let err = measured_onset - (annotated - expected_window_lag);
    assert!(err.abs() < 2e-3, "onset mismatch {err} s");
}

#[test]
fn bandpass_measured_gain_matches_transfer_function() {
    let sr = 16000u32;
    for (fc, q) in [(250.0, 0.8), (1000.0, 2.0), (3300.0, 4.0)] {
        let coeffs = biquad_bandpass_coeffs(fc, q, sr).unwrap();
        for probe in [fc / 2.0, fc, fc * 1.5] {
            let input = tone(probe, sr, 2.0, 0.25);
            let out = apply_biquad(&input, &coeffs);
            let skip = sr as usize; // settle 1 s
            let meas = projected_amplitude(&out.samples[skip..], probe, sr) / 0.25;
            let analytic = coeffs.magnitude_at(probe, sr);
            let err_db = 20.0 * (meas / analytic).log10();
            assert!(
                err_db.abs() < 0.1,
                "fc {fc} q {q} probe {probe}: measured {meas}, analytic {analytic}"
            );
        }
    }
}

/// Amplitude of the `freq` component by Hann-windowed projection.
fn projected_amplitude(samples: &[f32], freq: f64, sr: u32) -> f64 {
    let n = samples.len();
    let w0 = std::f64::consts::TAU * freq / sr as f64;
    let mut re = 0.0f64;
    let mut im = 0.0f64;
    let mut wsum = 0.0f64;
    for i in 0..n {
        let w = 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos());
        wsum += w;
        let v = samples[i] as f64 * w;
        re += v * (w0 * i as f64).cos();
        im -= v * (w0 * i as f64).sin();
    }
    2.0 * re.hypot(im) / wsum
}

#[test]
fn synthesized_note_has_its_fundamental_at_pitch() {
    // pin the generator to vibrato-free A4 notes and check the rendered
    // fundamental with the spectral oracle
    let clip = violin_amt::synth_clip(&violin_amt::SynthConfig {
        seed: 11,
        pitch_range_midi: [69, 69],
        vibrato_prob: 0.0,
        duration_range_s: [0.8, 1.0],
        ..violin_amt::SynthConfig::default()
    });
    let note = clip.notes.notes()[0];
    assert_eq!(note.pitch_midi, 69.0);
    let sr = clip.audio.sample_rate;
    let start = ((note.onset_s + 0.05) * sr as f64) as usize;
    let end = ((note.offset_s - 0.05) * sr as f64) as usize;
    let segment = AudioClip::new(clip.audio.samples[start..end].to_vec(), sr);
    let peak = dominant_freq_hz(&segment);
    assert!((peak - 440.0).abs() < 1.0, "fundamental at {peak} Hz");
}

#[test]
fn chain_applies_all_stages() {
    let clip = tone(440.0, 16000, 0.5, 0.3);
    let notes = NoteList::from_events(vec![NoteEvent::new(0.1, 0.4, 69.0, 0.8).unwrap()]);
    let params = sample_chain_params(3, &AugmentConfig::default());
    let (out, notes_out) = apply_chain(&clip, &notes, &params).unwrap();
    assert_eq!(notes_out.len(), 1);
    // duration scaled by the sampled pitch rate
    let rate = (params.pitch_semitones / 12.0).exp2();
    let expect_len = (clip.samples.len() as f64 / rate).round() as usize;
    assert_eq!(out.samples.len(), expect_len);
    assert!((notes_out.notes()[0].pitch_midi - (69.0 + params.pitch_semitones)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wav_round_trip_within_one_step(samples in proptest::collection::vec(-1.2f32..1.2, 0..600)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let clip = AudioClip::new(samples.clone(), 16000);
        write_wav(&clip, &path).unwrap();
        let back = read_wav(&path, None).unwrap();
        prop_assert_eq!(back.samples.len(), samples.len());
        for (orig, read) in samples.iter().zip(&back.samples) {
            let clamped = orig.clamp(-1.0, 32767.0 / 32768.0);
            prop_assert!((read - clamped).abs() <= 1.0 / 32768.0 + 1e-9);
        }
    }

    #[test]
    fn resample_length_formula_holds(n in 0usize..4000, old_sr in 1000u32..48000, new_sr in 1000u32..48000) {
        let clip = AudioClip::new(vec![0.0; n], old_sr);
        let out = resample(&clip, new_sr);
        let expect = ((n as u128 * new_sr as u128 * 2 + old_sr as u128) / (2 * old_sr as u128)) as usize;
        prop_assert_eq!(out.samples.len(), expect);
    }
}
