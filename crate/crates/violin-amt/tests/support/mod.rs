//! Shared oracles for integration tests: spectral peak measurement by
//! direct DTFT evaluation, artifact power ratios, and random note-list
//! generators. Everything here is independent of the library's analysis
//! code paths (only `AudioClip`/`NoteList` containers are shared).
#![allow(dead_code)] // each test binary uses its own subset

use rand_core::RngCore;
use violin_amt::{AudioClip, NoteEvent, NoteList};

pub fn tone(freq: f64, sr: u32, secs: f64, amp: f64) -> AudioClip {
    let n = (sr as f64 * secs).round() as usize;
    AudioClip::new(
        (0..n)
            .map(|i| (std::f64::consts::TAU * freq * i as f64 / sr as f64).sin() as f32 * amp as f32)
            .collect(),
        sr,
    )
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos()))
        .collect()
}

/// Windowed DTFT magnitude at an arbitrary frequency, by direct summation.
fn dtft_mag(samples: &[f32], window: &[f64], sr: f64, freq: f64) -> f64 {
    let mut re = 0.0f64;
    let mut im = 0.0f64;
    let w0 = std::f64::consts::TAU * freq / sr;
    for (i, (&s, &w)) in samples.iter().zip(window).enumerate() {
        let phase = w0 * i as f64;
        let v = s as f64 * w;
        re += v * phase.cos();
        im -= v * phase.sin();
    }
    re.hypot(im)
}

/// Frequency of the dominant spectral peak, located by radix-2 FFT argmax
/// and refined by ternary search on the continuous windowed DTFT.
pub fn dominant_freq_hz(clip: &AudioClip) -> f64 {
    let n = clip.samples.len().next_power_of_two() / 2;
    assert!(n >= 64, "clip too short for spectral measurement");
    let samples = &clip.samples[..n];
    let window = hann(n);
    let sr = clip.sample_rate as f64;

    // coarse scan on the FFT grid
    let spectrum = fft_power(samples, &window);
    let peak_bin = spectrum[1..n / 2]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0
        + 1;
    let bin_hz = sr / n as f64;

    // ternary search within +-1 bin of the coarse peak
    let mut lo = (peak_bin as f64 - 1.0) * bin_hz;
    let mut hi = (peak_bin as f64 + 1.0) * bin_hz;
    while hi - lo > 1e-4 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if dtft_mag(samples, &window, sr, m1) < dtft_mag(samples, &window, sr, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    0.5 * (lo + hi)
}

/// Hann-windowed power spectrum via a plain recursive radix-2 FFT.
fn fft_power(samples: &[f32], window: &[f64]) -> Vec<f64> {
    let n = samples.len();
    assert!(n.is_power_of_two());
    let mut re: Vec<f64> = samples
        .iter()
        .zip(window)
        .map(|(&s, &w)| s as f64 * w)
        .collect();
    let mut im = vec![0.0f64; n];
    // iterative Cooley-Tukey, bit-reversed
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -std::f64::consts::TAU / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let (mut cr, mut ci) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let (ur, ui) = (re[i + k], im[i + k]);
                let (vr, vi) = (
                    re[i + k + len / 2] * cr - im[i + k + len / 2] * ci,
                    re[i + k + len / 2] * ci + im[i + k + len / 2] * cr,
                );
                re[i + k] = ur + vr;
                im[i + k] = ui + vi;
                re[i + k + len / 2] = ur - vr;
                im[i + k + len / 2] = ui - vi;
                let (ncr, nci) = (cr * wr - ci * wi, cr * wi + ci * wr);
                cr = ncr;
                ci = nci;
            }
            i += len;
        }
        len <<= 1;
    }
    re.iter().zip(&im).map(|(&r, &i)| r * r + i * i).collect()
}

/// Minimal 4-term Blackman-Harris: -92 dB sidelobes, so measurement-window
/// leakage stays far below the artifact levels being checked.
fn blackman_harris(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = std::f64::consts::TAU * i as f64 / n as f64;
            0.35875 - 0.48829 * x.cos() + 0.14128 * (2.0 * x).cos() - 0.01168 * (3.0 * x).cos()
        })
        .collect()
}

/// Ratio (dB) between the energy near the dominant peak and everything
/// else in the half spectrum.
pub fn tone_to_artifact_db(clip: &AudioClip) -> f64 {
    let n = clip.samples.len().next_power_of_two() / 2;
    let samples = &clip.samples[..n];
    let window = blackman_harris(n);
    let spectrum = fft_power(samples, &window);
    let half = &spectrum[..n / 2];
    let peak_bin = half
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let guard = 8;
    let mut tone_power = 0.0;
    let mut rest = 0.0;
    for (k, &p) in half.iter().enumerate() {
        if (k as i64 - peak_bin as i64).unsigned_abs() as usize <= guard {
            tone_power += p;
        } else {
            rest += p;
        }
    }
    10.0 * (tone_power / rest.max(1e-300)).log10()
}

/// Amplitude of the `freq` component by Hann-windowed complex projection.
/// Exact for a steady sinusoid plus out-of-band content.
pub fn projected_amplitude(samples: &[f32], freq: f64, sr: u32) -> f64 {
    let n = samples.len();
    let w0 = std::f64::consts::TAU * freq / sr as f64;
    let mut re = 0.0f64;
    let mut im = 0.0f64;
    let mut wsum = 0.0f64;
    for (i, &s) in samples.iter().enumerate() {
        let w = 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos());
        wsum += w;
        let v = s as f64 * w;
        re += v * (w0 * i as f64).cos();
        im -= v * (w0 * i as f64).sin();
    }
    2.0 * re.hypot(im) / wsum
}

/// Random note list for matcher stress tests: up to `max_notes` notes, a
/// blend of independent notes and jittered copies of reference notes so
/// tolerance-valid pairs are common.
pub fn random_note_list(
    rng: &mut impl RngCore,
    max_notes: usize,
    base: Option<&NoteList>,
) -> NoteList {
    let u = |rng: &mut dyn RngCore, lo: f64, hi: f64| {
        lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / 9007199254740992.0)
    };
    let n = (rng.next_u64() % (max_notes as u64 + 1)) as usize;
    let mut notes = Vec::with_capacity(n);
    for _ in 0..n {
        let copy_base = base.is_some_and(|b| !b.is_empty() && rng.next_u64() % 2 == 0);
        let event = if copy_base {
            let b = base.unwrap();
            let src = b.notes()[(rng.next_u64() % b.len() as u64) as usize];
            let onset = (src.onset_s + u(rng, -0.08, 0.08)).max(0.0);
            let offset = (src.offset_s + u(rng, -0.3, 0.3)).max(onset + 0.02);
            NoteEvent {
                onset_s: onset,
                offset_s: offset,
                pitch_midi: (src.pitch_midi + u(rng, -0.8, 0.8)).clamp(0.0, 127.0),
                velocity: 0.8,
            }
        } else {
            let onset = u(rng, 0.0, 2.0);
            NoteEvent {
                onset_s: onset,
                offset_s: onset + u(rng, 0.05, 1.0),
                pitch_midi: u(rng, 55.0, 80.0),
                velocity: 0.8,
            }
        };
        notes.push(event);
    }
    NoteList::from_events(notes)
}

/// Random note list satisfying the decode round-trip preconditions:
/// same-pitch notes separated by at least `2w`, durations at least
/// `2 * min_duration`, events well inside `[margin, span - margin]`.
pub fn roundtrippable_notes(
    rng: &mut impl RngCore,
    span_s: f64,
    w: f64,
    min_duration_s: f64,
) -> NoteList {
    let u = |rng: &mut dyn RngCore, lo: f64, hi: f64| {
        lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / 9007199254740992.0)
    };
    let margin = 0.1;
    let n = 1 + (rng.next_u64() % 8) as usize;
    let mut last_offset_per_pitch: std::collections::HashMap<i64, f64> = Default::default();
    let mut notes = Vec::new();
    for _ in 0..n {
        let pitch = 30 + (rng.next_u64() % 60) as i64; // MIDI 30..=89
        let earliest = last_offset_per_pitch
            .get(&pitch)
            .map_or(margin, |&t| t + 2.0 * w + 0.01);
        let onset = earliest + u(rng, 0.0, 0.6);
        let duration = u(rng, 2.0 * min_duration_s + 0.005, 0.8);
        let offset = onset + duration;
        if offset > span_s - margin {
            continue;
        }
        last_offset_per_pitch.insert(pitch, offset);
        notes.push(NoteEvent {
            onset_s: onset,
            offset_s: offset,
            pitch_midi: pitch as f64,
            velocity: u(rng, 0.2, 1.0),
        });
    }
    NoteList::from_events(notes)
}
