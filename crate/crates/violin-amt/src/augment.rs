//! Randomized augmentation effects chain.
//!
//! One chain realization is: pitch shift -> gain boost -> band-pass ->
//! band-pass -> reverb. Parameters are sampled once per realization from a
//! seeded stream; applying the same [`ChainParams`] twice gives bit-identical
//! output. The pitch-shift stage rescales note annotations so supervision
//! stays exact.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::{interpolate_at_ratio, AudioClip};
use crate::note::{NoteEvent, NoteList};
use crate::rng;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("band-pass center {fc} Hz outside (0, {nyquist}) for sample rate {sr}")]
    CenterOutOfRange { fc: f64, nyquist: f64, sr: u32 },
    #[error("band-pass Q must be positive, got {0}")]
    NonPositiveQ(f64),
}

/// Sampling ranges and fixed settings for the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    pub pitch_range_semitones: [f64; 2],
    pub gain_db: f64,
    pub bp_fc_range_hz: [f64; 2],
    pub bp_q_range: [f64; 2],
    pub reverb_room_size: f64,
    pub reverb_damping: f64,
    pub reverb_wet: f64,
    pub reverb_dry: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            pitch_range_semitones: [-0.1, 0.1],
            gain_db: 5.0,
            bp_fc_range_hz: [32.0, 4096.0],
            bp_q_range: [0.5, 4.0],
            reverb_room_size: 0.35,
            reverb_damping: 0.5,
            reverb_wet: 0.33,
            reverb_dry: 0.7,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), String> {
        let ordered = |r: &[f64; 2]| r[0] <= r[1];
        if !ordered(&self.pitch_range_semitones) {
            return Err("pitch range bounds out of order".into());
        }
        if !ordered(&self.bp_fc_range_hz) || self.bp_fc_range_hz[0] <= 0.0 {
            return Err("band-pass center range must be positive and ordered".into());
        }
        if !ordered(&self.bp_q_range) || self.bp_q_range[0] <= 0.0 {
            return Err("Q range must be positive and ordered".into());
        }
        for (name, v) in [
            ("room_size", self.reverb_room_size),
            ("damping", self.reverb_damping),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("reverb {name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// One sampled realization of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub pitch_semitones: f64,
    pub gain_db: f64,
    pub bp1_fc: f64,
    pub bp1_q: f64,
    pub bp2_fc: f64,
    pub bp2_q: f64,
    pub reverb_room_size: f64,
    pub reverb_damping: f64,
    pub reverb_wet: f64,
    pub reverb_dry: f64,
    pub seed: u64,
}

/// Draws one [`ChainParams`] from the seed. Pitch, the two centers, and the
/// two Qs are uniform over their config ranges; gain and reverb settings are
/// copied verbatim.
pub fn sample_chain_params(seed: u64, cfg: &AugmentConfig) -> ChainParams {
    let mut rng = rng::seeded(seed);
    let u = |rng: &mut _, r: &[f64; 2]| rng::uniform_f64(rng, r[0], r[1]);
    ChainParams {
        pitch_semitones: u(&mut rng, &cfg.pitch_range_semitones),
        gain_db: cfg.gain_db,
        bp1_fc: u(&mut rng, &cfg.bp_fc_range_hz),
        bp1_q: u(&mut rng, &cfg.bp_q_range),
        bp2_fc: u(&mut rng, &cfg.bp_fc_range_hz),
        bp2_q: u(&mut rng, &cfg.bp_q_range),
        reverb_room_size: cfg.reverb_room_size,
        reverb_damping: cfg.reverb_damping,
        reverb_wet: cfg.reverb_wet,
        reverb_dry: cfg.reverb_dry,
        seed,
    }
}

/// Same, but consuming draws from an existing stream; the `seed` field
/// records a fresh sub-seed drawn from that stream.
pub fn sample_chain_params_from(rng: &mut impl RngCore, cfg: &AugmentConfig) -> ChainParams {
    sample_chain_params(rng.next_u64(), cfg)
}

/// Multiplies every sample by `10^(g/20)`. No clamping; the WAV writer
/// clamps at quantization time.
pub fn apply_gain_db(clip: &AudioClip, gain_db: f64) -> AudioClip {
    assert!(gain_db.is_finite());
    let k = 10f64.powf(gain_db / 20.0) as f32;
    AudioClip::new(
        clip.samples.iter().map(|&s| s * k).collect(),
        clip.sample_rate,
    )
}

/// Normalized biquad coefficients (`a0` divided out).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    /// Magnitude of the transfer function at frequency `f` Hz.
    pub fn magnitude_at(&self, f: f64, sr: u32) -> f64 {
        let w = std::f64::consts::TAU * f / sr as f64;
        let (c1, s1) = (w.cos(), w.sin());
        let (c2, s2) = ((2.0 * w).cos(), (2.0 * w).sin());
        // H(e^{jw}) = (b0 + b1 e^{-jw} + b2 e^{-2jw}) / (1 + a1 e^{-jw} + a2 e^{-2jw})
        let num_re = self.b0 + self.b1 * c1 + self.b2 * c2;
        let num_im = -self.b1 * s1 - self.b2 * s2;
        let den_re = 1.0 + self.a1 * c1 + self.a2 * c2;
        let den_im = -self.a1 * s1 - self.a2 * s2;
        (num_re.hypot(num_im)) / (den_re.hypot(den_im))
    }
}

/// Constant-0dB-peak band-pass design: `w0 = 2*pi*fc/sr`,
/// `alpha = sin(w0)/(2q)`, `b = (alpha, 0, -alpha)`,
/// `a = (1+alpha, -2cos(w0), 1-alpha)`, all divided by `a0`.
pub fn biquad_bandpass_coeffs(fc: f64, q: f64, sr: u32) -> Result<BiquadCoeffs, DspError> {
    let nyquist = sr as f64 / 2.0;
    if !(fc > 0.0 && fc < nyquist) {
        return Err(DspError::CenterOutOfRange { fc, nyquist, sr });
    }
    if q <= 0.0 {
        return Err(DspError::NonPositiveQ(q));
    }
    let w0 = std::f64::consts::TAU * fc / sr as f64;
    let alpha = w0.sin() / (2.0 * q);
    let a0 = 1.0 + alpha;
    let b0 = alpha / a0;
    Ok(BiquadCoeffs {
        b0,
        b1: 0.0,
        b2: -b0,
        a1: -2.0 * w0.cos() / a0,
        a2: (1.0 - alpha) / a0,
    })
}

/// Direct-form II transposed recursion with zero initial state.
pub fn apply_biquad(clip: &AudioClip, c: &BiquadCoeffs) -> AudioClip {
    let mut s1 = 0.0f64;
    let mut s2 = 0.0f64;
    let out = clip
        .samples
        .iter()
        .map(|&xf| {
            let x = xf as f64;
            let y = c.b0 * x + s1;
            s1 = c.b1 * x - c.a1 * y + s2;
            s2 = c.b2 * x - c.a2 * y;
            y as f32
        })
        .collect();
    AudioClip::new(out, clip.sample_rate)
}

/// Pitch shift by resampled playback: the signal is read at rate
/// `r = 2^(s/12)` while keeping the nominal sample rate, so pitch multiplies
/// by `r` and duration divides by `r`. Note annotations are rescaled to
/// match: times divided by `r`, pitches shifted by `s` semitones.
pub fn pitch_shift_resample(
    clip: &AudioClip,
    semitones: f64,
    notes: Option<&NoteList>,
) -> (AudioClip, Option<NoteList>) {
    assert!(
        semitones.abs() <= 1.0,
        "pitch shift limited to one semitone, got {semitones}"
    );
    let rate = (semitones / 12.0).exp2();
    let shifted = if semitones == 0.0 {
        clip.clone()
    } else {
        let out_len = (clip.samples.len() as f64 / rate).round() as usize;
        AudioClip::new(
            interpolate_at_ratio(&clip.samples, rate, out_len),
            clip.sample_rate,
        )
    };
    let notes = notes.map(|list| {
        NoteList::from_events(
            list.iter()
                .map(|n| NoteEvent {
                    onset_s: n.onset_s / rate,
                    offset_s: n.offset_s / rate,
                    pitch_midi: n.pitch_midi + semitones,
                    velocity: n.velocity,
                })
                .collect(),
        )
    });
    (shifted, notes)
}

// Classic public-domain reverb tuning: delay lengths are in samples at
// 44.1 kHz and get rescaled to the clip rate.
const COMB_DELAYS_44K: [usize; 8] = [1116, 1188, 1277, 1356, 1422, 1491, 1557, 1617];
const ALLPASS_DELAYS_44K: [usize; 4] = [556, 441, 341, 225];
const ALLPASS_FEEDBACK: f64 = 0.5;
const ROOM_SCALE: f64 = 0.28;
const ROOM_OFFSET: f64 = 0.7;
const DAMP_SCALE: f64 = 0.4;
const INPUT_GAIN: f64 = 0.015;

struct Comb {
    buffer: Vec<f64>,
    idx: usize,
    feedback: f64,
    damp1: f64,
    damp2: f64,
    store: f64,
}

impl Comb {
    fn new(len: usize, feedback: f64, damping: f64) -> Self {
        Self {
            buffer: vec![0.0; len.max(1)],
            idx: 0,
            feedback,
            damp1: damping,
            damp2: 1.0 - damping,
            store: 0.0,
        }
    }

    fn process(&mut self, input: f64) -> f64 {
        let out = self.buffer[self.idx];
        self.store = out * self.damp2 + self.store * self.damp1;
        self.buffer[self.idx] = input + self.store * self.feedback;
        self.idx = (self.idx + 1) % self.buffer.len();
        out
    }
}

struct AllPass {
    buffer: Vec<f64>,
    idx: usize,
}

impl AllPass {
    fn new(len: usize) -> Self {
        Self {
            buffer: vec![0.0; len.max(1)],
            idx: 0,
        }
    }

    fn process(&mut self, input: f64) -> f64 {
        let bufout = self.buffer[self.idx];
        self.buffer[self.idx] = input + bufout * ALLPASS_FEEDBACK;
        self.idx = (self.idx + 1) % self.buffer.len();
        bufout - input
    }
}

/// Schroeder reverberator: 8 parallel feedback combs (feedback
/// `0.28*room_size + 0.7`, damp `0.4*damping`) into 4 series all-passes,
/// mixed as `dry*input + wet*reverb`. Output length equals input length; the
/// tail past the clip end is dropped.
pub fn reverb_freeverb(
    clip: &AudioClip,
    room_size: f64,
    damping: f64,
    wet: f64,
    dry: f64,
) -> AudioClip {
    assert!((0.0..=1.0).contains(&room_size), "room_size in [0,1]");
    assert!((0.0..=1.0).contains(&damping), "damping in [0,1]");
    let sr_ratio = clip.sample_rate as f64 / 44100.0;
    let feedback = ROOM_SCALE * room_size + ROOM_OFFSET;
    let damp = DAMP_SCALE * damping;
    let mut combs: Vec<Comb> = COMB_DELAYS_44K
        .iter()
        .map(|&d| Comb::new((d as f64 * sr_ratio).round() as usize, feedback, damp))
        .collect();
    let mut allpasses: Vec<AllPass> = ALLPASS_DELAYS_44K
        .iter()
        .map(|&d| AllPass::new((d as f64 * sr_ratio).round() as usize))
        .collect();

    let out = clip
        .samples
        .iter()
        .map(|&xf| {
            let x = xf as f64;
            let input = x * INPUT_GAIN;
            let mut wet_sample = combs.iter_mut().map(|c| c.process(input)).sum::<f64>();
            for ap in allpasses.iter_mut() {
                wet_sample = ap.process(wet_sample);
            }
            (dry * x + wet * wet_sample) as f32
        })
        .collect();
    AudioClip::new(out, clip.sample_rate)
}

/// Runs the full chain in listing order. Only the pitch-shift stage touches
/// the notes; the note count is preserved.
pub fn apply_chain(
    clip: &AudioClip,
    notes: &NoteList,
    p: &ChainParams,
) -> Result<(AudioClip, NoteList), DspError> {
    let (audio, shifted) = pitch_shift_resample(clip, p.pitch_semitones, Some(notes));
    let notes_out = shifted.expect("notes were passed in");
    let audio = apply_gain_db(&audio, p.gain_db);
    let bp1 = biquad_bandpass_coeffs(p.bp1_fc, p.bp1_q, audio.sample_rate)?;
    let audio = apply_biquad(&audio, &bp1);
    let bp2 = biquad_bandpass_coeffs(p.bp2_fc, p.bp2_q, audio.sample_rate)?;
    let audio = apply_biquad(&audio, &bp2);
    let audio = reverb_freeverb(
        &audio,
        p.reverb_room_size,
        p.reverb_damping,
        p.reverb_wet,
        p.reverb_dry,
    );
    Ok((audio, notes_out))
}
