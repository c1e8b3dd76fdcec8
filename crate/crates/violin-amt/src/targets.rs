//! Frame-wise training targets and sub-frame note decoding.
//!
//! Notes are encoded as four `T x P` matrices (onset, offset, frame,
//! velocity) on a fixed frame grid, and decoded back to notes with timing
//! precision well below the frame period.
//!
//! # Why the peak refinement is exact
//!
//! Onset/offset targets are triangles `g(t) = max(0, 1 - |t - t*|/w)` around
//! the true event time `t*`. Let frame `i` be the sampled peak, `h` the frame
//! period, and `t* = t_i + d` with `|d| <= h/2`. Sampling the triangle at the
//! three frames around the peak (for `w >= 1.5 h`, so all three samples sit
//! on the triangle) gives
//!
//! ```text
//! A = g(t_i - h) = 1 - (h + d)/w
//! B = g(t_i)     = 1 - |d|/w
//! C = g(t_i + h) = 1 - (h - d)/w
//! ```
//!
//! so `C - A = 2d/w` regardless of sign, while the difference against the
//! *far* neighbor is exactly `h/w`: for `d >= 0` (i.e. `C >= A`) this is
//! `B - A`, otherwise `B - C`. Hence
//!
//! ```text
//! d = h * (C - A) / (2 * (B - A))   if C >= A
//! d = h * (C - A) / (2 * (B - C))   otherwise
//! ```
//!
//! recovers `d` exactly, and because only differences and their ratio enter,
//! the estimate is invariant to positive scaling of `(A, B, C)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat::Mat;
use crate::note::{NoteEvent, NoteList};

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("{} note(s) outside pitch bins [{lo}, {hi}]: MIDI {pitches:?}", pitches.len())]
    PitchOutOfRange {
        lo: i32,
        hi: i32,
        pitches: Vec<f64>,
    },
}

/// Decoding thresholds and the target half-width shared with encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeConfig {
    pub onset_threshold: f32,
    pub offset_threshold: f32,
    pub frame_threshold: f32,
    pub min_duration_s: f64,
    pub target_halfwidth_s: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            onset_threshold: 0.3,
            offset_threshold: 0.3,
            frame_threshold: 0.1,
            min_duration_s: 0.03,
            target_halfwidth_s: 0.05,
        }
    }
}

/// Four `T x P` activation matrices in `[0, 1]`. Bin `p` holds MIDI pitch
/// `pitch_lo + p`; notes are assigned to the nearest integer pitch.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameHeads {
    pub onset: Mat<f32>,
    pub offset: Mat<f32>,
    pub frame: Mat<f32>,
    pub velocity: Mat<f32>,
    pub frame_rate: f64,
    pub pitch_lo: i32,
}

pub const DEFAULT_PITCH_LO: i32 = 21;
pub const DEFAULT_PITCH_BINS: usize = 88;

impl FrameHeads {
    pub fn zeros(frames: usize, pitch_bins: usize, frame_rate: f64, pitch_lo: i32) -> Self {
        Self {
            onset: Mat::zeros(frames, pitch_bins),
            offset: Mat::zeros(frames, pitch_bins),
            frame: Mat::zeros(frames, pitch_bins),
            velocity: Mat::zeros(frames, pitch_bins),
            frame_rate,
            pitch_lo,
        }
    }

    pub fn frames(&self) -> usize {
        self.onset.rows()
    }

    pub fn pitch_bins(&self) -> usize {
        self.onset.cols()
    }
}

/// Rasterizes a note list onto the frame grid. Onset/offset heads get
/// triangular targets of half-width `cfg.target_halfwidth_s`; the frame head
/// is 1 while a note sounds (`onset <= t < offset`); velocity carries the
/// note's velocity wherever its onset triangle is positive. Overlapping
/// contributions combine by elementwise max.
pub fn encode_targets(
    notes: &NoteList,
    frames: usize,
    cfg: &DecodeConfig,
    frame_rate: f64,
    pitch_lo: i32,
    pitch_bins: usize,
) -> Result<FrameHeads, TargetError> {
    let hi = pitch_lo + pitch_bins as i32 - 1;
    let offending: Vec<f64> = notes
        .iter()
        .filter(|n| {
            let p = n.pitch_midi.round() as i32;
            p < pitch_lo || p > hi
        })
        .map(|n| n.pitch_midi)
        .collect();
    if !offending.is_empty() {
        return Err(TargetError::PitchOutOfRange {
            lo: pitch_lo,
            hi,
            pitches: offending,
        });
    }

    let mut heads = FrameHeads::zeros(frames, pitch_bins, frame_rate, pitch_lo);
    if frames == 0 {
        return Ok(heads);
    }
    let h = 1.0 / frame_rate;
    let w = cfg.target_halfwidth_s;
    debug_assert!(w >= h, "target half-width below one frame period");

    // frames whose center lies strictly inside the triangle around t_event
    let triangle_frames = |t_event: f64| {
        let lo = ((t_event - w) / h).ceil().max(0.0) as usize;
        let hi = (((t_event + w) / h).floor().max(0.0) as usize).min(frames - 1);
        lo..=hi
    };

    for n in notes.iter() {
        let bin = (n.pitch_midi.round() as i32 - pitch_lo) as usize;
        for (mat, t_event) in [(&mut heads.onset, n.onset_s), (&mut heads.offset, n.offset_s)] {
            for i in triangle_frames(t_event) {
                let g = (1.0 - (i as f64 * h - t_event).abs() / w).max(0.0) as f32;
                if g > mat.get(i, bin) {
                    mat.set(i, bin, g);
                }
            }
        }
        // velocity rides on the onset triangle support
        for i in triangle_frames(n.onset_s) {
            if 1.0 - (i as f64 * h - n.onset_s).abs() / w > 0.0 {
                let v = heads.velocity.get(i, bin).max(n.velocity as f32);
                heads.velocity.set(i, bin, v);
            }
        }
        let first = (n.onset_s / h).ceil() as usize;
        let last_excl = (n.offset_s / h).ceil() as usize; // t < offset
        for i in first..last_excl.min(frames) {
            heads.frame.set(i, bin, 1.0);
        }
    }
    Ok(heads)
}

/// Sub-frame peak interpolation; see the module docs for the derivation.
/// `a`, `b`, `c` are the activations at frames `i-1`, `i`, `i+1` and `b`
/// must be the local max. Returns the offset in seconds from frame `i`,
/// clamped to `[-h/2, h/2]`.
pub fn refine_peak(a: f64, b: f64, c: f64, h: f64) -> f64 {
    debug_assert!(b >= a && b >= c && b > 0.0, "caller guarantees a local max");
    let denom = if c >= a { b - a } else { b - c };
    if denom <= 1e-9 {
        return 0.0;
    }
    (h * (c - a) / (2.0 * denom)).clamp(-h / 2.0, h / 2.0)
}

/// Local maxima with ties broken toward the earlier frame; values outside
/// the matrix count as 0.
fn local_peaks(col: &[f32], threshold: f32) -> Vec<usize> {
    let t = col.len();
    let at = |i: isize| -> f32 {
        if i < 0 || i >= t as isize {
            0.0
        } else {
            col[i as usize]
        }
    };
    (0..t as isize)
        .filter(|&i| {
            let v = at(i);
            v >= threshold && v > at(i - 1) && v >= at(i + 1)
        })
        .map(|i| i as usize)
        .collect()
}

fn refined_time(col: &[f32], i: usize, h: f64) -> f64 {
    let t = col.len();
    let a = if i > 0 { col[i - 1] as f64 } else { 0.0 };
    let b = col[i] as f64;
    let c = if i + 1 < t { col[i + 1] as f64 } else { 0.0 };
    i as f64 * h + refine_peak(a, b, c, h)
}

/// Decodes the four heads back to notes. Per pitch bin: onset candidates are
/// refined local maxima of the onset head at or above `onset_threshold`;
/// each note ends at the earliest of (a) the next refined offset-head peak,
/// (b) the first frame where the frame head drops below `frame_threshold`,
/// (c) the next onset candidate, (d) the clip end. Notes shorter than
/// `min_duration_s` are dropped.
pub fn decode_notes(heads: &FrameHeads, cfg: &DecodeConfig) -> NoteList {
    let t_frames = heads.frames();
    let h = 1.0 / heads.frame_rate;
    let clip_end = t_frames as f64 * h;
    let mut out = Vec::new();

    let mut onset_col = vec![0.0f32; t_frames];
    let mut offset_col = vec![0.0f32; t_frames];
    for p in 0..heads.pitch_bins() {
        for i in 0..t_frames {
            onset_col[i] = heads.onset.get(i, p);
            offset_col[i] = heads.offset.get(i, p);
        }
        let onsets = local_peaks(&onset_col, cfg.onset_threshold);
        if onsets.is_empty() {
            continue;
        }
        let offset_peaks = local_peaks(&offset_col, cfg.offset_threshold);

        for (k, &i) in onsets.iter().enumerate() {
            let onset_time = refined_time(&onset_col, i, h);

            // (a) first refined offset peak strictly after the onset frame
            let by_offset_head = offset_peaks
                .iter()
                .find(|&&j| j > i)
                .map(|&j| refined_time(&offset_col, j, h));
            // (b) first frame after the onset frame where the roll goes quiet
            let by_frame_head = ((i + 1)..t_frames)
                .find(|&j| heads.frame.get(j, p) < cfg.frame_threshold)
                .map(|j| j as f64 * h);
            // (c) the next onset candidate
            let by_next_onset = onsets
                .get(k + 1)
                .map(|&j| refined_time(&onset_col, j, h));

            let mut offset_time = clip_end;
            for cand in [by_offset_head, by_frame_head, by_next_onset].into_iter().flatten() {
                if cand < offset_time {
                    offset_time = cand;
                }
            }

            if offset_time - onset_time < cfg.min_duration_s {
                continue;
            }
            out.push(NoteEvent {
                onset_s: onset_time.max(0.0),
                offset_s: offset_time,
                pitch_midi: (heads.pitch_lo + p as i32) as f64,
                velocity: (heads.velocity.get(i, p) as f64).clamp(0.0, 1.0),
            });
        }
    }
    NoteList::from_events(out)
}
