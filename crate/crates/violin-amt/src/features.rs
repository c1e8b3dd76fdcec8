//! Log-mel spectrogram front-end.
//!
//! Frame timing is the contract shared with target encoding and decoding:
//! frame `i` is centered at `i * hop / sr` seconds and a clip of `N` samples
//! yields `floor(N / hop) + 1` frames (reflect-padded, centered framing).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::AudioClip;
use crate::mat::Mat;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("clip sample rate {clip_sr} does not match configured rate {cfg_sr}")]
    SampleRateMismatch { clip_sr: u32, cfg_sr: u32 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed FMAT file: {0}")]
    MalformedFmat(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub sr: u32,
    pub n_fft: usize,
    pub win_length: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub amin: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sr: 16_000,
            n_fft: 2048,
            win_length: 2048,
            hop: 160, // 100 frames/s
            n_mels: 229,
            fmin: 30.0,
            fmax: 8000.0,
            amin: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.hop == 0 || self.hop > self.win_length || self.win_length > self.n_fft {
            return Err("need hop <= win_length <= n_fft with hop > 0".into());
        }
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= self.sr as f64 / 2.0) {
            return Err("need 0 <= fmin < fmax <= sr/2".into());
        }
        if self.n_mels == 0 {
            return Err("n_mels must be at least 1".into());
        }
        if self.amin <= 0.0 {
            return Err("amin must be positive".into());
        }
        Ok(())
    }

    pub fn frame_rate(&self) -> f64 {
        self.sr as f64 / self.hop as f64
    }

    /// Floor of the log-mel output in dB: `10*log10(amin)`.
    pub fn floor_db(&self) -> f32 {
        (10.0 * self.amin.log10()) as f32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    PowerSpectrogram,
    LogMel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Mat<f32>,
    pub frame_rate: f64,
    pub kind: FeatureKind,
}

impl FeatureMatrix {
    pub fn frames(&self) -> usize {
        self.data.rows()
    }

    pub fn bins(&self) -> usize {
        self.data.cols()
    }
}

/// Periodic Hann window; its sample sum is exactly `len / 2`.
fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (1.0 - (std::f64::consts::TAU * n as f64 / len as f64).cos()))
        .collect()
}

/// Reflect padding without repeating the edge sample; degenerate inputs pad
/// with zeros.
fn padded_sample(samples: &[f32], idx: isize) -> f32 {
    let n = samples.len() as isize;
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return samples[0];
    }
    let mut i = idx;
    // fold until inside [0, n)
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return samples[i as usize];
        }
    }
}

/// Magnitude-squared STFT: `T x (n_fft/2 + 1)`.
pub fn stft_power(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureMatrix, FeatureError> {
    if clip.sample_rate != cfg.sr {
        return Err(FeatureError::SampleRateMismatch {
            clip_sr: clip.sample_rate,
            cfg_sr: cfg.sr,
        });
    }
    let n_bins = cfg.n_fft / 2 + 1;
    let frames = clip.samples.len() / cfg.hop + 1;
    let window = hann(cfg.win_length);
    let win_offset = (cfg.n_fft - cfg.win_length) / 2;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(cfg.n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.n_fft];
    let mut out = Mat::zeros(frames, n_bins);

    let half = cfg.n_fft as isize / 2;
    for t in 0..frames {
        let center = (t * cfg.hop) as isize;
        buf.fill(Complex::new(0.0, 0.0));
        for (w_idx, &w) in window.iter().enumerate() {
            let src = center - half + (win_offset + w_idx) as isize;
            buf[win_offset + w_idx] = Complex::new(padded_sample(&clip.samples, src) as f64 * w, 0.0);
        }
        fft.process(&mut buf);
        let row = out.row_mut(t);
        for (k, cell) in row.iter_mut().enumerate() {
            *cell = buf[k].norm_sqr() as f32;
        }
    }
    Ok(FeatureMatrix {
        data: out,
        frame_rate: cfg.frame_rate(),
        kind: FeatureKind::PowerSpectrogram,
    })
}

/// Slaney-style mel scale: linear below 1 kHz, logarithmic above.
pub fn hz_to_mel(f: f64) -> f64 {
    const LOG_STEP: f64 = 27.0;
    if f < 1000.0 {
        3.0 * f / 200.0
    } else {
        15.0 + LOG_STEP * (f / 1000.0).ln() / 6.4f64.ln()
    }
}

pub fn mel_to_hz(mel: f64) -> f64 {
    if mel < 15.0 {
        200.0 * mel / 3.0
    } else {
        1000.0 * (6.4f64.ln() * (mel - 15.0) / 27.0).exp()
    }
}

/// Triangular filterbank, `n_mels x (n_fft/2 + 1)`, area-normalized so each
/// row's continuous peak is `2 / (upper_edge - lower_edge)`.
pub struct MelFilterbank {
    pub weights: Mat<f32>,
    /// Per-row `[start, end)` bin support, for sparse application.
    pub support: Vec<(usize, usize)>,
    /// Center (peak) frequency of each filter in Hz.
    pub centers_hz: Vec<f64>,
}

pub fn mel_filterbank(cfg: &FeatureConfig) -> MelFilterbank {
    let n_bins = cfg.n_fft / 2 + 1;
    let mel_lo = hz_to_mel(cfg.fmin);
    let mel_hi = hz_to_mel(cfg.fmax);
    let edges_hz: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|k| mel_to_hz(mel_lo + (mel_hi - mel_lo) * k as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_hz = cfg.sr as f64 / cfg.n_fft as f64;

    let mut weights = Mat::zeros(cfg.n_mels, n_bins);
    let mut support = Vec::with_capacity(cfg.n_mels);
    let mut centers_hz = Vec::with_capacity(cfg.n_mels);
    for m in 0..cfg.n_mels {
        let (lo, mid, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
        let norm = 2.0 / (hi - lo);
        let mut first = n_bins;
        let mut last = 0;
        let row = weights.row_mut(m);
        for (k, cell) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            let rising = (f - lo) / (mid - lo);
            let falling = (hi - f) / (hi - mid);
            let w = rising.min(falling).max(0.0);
            if w > 0.0 {
                *cell = (w * norm) as f32;
                first = first.min(k);
                last = k + 1;
            }
        }
        support.push(if first < last { (first, last) } else { (0, 0) });
        centers_hz.push(mid);
    }
    MelFilterbank {
        weights,
        support,
        centers_hz,
    }
}

/// `10*log10(max(filterbank . power_frame, amin))` per frame.
pub fn log_mel(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureMatrix, FeatureError> {
    let power = stft_power(clip, cfg)?;
    let fb = mel_filterbank(cfg);
    Ok(log_mel_from_power(&power, &fb, cfg))
}

pub fn log_mel_from_power(
    power: &FeatureMatrix,
    fb: &MelFilterbank,
    cfg: &FeatureConfig,
) -> FeatureMatrix {
    let mut out = Mat::zeros(power.frames(), cfg.n_mels);
    for t in 0..power.frames() {
        let p_row = power.data.row(t);
        let o_row = out.row_mut(t);
        for m in 0..cfg.n_mels {
            let (start, end) = fb.support[m];
            let w_row = fb.weights.row(m);
            let mut acc = 0.0f64;
            for k in start..end {
                acc += w_row[k] as f64 * p_row[k] as f64;
            }
            o_row[m] = (10.0 * acc.max(cfg.amin).log10()) as f32;
        }
    }
    FeatureMatrix {
        data: out,
        frame_rate: power.frame_rate,
        kind: FeatureKind::LogMel,
    }
}

const FMAT_MAGIC: &[u8; 4] = b"FMAT";

/// Binary matrix dump: magic "FMAT", u32 LE rows, u32 LE cols, then
/// `rows*cols` f32 LE values row-major.
pub fn write_fmat(mat: &Mat<f32>, path: impl AsRef<Path>) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let io = |e| FeatureError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(FMAT_MAGIC).map_err(io)?;
    w.write_all(&(mat.rows() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&(mat.cols() as u32).to_le_bytes()).map_err(io)?;
    let mut bytes = Vec::with_capacity(mat.data().len() * 4);
    for &v in mat.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes).map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_fmat(path: impl AsRef<Path>) -> Result<Mat<f32>, FeatureError> {
    let path = path.as_ref();
    let io = |e| FeatureError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(io)?)
        .read_to_end(&mut bytes)
        .map_err(io)?;
    if bytes.len() < 12 || &bytes[0..4] != FMAT_MAGIC {
        return Err(FeatureError::MalformedFmat("bad magic or header".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expect = 12 + rows * cols * 4;
    if bytes.len() != expect {
        return Err(FeatureError::MalformedFmat(format!(
            "expected {expect} bytes for {rows}x{cols}, found {}",
            bytes.len()
        )));
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok(Mat::from_vec(rows, cols, data))
}
