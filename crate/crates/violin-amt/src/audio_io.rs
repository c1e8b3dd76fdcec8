//! WAV file I/O and sample-rate conversion.
//!
//! Readers accept 16/24/32-bit integer PCM and 32-bit float RIFF/WAVE files
//! with one or two channels; stereo is mixed to mono by per-sample channel
//! mean. The writer always emits 16-bit PCM mono. Resampling is band-limited
//! windowed-sinc interpolation, evaluated at the exact fractional phase of
//! every output sample.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Mono sample buffer plus its rate. Samples are dimensionless floats with
/// nominal range `[-1, 1]`; nothing clamps until [`write_wav`].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample_rate must be positive");
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

fn io_err(path: &Path, source: std::io::Error) -> AudioError {
    AudioError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a RIFF/WAVE file, mixes to mono, and optionally resamples to
/// `target_sr`.
pub fn read_wav(path: impl AsRef<Path>, target_sr: Option<u32>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    let mut reader = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;
    let clip = decode_wav(&bytes)?;
    match target_sr {
        Some(sr) if sr != clip.sample_rate => Ok(resample(&clip, sr)),
        _ => Ok(clip),
    }
}

fn decode_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    let bad = |msg: &str| AudioError::MalformedHeader(msg.to_string());
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("missing RIFF/WAVE signature"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, sample_rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| bad("chunk size overflow"))?;
        if body_end > bytes.len() {
            return Err(bad("chunk extends past end of file"));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(bad("fmt chunk too short"));
                }
                let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let sample_rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                fmt = Some((format, channels, sample_rate, bits));
            }
            b"data" => data = Some(body),
            _ => {} // skip LIST, fact, etc.
        }
        // chunks are word-aligned
        pos = body_end + (size & 1);
    }

    let (format, channels, sample_rate, bits) = fmt.ok_or_else(|| bad("no fmt chunk"))?;
    let data = data.ok_or_else(|| bad("no data chunk"))?;
    if sample_rate == 0 {
        return Err(bad("zero sample rate"));
    }
    if channels == 0 || channels > 2 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{channels} channels (only mono/stereo supported)"
        )));
    }

    let interleaved: Vec<f32> = match (format, bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32768.0)
            .collect(),
        (1, 24) => data
            .chunks_exact(3)
            .map(|b| {
                let u = (b[2] as u32) << 24 | (b[1] as u32) << 16 | (b[0] as u32) << 8;
                (u as i32 >> 8) as f32 / 8_388_608.0
            })
            .collect(),
        (1, 32) => data
            .chunks_exact(4)
            .map(|b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f32 / 2_147_483_648.0)
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect(),
        (f, b) => {
            return Err(AudioError::UnsupportedEncoding(format!(
                "format code {f} with {b} bits per sample"
            )))
        }
    };

    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(2)
            .map(|fr| 0.5 * (fr[0] + fr[1]))
            .collect()
    };
    Ok(AudioClip::new(samples, sample_rate))
}

/// Writes 16-bit PCM mono. Samples are clamped to `[-1, 32767/32768]` before
/// quantization, so a read-back differs by at most one quantization step.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    let n = clip.samples.len() as u32;
    let data_bytes = n * 2;
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);

    let mut header = Vec::with_capacity(44);
    header.extend_from_slice(b"RIFF");
    header.extend_from_slice(&(36 + data_bytes).to_le_bytes());
    header.extend_from_slice(b"WAVE");
    header.extend_from_slice(b"fmt ");
    header.extend_from_slice(&16u32.to_le_bytes());
    header.extend_from_slice(&1u16.to_le_bytes()); // PCM
    header.extend_from_slice(&1u16.to_le_bytes()); // mono
    header.extend_from_slice(&clip.sample_rate.to_le_bytes());
    header.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    header.extend_from_slice(&2u16.to_le_bytes()); // block align
    header.extend_from_slice(&16u16.to_le_bytes());
    header.extend_from_slice(b"data");
    header.extend_from_slice(&data_bytes.to_le_bytes());
    w.write_all(&header).map_err(|e| io_err(path, e))?;

    let mut pcm = Vec::with_capacity(clip.samples.len() * 2);
    for &s in &clip.samples {
        let clamped = s.clamp(-1.0, 32767.0 / 32768.0);
        let q = (clamped * 32768.0).round() as i16;
        pcm.extend_from_slice(&q.to_le_bytes());
    }
    w.write_all(&pcm).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

const SINC_HALF_TAPS: usize = 16; // 32 taps per output sample

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Band-limited sample-rate conversion. Output length is
/// `round(n * new_sr / old_sr)` exactly; edges are zero-padded.
pub fn resample(clip: &AudioClip, new_sr: u32) -> AudioClip {
    assert!(new_sr > 0, "new_sr must be positive");
    if new_sr == clip.sample_rate {
        return clip.clone();
    }
    let ratio = clip.sample_rate as f64 / new_sr as f64;
    let out_len = resampled_len(clip.samples.len(), clip.sample_rate, new_sr);
    AudioClip::new(
        interpolate_at_ratio(&clip.samples, ratio, out_len),
        new_sr,
    )
}

/// Exact integer evaluation of `round(n * new_sr / old_sr)`.
pub fn resampled_len(n: usize, old_sr: u32, new_sr: u32) -> usize {
    let num = n as u128 * new_sr as u128;
    let den = old_sr as u128;
    ((2 * num + den) / (2 * den)) as usize
}

/// Reads `input` at positions `i * ratio` through a Hann-windowed sinc
/// kernel. The kernel cutoff tracks the lower of the two Nyquist rates and
/// each output sample is normalized by its kernel weight sum, which keeps
/// constants constant and suppresses phase-dependent imaging.
pub(crate) fn interpolate_at_ratio(input: &[f32], ratio: f64, out_len: usize) -> Vec<f32> {
    let scale = if ratio > 1.0 { 1.0 / ratio } else { 1.0 };
    let n = input.len() as isize;
    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let pos = i as f64 * ratio;
        let base = pos.floor() as isize;
        let mut acc = 0.0f64;
        let mut wsum = 0.0f64;
        for j in (base - SINC_HALF_TAPS as isize + 1)..=(base + SINC_HALF_TAPS as isize) {
            let x = pos - j as f64;
            let window = 0.5 * (1.0 + (std::f64::consts::PI * x / SINC_HALF_TAPS as f64).cos());
            let w = scale * sinc(scale * x) * window;
            wsum += w;
            if j >= 0 && j < n {
                acc += w * input[j as usize] as f64;
            }
        }
        out.push(if wsum.abs() > 1e-12 {
            (acc / wsum) as f32
        } else {
            0.0
        });
    }
    out
}
