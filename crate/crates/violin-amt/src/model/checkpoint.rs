//! Checkpoint serialization.
//!
//! Byte layout (all little-endian):
//!
//! ```text
//! "AMT1"                       4-byte magic
//! u16   format version (= 1)
//! u32   config JSON length, then that many JSON bytes (ModelConfig)
//! u64   step counter
//! u8    has_moments flag (0 or 1)
//! f32[] parameter arrays, in declared order
//! if has_moments:
//!   u64   Adam step counter
//!   f32[] first-moment arrays, declared order
//!   f32[] second-moment arrays, declared order
//! ```
//!
//! `load(save(x))` reproduces `x` bit-exactly.

use std::fs;
use std::path::Path;

use super::{ModelConfig, ModelError, ModelParams};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"AMT1";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub t: u64,
    pub m: Vec<Vec<f32>>,
    pub v: Vec<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams<f32>,
    pub moments: Option<AdamMoments>,
    pub step: u64,
}

impl Checkpoint {
    pub fn config(&self) -> &ModelConfig {
        &self.params.config
    }
}

fn push_f32s(out: &mut Vec<u8>, values: &[f32]) {
    out.reserve(values.len() * 4);
    for &v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let config_json =
        serde_json::to_vec(&ckpt.params.config).expect("model config serializes");
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&config_json);
    bytes.extend_from_slice(&ckpt.step.to_le_bytes());
    bytes.push(ckpt.moments.is_some() as u8);
    for arr in ckpt.params.arrays() {
        push_f32s(&mut bytes, arr);
    }
    if let Some(m) = &ckpt.moments {
        bytes.extend_from_slice(&m.t.to_le_bytes());
        for arr in &m.m {
            push_f32s(&mut bytes, arr);
        }
        for arr in &m.v {
            push_f32s(&mut bytes, arr);
        }
    }
    fs::write(path, bytes).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        if self.pos + n > self.bytes.len() {
            return Err(ModelError::TruncatedFile(format!(
                "needed {n} bytes for {what} at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f32_array(&mut self, len: usize, what: &str) -> Result<Vec<f32>, ModelError> {
        let raw = self.take(len * 4, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, ModelError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if cur.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = u16::from_le_bytes(cur.take(2, "version")?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let json_len = u32::from_le_bytes(cur.take(4, "config length")?.try_into().unwrap()) as usize;
    let config: ModelConfig = serde_json::from_slice(cur.take(json_len, "config JSON")?)
        .map_err(|e| ModelError::BadConfig(e.to_string()))?;
    config.validate().map_err(ModelError::BadConfig)?;
    let step = u64::from_le_bytes(cur.take(8, "step")?.try_into().unwrap());
    let has_moments = cur.take(1, "moments flag")?[0] != 0;

    let mut params = ModelParams::<f32>::zeros_like(&config);
    let lens: Vec<usize> = params.arrays().iter().map(|a| a.len()).collect();
    for (arr_idx, target) in params.arrays_mut().into_iter().enumerate() {
        let vals = cur.f32_array(lens[arr_idx], "parameters")?;
        target.copy_from_slice(&vals);
    }
    let moments = if has_moments {
        let t = u64::from_le_bytes(cur.take(8, "adam step")?.try_into().unwrap());
        let mut m = Vec::with_capacity(lens.len());
        for &len in &lens {
            m.push(cur.f32_array(len, "first moments")?);
        }
        let mut v = Vec::with_capacity(lens.len());
        for &len in &lens {
            v.push(cur.f32_array(len, "second moments")?);
        }
        Some(AdamMoments { t, m, v })
    } else {
        None
    };
    if cur.pos != bytes.len() {
        return Err(ModelError::TruncatedFile(format!(
            "{} trailing bytes after checkpoint payload",
            bytes.len() - cur.pos
        )));
    }
    Ok(Checkpoint {
        params,
        moments,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::super::model_init;
    use super::*;

    fn tiny_checkpoint() -> Checkpoint {
        let cfg = ModelConfig {
            context_frames: 1,
            n_mels: 6,
            hidden_sizes: vec![4],
            pitch_bins: 3,
            pitch_lo: 60,
            init_seed: 11,
        };
        let params = model_init(&cfg);
        let lens: Vec<usize> = params.arrays().iter().map(|a| a.len()).collect();
        Checkpoint {
            params,
            moments: Some(AdamMoments {
                t: 42,
                m: lens.iter().map(|&l| vec![0.25; l]).collect(),
                v: lens.iter().map(|&l| vec![0.5; l]).collect(),
            }),
            step: 1234,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("vamt_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        let ckpt = tiny_checkpoint();
        save_checkpoint(&ckpt, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.step, ckpt.step);
        assert_eq!(back.params.config, ckpt.params.config);
        for (a, b) in ckpt.params.arrays().iter().zip(back.params.arrays()) {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(back.moments, ckpt.moments);
        // saving again produces identical bytes
        let bytes1 = std::fs::read(&path).unwrap();
        save_checkpoint(&back, &path).unwrap();
        assert_eq!(bytes1, std::fs::read(&path).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn bad_magic_detected() {
        let dir = std::env::temp_dir().join("vamt_ckpt_magic");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        save_checkpoint(&tiny_checkpoint(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(ModelError::BadMagic)));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn version_mismatch_detected() {
        let dir = std::env::temp_dir().join("vamt_ckpt_ver");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        save_checkpoint(&tiny_checkpoint(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4..6].copy_from_slice(&9u16.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(ModelError::VersionMismatch { found: 9, .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn truncation_detected() {
        let dir = std::env::temp_dir().join("vamt_ckpt_trunc");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        save_checkpoint(&tiny_checkpoint(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(ModelError::TruncatedFile(_))
        ));
        std::fs::remove_dir_all(&dir).ok();
    }
}
