//! Seeded training loop: segment sampling, optional augmentation, Adam
//! updates under a cosine-annealed learning rate. From-scratch and
//! checkpoint-initialized runs share the exact same loop body; only the
//! parameter initialization differs.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    backward_core, context_input, forward_core, loss_core, model_init, AdamMoments, Checkpoint,
    ModelConfig, ModelError, ModelParams,
};
use crate::augment::{apply_chain, sample_chain_params, AugmentConfig};
use crate::dataset::{clip_notes_to_window, LabeledClip};
use crate::features::{log_mel, FeatureConfig};
use crate::mat::Mat;
use crate::rng;
use crate::targets::{encode_targets, DecodeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr0: f64,
    pub lr_min: f64,
    pub total_steps: u64,
    pub segment_s: f64,
    pub augment: bool,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 5,
            lr0: 5e-4,
            lr_min: 0.0,
            total_steps: 10_000,
            segment_s: 10.0,
            augment: false,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.batch_size == 0 || self.total_steps == 0 {
            return Err("batch_size and total_steps must be positive".into());
        }
        if !(self.lr0 > self.lr_min && self.lr_min >= 0.0) {
            return Err("need lr0 > lr_min >= 0".into());
        }
        if self.segment_s <= 0.0 {
            return Err("segment_s must be positive".into());
        }
        Ok(())
    }
}

/// Half-cosine decay from `lr0` at step 0 to `lr_min` at `total_steps`.
pub fn cosine_lr(step: u64, cfg: &TrainConfig) -> f64 {
    debug_assert!(step <= cfg.total_steps);
    let phase = std::f64::consts::PI * step as f64 / cfg.total_steps as f64;
    cfg.lr_min + 0.5 * (cfg.lr0 - cfg.lr_min) * (1.0 + phase.cos())
}

/// Per-step report passed to the training observer.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    /// 1-based step index.
    pub step: u64,
    pub lr: f64,
    pub loss: f64,
}

/// Everything the loop needs besides the data.
#[derive(Debug, Clone, Copy)]
pub struct TrainSetup<'a> {
    pub train: &'a TrainConfig,
    pub model: &'a ModelConfig,
    pub features: &'a FeatureConfig,
    pub augment: &'a AugmentConfig,
    pub decode: &'a DecodeConfig,
}

struct Adam {
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    t: u64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl Adam {
    fn new(params: &ModelParams<f32>, cfg: &TrainConfig) -> Self {
        Self {
            m: params.arrays().iter().map(|a| vec![0.0; a.len()]).collect(),
            v: params.arrays().iter().map(|a| vec![0.0; a.len()]).collect(),
            t: 0,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            epsilon: cfg.adam_epsilon,
        }
    }

    fn update(&mut self, params: &mut ModelParams<f32>, grads: &ModelParams<f32>, lr: f64) {
        self.t += 1;
        let b1 = self.beta1 as f32;
        let b2 = self.beta2 as f32;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        // fold the bias corrections into one scalar per step
        let step_scale = (lr / bc1) as f32;
        let vhat_scale = (1.0 / bc2) as f32;
        let eps = self.epsilon as f32;
        let grad_arrays = grads.arrays();
        for (a_idx, p_arr) in params.arrays_mut().into_iter().enumerate() {
            let g_arr = grad_arrays[a_idx];
            let m_arr = &mut self.m[a_idx];
            let v_arr = &mut self.v[a_idx];
            for j in 0..p_arr.len() {
                let g = g_arr[j];
                m_arr[j] = b1 * m_arr[j] + (1.0 - b1) * g;
                v_arr[j] = b2 * v_arr[j] + (1.0 - b2) * g * g;
                p_arr[j] -= step_scale * m_arr[j] / ((v_arr[j] * vhat_scale).sqrt() + eps);
            }
        }
    }
}

fn floor_db_row(cfg: &FeatureConfig) -> Vec<f32> {
    vec![cfg.floor_db(); cfg.n_mels]
}

/// One training example: stacked-context input plus the four target heads.
struct BatchItem {
    input: Mat<f32>,
    targets: [Mat<f32>; 4],
}

/// Runs `total_steps` of Adam on randomly cropped (optionally augmented)
/// segments. Deterministic given the seeds in `setup`. The observer sees
/// every step.
pub fn train(
    setup: &TrainSetup,
    data: &[LabeledClip],
    init: Option<&Checkpoint>,
    mut on_step: impl FnMut(&StepInfo),
) -> Result<Checkpoint, ModelError> {
    let tcfg = setup.train;
    let mcfg = setup.model;
    let fcfg = setup.features;
    if data.is_empty() {
        return Err(ModelError::DataEmpty);
    }
    tcfg.validate().map_err(ModelError::InvalidConfig)?;
    mcfg.validate().map_err(ModelError::InvalidConfig)?;
    fcfg.validate().map_err(ModelError::InvalidConfig)?;
    if let Some(ckpt) = init {
        if ckpt.params.config != *mcfg {
            return Err(ModelError::ConfigMismatch(format!(
                "checkpoint {:?} vs requested {:?}",
                ckpt.params.config, mcfg
            )));
        }
    }
    if mcfg.n_mels != fcfg.n_mels {
        return Err(ModelError::ShapeMismatch(format!(
            "model n_mels {} != feature n_mels {}",
            mcfg.n_mels, fcfg.n_mels
        )));
    }

    let mut params = match init {
        Some(ckpt) => ckpt.params.clone(),
        None => model_init(mcfg),
    };
    // fine-tuning restarts both the scheduler and the optimizer state
    let mut adam = Adam::new(&params, tcfg);
    let mut stream = rng::seeded(tcfg.seed);

    let frame_rate = fcfg.frame_rate();
    let seg_frames = (tcfg.segment_s * frame_rate).floor() as usize + 1;
    let seg_samples = (tcfg.segment_s * fcfg.sr as f64).round() as usize;

    // with augmentation off, full-clip features are reusable across steps
    let cache: Option<Vec<Mat<f32>>> = if tcfg.augment {
        None
    } else {
        let mut mats = Vec::with_capacity(data.len());
        for clip in data {
            mats.push(log_mel(&clip.audio, fcfg)?.data);
        }
        Some(mats)
    };
    let floor_row = floor_db_row(fcfg);

    // crop starts may overhang the clip on both sides (padded with the
    // feature floor / silence) so edge frames get the same sampling
    // coverage as interior frames
    let draw_start = |stream: &mut rand_chacha::ChaCha8Rng, full_frames: usize| -> isize {
        let span = full_frames + seg_frames - 1;
        rng::uniform_usize(stream, span) as isize - (seg_frames as isize - 1)
    };

    let draw_item = |stream: &mut rand_chacha::ChaCha8Rng| -> Result<BatchItem, ModelError> {
        let idx = rng::uniform_usize(stream, data.len());
        let clip = &data[idx];
        if let Some(cache) = &cache {
            let full = &cache[idx];
            let start = draw_start(stream, full.rows());
            let mut feats = Mat::zeros(seg_frames, fcfg.n_mels);
            for k in 0..seg_frames {
                let src = start + k as isize;
                let row = if src >= 0 && (src as usize) < full.rows() {
                    full.row(src as usize)
                } else {
                    floor_row.as_slice()
                };
                feats.row_mut(k).copy_from_slice(row);
            }
            let t0 = start as f64 / frame_rate;
            let window_s = seg_frames as f64 / frame_rate;
            let notes = clip_notes_to_window(&clip.notes, t0, t0 + window_s, 0.03);
            let heads = encode_targets(
                &notes,
                seg_frames,
                setup.decode,
                frame_rate,
                mcfg.pitch_lo,
                mcfg.pitch_bins,
            )?;
            Ok(BatchItem {
                input: context_input::<f32>(&feats, mcfg.context_frames),
                targets: [heads.onset, heads.offset, heads.frame, heads.velocity],
            })
        } else {
            let full_frames = clip.audio.samples.len() / fcfg.hop + 1;
            let start = draw_start(stream, full_frames);
            let s0 = start * fcfg.hop as isize;
            let mut samples = vec![0.0f32; seg_samples];
            for (k, slot) in samples.iter_mut().enumerate() {
                let src = s0 + k as isize;
                if src >= 0 && (src as usize) < clip.audio.samples.len() {
                    *slot = clip.audio.samples[src as usize];
                }
            }
            let t0 = start as f64 / frame_rate;
            let window_s = seg_samples as f64 / fcfg.sr as f64;
            let notes = clip_notes_to_window(&clip.notes, t0, t0 + window_s, 0.03);

            let chain_seed = stream.next_u64();
            let chain = sample_chain_params(chain_seed, setup.augment);
            let (aug_audio, aug_notes) = apply_chain(
                &crate::audio_io::AudioClip::new(samples, fcfg.sr),
                &notes,
                &chain,
            )?;
            let feats = log_mel(&aug_audio, fcfg)?;
            let frames = feats.frames();
            let heads = encode_targets(
                &aug_notes,
                frames,
                setup.decode,
                frame_rate,
                mcfg.pitch_lo,
                mcfg.pitch_bins,
            )?;
            Ok(BatchItem {
                input: context_input::<f32>(&feats.data, mcfg.context_frames),
                targets: [heads.onset, heads.offset, heads.frame, heads.velocity],
            })
        }
    };

    for step in 0..tcfg.total_steps {
        let lr = cosine_lr(step, tcfg);
        let mut grads_sum = ModelParams::<f32>::zeros_like(mcfg);
        let mut loss_sum = 0.0f64;
        for _ in 0..tcfg.batch_size {
            let item = draw_item(&mut stream)?;
            let pass = forward_core(&params, &item.input);
            let (item_loss, d_z) = loss_core(&pass.heads, &item.targets);
            let item_grads = backward_core(&params, &item.input, &pass, &d_z);
            loss_sum += item_loss as f64;
            for (acc, g) in grads_sum
                .arrays_mut()
                .into_iter()
                .zip(item_grads.arrays())
            {
                for (a, &v) in acc.iter_mut().zip(g) {
                    *a += v;
                }
            }
        }
        let scale = 1.0 / tcfg.batch_size as f32;
        for arr in grads_sum.arrays_mut() {
            for v in arr {
                *v *= scale;
            }
        }
        adam.update(&mut params, &grads_sum, lr);
        on_step(&StepInfo {
            step: step + 1,
            lr,
            loss: loss_sum / tcfg.batch_size as f64,
        });
    }

    let moments = AdamMoments {
        t: adam.t,
        m: adam.m,
        v: adam.v,
    };
    Ok(Checkpoint {
        params,
        moments: Some(moments),
        step: tcfg.total_steps,
    })
}
