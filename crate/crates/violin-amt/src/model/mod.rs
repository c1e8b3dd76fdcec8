//! Frame-wise acoustic model with four sigmoid heads.
//!
//! The model is a context-window MLP: each frame's input is the
//! concatenation of `2C + 1` neighboring log-mel frames (edge-replicated,
//! scaled by 1/40 so typical dB values land near unit range), pushed through
//! affine+ReLU trunk layers and four affine+sigmoid heads producing `T x P`
//! activations for onset, offset, frame and velocity.
//!
//! Forward, loss and reverse-mode gradients are written once, generic over
//! the float type: training instantiates `f32`, the finite-difference
//! gradient check instantiates `f64` on the same code path.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, AdamMoments, Checkpoint};
pub use train::{cosine_lr, train, StepInfo, TrainConfig, TrainSetup};

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::DspError;
use crate::features::{FeatureError, FeatureKind, FeatureMatrix};
use crate::mat::Mat;
use crate::rng;
use crate::targets::{FrameHeads, TargetError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("checkpoint config does not match requested config: {0}")]
    ConfigMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training data is empty")]
    DataEmpty,
    #[error("bad checkpoint magic (expected \"AMT1\")")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("truncated or oversized checkpoint: {0}")]
    TruncatedFile(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("checkpoint config block: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Targets(#[from] TargetError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Float type the model math is generic over.
pub trait Scalar:
    Float + std::ops::AddAssign + std::ops::SubAssign + std::ops::MulAssign + std::fmt::Debug + Default + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Log-mel values are divided by this before entering the first layer.
const INPUT_SCALE: f64 = 1.0 / 40.0;
const CLAMP_LO: f64 = 1e-7;

pub const HEAD_ONSET: usize = 0;
pub const HEAD_OFFSET: usize = 1;
pub const HEAD_FRAME: usize = 2;
pub const HEAD_VELOCITY: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Frames of context on each side; input width is `n_mels * (2C + 1)`.
    pub context_frames: usize,
    pub n_mels: usize,
    pub hidden_sizes: Vec<usize>,
    pub pitch_bins: usize,
    /// MIDI pitch of bin 0.
    pub pitch_lo: i32,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            context_frames: 3,
            n_mels: 229,
            hidden_sizes: vec![256, 256],
            pitch_bins: 88,
            pitch_lo: 21,
            init_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn input_dim(&self) -> usize {
        self.n_mels * (2 * self.context_frames + 1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_mels == 0 || self.pitch_bins == 0 {
            return Err("n_mels and pitch_bins must be positive".into());
        }
        if self.hidden_sizes.iter().any(|&h| h == 0) {
            return Err("hidden sizes must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<F = f32> {
    /// `(in_dim, out_dim)` row-major.
    pub w: Mat<F>,
    pub b: Vec<F>,
}

impl<F: Scalar> Layer<F> {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            w: Mat::zeros(in_dim, out_dim),
            b: vec![F::default(); out_dim],
        }
    }
}

/// All weights, in declared order: trunk layers first, then the four heads
/// (onset, offset, frame, velocity), each as weight matrix then bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F = f32> {
    pub config: ModelConfig,
    pub trunk: Vec<Layer<F>>,
    pub heads: [Layer<F>; 4],
}

impl<F: Scalar> ModelParams<F> {
    pub fn zeros_like(config: &ModelConfig) -> Self {
        let mut dims = vec![config.input_dim()];
        dims.extend_from_slice(&config.hidden_sizes);
        let trunk = dims
            .windows(2)
            .map(|d| Layer::zeros(d[0], d[1]))
            .collect::<Vec<_>>();
        let head_in = *dims.last().unwrap();
        let heads = std::array::from_fn(|_| Layer::zeros(head_in, config.pitch_bins));
        Self {
            config: config.clone(),
            trunk,
            heads,
        }
    }

    /// Parameter arrays in checkpoint order.
    pub fn arrays(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for layer in self.trunk.iter().chain(self.heads.iter()) {
            out.push(layer.w.data());
            out.push(layer.b.as_slice());
        }
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = Vec::new();
        for layer in self.trunk.iter_mut().chain(self.heads.iter_mut()) {
            out.push(layer.w.data_mut());
            out.push(layer.b.as_mut_slice());
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    pub fn promote<G: Scalar>(&self) -> ModelParams<G> {
        ModelParams {
            config: self.config.clone(),
            trunk: self
                .trunk
                .iter()
                .map(|l| Layer {
                    w: l.w.map(|v| G::from_f64(v.to_f64())),
                    b: l.b.iter().map(|&v| G::from_f64(v.to_f64())).collect(),
                })
                .collect(),
            heads: std::array::from_fn(|i| Layer {
                w: self.heads[i].w.map(|v| G::from_f64(v.to_f64())),
                b: self.heads[i]
                    .b
                    .iter()
                    .map(|&v| G::from_f64(v.to_f64()))
                    .collect(),
            }),
        }
    }
}

/// Glorot-uniform weights (`+-sqrt(6/(fan_in+fan_out))`), zero biases,
/// deterministic in `cfg.init_seed`.
pub fn model_init(cfg: &ModelConfig) -> ModelParams<f32> {
    let mut params = ModelParams::<f32>::zeros_like(cfg);
    let mut rng = rng::seeded(cfg.init_seed);
    for layer in params.trunk.iter_mut().chain(params.heads.iter_mut()) {
        let bound = (6.0 / (layer.w.rows() + layer.w.cols()) as f64).sqrt();
        for v in layer.w.data_mut() {
            *v = rng::uniform_f64(&mut rng, -bound, bound) as f32;
        }
        // biases stay zero
    }
    params
}

// ---- generic math kernels ----

/// `a (m x k) * w (k x n) + bias`, bias broadcast over rows.
fn matmul_bias<F: Scalar>(a: &Mat<F>, w: &Mat<F>, bias: &[F]) -> Mat<F> {
    let (m, k) = (a.rows(), a.cols());
    let n = w.cols();
    debug_assert_eq!(k, w.rows());
    debug_assert_eq!(n, bias.len());
    let mut out = Mat::zeros(m, n);
    for i in 0..m {
        let a_row = a.row(i);
        let o_row = out.row_mut(i);
        o_row.copy_from_slice(bias);
        for (kk, &aik) in a_row.iter().enumerate() {
            let w_row = w.row(kk);
            for (o, &wv) in o_row.iter_mut().zip(w_row) {
                *o += aik * wv;
            }
        }
    }
    out
}

/// `a^T (k x m) * b (m x n)`, with `a` given as `(m x k)`.
fn matmul_at_b<F: Scalar>(a: &Mat<F>, b: &Mat<F>) -> Mat<F> {
    debug_assert_eq!(a.rows(), b.rows());
    let mut out = Mat::zeros(a.cols(), b.cols());
    for i in 0..a.rows() {
        let a_row = a.row(i);
        let b_row = b.row(i);
        for (kk, &aik) in a_row.iter().enumerate() {
            let o_row = out.row_mut(kk);
            for (o, &bv) in o_row.iter_mut().zip(b_row) {
                *o += aik * bv;
            }
        }
    }
    out
}

/// `a (m x k) * b^T` with `b` given as `(n x k)`.
fn matmul_a_bt<F: Scalar>(a: &Mat<F>, b: &Mat<F>) -> Mat<F> {
    debug_assert_eq!(a.cols(), b.cols());
    let mut out = Mat::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let a_row = a.row(i);
        let o_row = out.row_mut(i);
        for j in 0..b.rows() {
            let b_row = b.row(j);
            let mut acc = F::default();
            for (&av, &bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            o_row[j] = acc;
        }
    }
    out
}

fn column_sums<F: Scalar>(a: &Mat<F>) -> Vec<F> {
    let mut out = vec![F::default(); a.cols()];
    for i in 0..a.rows() {
        for (o, &v) in out.iter_mut().zip(a.row(i)) {
            *o += v;
        }
    }
    out
}

/// Stacks `2C + 1` neighboring feature frames per row with edge replication,
/// applying the fixed input scale.
pub(crate) fn context_input<F: Scalar>(feats: &Mat<f32>, context: usize) -> Mat<F> {
    let t = feats.rows();
    let n_mels = feats.cols();
    let width = n_mels * (2 * context + 1);
    let mut out = Mat::zeros(t, width);
    for i in 0..t {
        let row = out.row_mut(i);
        for (slot, off) in (-(context as isize)..=context as isize).enumerate() {
            let src = (i as isize + off).clamp(0, t as isize - 1) as usize;
            let src_row = feats.row(src);
            for m in 0..n_mels {
                row[slot * n_mels + m] = F::from_f64(src_row[m] as f64 * INPUT_SCALE);
            }
        }
    }
    out
}

pub(crate) struct ForwardPass<F> {
    /// Post-ReLU activations per trunk layer.
    trunk_acts: Vec<Mat<F>>,
    /// Sigmoid outputs per head, `T x P`.
    pub heads: [Mat<F>; 4],
}

fn sigmoid<F: Scalar>(z: F) -> F {
    F::one() / (F::one() + (-z).exp())
}

pub(crate) fn forward_core<F: Scalar>(params: &ModelParams<F>, x: &Mat<F>) -> ForwardPass<F> {
    let mut acts: Vec<Mat<F>> = Vec::with_capacity(params.trunk.len());
    for layer in &params.trunk {
        let mut z = {
            let input = acts.last().unwrap_or(x);
            matmul_bias(input, &layer.w, &layer.b)
        };
        for v in z.data_mut() {
            if *v < F::default() {
                *v = F::default();
            }
        }
        acts.push(z);
    }
    let head_in = acts.last().unwrap_or(x);
    let heads = std::array::from_fn(|h| {
        let mut z = matmul_bias(head_in, &params.heads[h].w, &params.heads[h].b);
        for v in z.data_mut() {
            *v = sigmoid(*v);
        }
        z
    });
    ForwardPass {
        trunk_acts: acts,
        heads,
    }
}

/// Runs the model over a log-mel matrix. Output heads share the feature
/// frame rate and the configured pitch layout.
pub fn forward(params: &ModelParams<f32>, feats: &FeatureMatrix) -> Result<FrameHeads, ModelError> {
    if feats.kind != FeatureKind::LogMel {
        return Err(ModelError::ShapeMismatch(
            "forward expects log-mel features".into(),
        ));
    }
    if feats.bins() != params.config.n_mels {
        return Err(ModelError::ShapeMismatch(format!(
            "feature bins {} != model n_mels {}",
            feats.bins(),
            params.config.n_mels
        )));
    }
    let x = context_input::<f32>(&feats.data, params.config.context_frames);
    let pass = forward_core(params, &x);
    let [onset, offset, frame, velocity] = pass.heads;
    Ok(FrameHeads {
        onset,
        offset,
        frame,
        velocity,
        frame_rate: feats.frame_rate,
        pitch_lo: params.config.pitch_lo,
    })
}

/// Loss over all four heads in one scan: BCE on onset, offset and frame,
/// plus BCE on velocity restricted to cells whose onset target is positive
/// (normalized by the count of such cells). Returns the loss and `dL/dz`
/// for each head.
pub(crate) fn loss_core<F: Scalar>(pred: &[Mat<F>; 4], tgt: &[Mat<F>; 4]) -> (F, [Mat<F>; 4]) {
    let cells = pred[HEAD_ONSET].rows() * pred[HEAD_ONSET].cols();
    for h in 0..4 {
        debug_assert_eq!(pred[h].rows(), tgt[h].rows());
        debug_assert_eq!(pred[h].cols(), tgt[h].cols());
    }
    let lo = F::from_f64(CLAMP_LO);
    let hi = F::from_f64(1.0 - CLAMP_LO);
    let one = F::one();

    let mask_count = tgt[HEAD_ONSET]
        .data()
        .iter()
        .filter(|&&v| v > F::default())
        .count()
        .max(1);

    let mut total = F::default();
    let mut grads: [Mat<F>; 4] = std::array::from_fn(|h| Mat::zeros(pred[h].rows(), pred[h].cols()));
    for h in 0..4 {
        let weight = if h == HEAD_VELOCITY {
            F::from_f64(1.0 / mask_count as f64)
        } else {
            F::from_f64(1.0 / cells.max(1) as f64)
        };
        let mut acc = F::default();
        let g = grads[h].data_mut();
        for (idx, (&p, &t)) in pred[h].data().iter().zip(tgt[h].data()).enumerate() {
            if h == HEAD_VELOCITY && !(tgt[HEAD_ONSET].data()[idx] > F::default()) {
                continue;
            }
            let pc = p.max(lo).min(hi);
            acc += -(t * pc.ln() + (one - t) * (one - pc).ln());
            // d/dz of BCE(sigmoid(z)) is p - t; zero where the clamp is active
            g[idx] = if p > lo && p < hi {
                (pc - t) * weight
            } else {
                F::default()
            };
        }
        total += acc * weight;
    }
    (total, grads)
}

/// Scalar training loss between predicted and target heads (evaluated in
/// `f64`).
pub fn loss(heads: &FrameHeads, targets: &FrameHeads) -> f64 {
    let promote = |m: &Mat<f32>| m.map(|v| v as f64);
    let pred = [
        promote(&heads.onset),
        promote(&heads.offset),
        promote(&heads.frame),
        promote(&heads.velocity),
    ];
    let tgt = [
        promote(&targets.onset),
        promote(&targets.offset),
        promote(&targets.frame),
        promote(&targets.velocity),
    ];
    loss_core::<f64>(&pred, &tgt).0.to_f64()
}

/// Reverse-mode gradients for every parameter given the head gradients.
pub(crate) fn backward_core<F: Scalar>(
    params: &ModelParams<F>,
    x: &Mat<F>,
    pass: &ForwardPass<F>,
    d_z_heads: &[Mat<F>; 4],
) -> ModelParams<F> {
    let mut grads = ModelParams::<F>::zeros_like(&params.config);
    let head_in = pass.trunk_acts.last().unwrap_or(x);

    let mut d_hidden = Mat::<F>::zeros(head_in.rows(), head_in.cols());
    for h in 0..4 {
        grads.heads[h].w = matmul_at_b(head_in, &d_z_heads[h]);
        grads.heads[h].b = column_sums(&d_z_heads[h]);
        let back = matmul_a_bt(&d_z_heads[h], &params.heads[h].w);
        for (d, &v) in d_hidden.data_mut().iter_mut().zip(back.data()) {
            *d += v;
        }
    }

    for l in (0..params.trunk.len()).rev() {
        // ReLU gate
        let act = &pass.trunk_acts[l];
        for (d, &a) in d_hidden.data_mut().iter_mut().zip(act.data()) {
            if !(a > F::default()) {
                *d = F::default();
            }
        }
        let input = if l == 0 { x } else { &pass.trunk_acts[l - 1] };
        grads.trunk[l].w = matmul_at_b(input, &d_hidden);
        grads.trunk[l].b = column_sums(&d_hidden);
        if l > 0 {
            d_hidden = matmul_a_bt(&d_hidden, &params.trunk[l].w);
        }
    }
    grads
}

/// Compares analytic gradients against central finite differences on a
/// double-precision instance of the given config. Returns the max relative
/// error over all parameters.
pub fn grad_check(cfg: &ModelConfig, epsilon: f64, data_seed: u64) -> f64 {
    let frames = 6;
    let mut rng = rng::seeded(data_seed);
    let mut feats = Mat::<f32>::zeros(frames, cfg.n_mels);
    for v in feats.data_mut() {
        *v = rng::uniform_f64(&mut rng, -40.0, 0.0) as f32;
    }
    let mut tgt: [Mat<f64>; 4] = std::array::from_fn(|_| Mat::zeros(frames, cfg.pitch_bins));
    for h in [HEAD_ONSET, HEAD_OFFSET, HEAD_FRAME] {
        for v in tgt[h].data_mut() {
            *v = if rng::uniform_f64(&mut rng, 0.0, 1.0) < 0.3 {
                1.0
            } else {
                0.0
            };
        }
    }
    // guarantee the velocity mask is non-empty
    tgt[HEAD_ONSET].set(frames / 2, cfg.pitch_bins / 2, 1.0);
    for v in tgt[HEAD_VELOCITY].data_mut() {
        *v = rng::uniform_f64(&mut rng, 0.0, 1.0);
    }

    let mut params = model_init(cfg).promote::<f64>();
    let x = context_input::<f64>(&feats, cfg.context_frames);

    let pass = forward_core(&params, &x);
    let (_, d_z) = loss_core(&pass.heads, &tgt);
    let analytic = backward_core(&params, &x, &pass, &d_z);
    let analytic_arrays: Vec<Vec<f64>> = analytic.arrays().iter().map(|a| a.to_vec()).collect();

    let mut max_rel = 0.0f64;
    let n_arrays = analytic_arrays.len();
    for a_idx in 0..n_arrays {
        for j in 0..analytic_arrays[a_idx].len() {
            let orig = params.arrays()[a_idx][j];
            params.arrays_mut()[a_idx][j] = orig + epsilon;
            let plus = loss_core(&forward_core(&params, &x).heads, &tgt).0;
            params.arrays_mut()[a_idx][j] = orig - epsilon;
            let minus = loss_core(&forward_core(&params, &x).heads, &tgt).0;
            params.arrays_mut()[a_idx][j] = orig;
            let fd = (plus - minus) / (2.0 * epsilon);
            let ga = analytic_arrays[a_idx][j];
            let rel = (ga - fd).abs() / (ga.abs() + fd.abs()).max(1e-8);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    max_rel
}
