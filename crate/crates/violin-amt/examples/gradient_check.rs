//! Verify the hand-written backward pass against central finite
//! differences on a tiny double-precision model.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use violin_amt::{grad_check, ModelConfig};

fn main() {
    let cfg = ModelConfig {
        context_frames: 1,
        n_mels: 5,
        hidden_sizes: vec![8],
        pitch_bins: 4,
        pitch_lo: 60,
        init_seed: 1,
    };
    println!("tiny model: input {}, hidden {:?}, {} pitch bins", cfg.input_dim(), cfg.hidden_sizes, cfg.pitch_bins);
    for (eps, seed) in [(1e-4, 11u64), (1e-4, 12), (2e-4, 13)] {
        let err = grad_check(&cfg, eps, seed);
        println!("epsilon {eps:.0e}, data seed {seed}: max relative error {err:.3e}");
    }
}
