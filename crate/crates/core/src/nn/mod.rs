//! Small dense/LSTM toolkit with hand-written reverse-mode gradients.
//!
//! Everything runs in `f64`. Models expose their weights through
//! [`Parameters`], which is also the type used to hold their gradients.

mod checkpoint;
mod dense;
mod lstm;
mod sgd;
mod tensor;

pub use checkpoint::{Checkpoint, TensorRecord, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dense::Dense;
pub use lstm::{lstm_forward, lstm_step, LstmCell, LstmState, StepCache};
pub use sgd::{sgd_step, SgdConfig, DEFAULT_CLIP_NORM};
pub use tensor::{dot, sigmoid, Matrix, Parameters, TensorView, INIT_SCALE};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;

/// Seeded generator used for every random draw in training.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Trains `model` by mini-batch SGD over `samples`.
///
/// `loss_grad` returns the loss of one sample and its gradient. Each batch
/// update uses the mean gradient of its samples; samples are reshuffled every
/// epoch from a generator seeded with `cfg.seed`. Per-sample gradients are
/// evaluated in parallel but reduced in a fixed order, so the result does not
/// depend on the thread count. `after_epoch` receives the epoch number
/// (1-based) and the model after that epoch. Returns the mean sample loss of
/// every epoch.
pub fn train_sgd<P, S, F, E>(
    model: &mut P,
    samples: &[S],
    cfg: &SgdConfig,
    loss_grad: F,
    mut after_epoch: E,
) -> Result<Vec<f64>>
where
    P: Parameters + Sync + Send,
    S: Sync,
    F: Fn(&P, &S) -> Result<(f64, P)> + Sync,
    E: FnMut(usize, &P),
{
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<(f64, P)> = batch
                .par_iter()
                .map(|&i| loss_grad(model, &samples[i]))
                .collect::<Result<_>>()?;
            let mut grad = model.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            for (loss, g) in &results {
                epoch_loss += loss;
                grad.add_scaled(g, scale);
            }
            sgd_step(model, &grad, cfg)?;
        }
        history.push(epoch_loss / samples.len().max(1) as f64);
        after_epoch(epoch, model);
    }
    Ok(history)
}
