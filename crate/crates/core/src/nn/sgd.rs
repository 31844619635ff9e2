use super::tensor::Parameters;
use crate::error::{Error, Result};

/// Mini-batch stochastic gradient descent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Rescale the batch gradient to this L2 norm when it is larger.
    pub clip_norm: Option<f64>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            batch_size: 64,
            epochs: 100,
            seed: 42,
            clip_norm: None,
        }
    }
}

/// Norm used by the optional gradient clipping.
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        // a zero rate is accepted: it freezes the parameters
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!("clip norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// `θ ← θ − lr · ∇θ`, with optional norm clipping of the gradient.
pub fn sgd_step<P: Parameters>(params: &mut P, grads: &P, cfg: &SgdConfig) -> Result<()> {
    let g = grads.tensors();
    let shapes: Vec<usize> = g.iter().map(|t| t.data.len()).collect();
    let p_shapes: Vec<usize> = params.tensors().iter().map(|t| t.data.len()).collect();
    if shapes != p_shapes {
        return Err(Error::DimensionMismatch(format!(
            "gradient tensor sizes {shapes:?} vs parameter sizes {p_shapes:?}"
        )));
    }
    let mut scale = cfg.learning_rate;
    if let Some(limit) = cfg.clip_norm {
        let norm = g
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if norm > limit {
            scale *= limit / norm;
        }
    }
    let grads: Vec<&[f64]> = g.iter().map(|t| t.data).collect();
    for (p, g) in params.tensors_mut().into_iter().zip(grads) {
        for (pv, gv) in p.iter_mut().zip(g) {
            *pv -= scale * gv;
        }
    }
    Ok(())
}
