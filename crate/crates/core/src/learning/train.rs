use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{accumulate_data_gradient, check_dims};
use super::{Dataset, LearningError, ParamVector};

/// Hyperparameters of the worker SGD procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    #[serde(default)]
    pub prox_weight: f64,
    pub batch_size: usize,
    #[serde(default = "one")]
    pub local_epochs: usize,
}

fn one() -> usize {
    1
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearningError> {
        let bad = |m: &str| Err(LearningError::InvalidConfig(m.into()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be finite and positive");
        }
        if !(self.prox_weight.is_finite() && self.prox_weight >= 0.0) {
            return bad("proximal weight must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.local_epochs == 0 {
            return bad("local epochs must be at least 1");
        }
        Ok(())
    }

    /// SGD steps taken by one call to [`local_train`] on `n` samples.
    pub fn steps_for(&self, n: usize) -> usize {
        self.local_epochs * n.div_ceil(self.batch_size)
    }
}

/// Minibatch SGD from the received global model.
///
/// Each local epoch shuffles the data and walks `ceil(n/B)` batches (the last
/// one may be short). The received model stays the proximal anchor
/// throughout; the result carries the epoch tag it was trained from.
pub fn local_train<R: Rng + ?Sized>(
    received: &ParamVector,
    epoch_tag: u64,
    data: &Dataset,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<ParamVector, LearningError> {
    check_dims(&received.values, data)?;
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate >= 0.0) || cfg.batch_size == 0 {
        return Err(LearningError::InvalidConfig(
            "learning rate must be finite and >= 0, batch size >= 1".into(),
        ));
    }
    let anchor = &received.values;
    let mut theta = anchor.clone();
    let mut grad = vec![0.0; theta.len()];
    let mut scratch = vec![0.0; data.class_count()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut steps = 0;
    for _ in 0..cfg.local_epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            accumulate_data_gradient(&theta, data, batch, &mut grad, &mut scratch);
            for ((t, g), a) in theta.iter_mut().zip(&grad).zip(anchor) {
                *t -= cfg.learning_rate * (g + cfg.prox_weight * (*t - a));
            }
            steps += 1;
        }
    }
    if !theta.iter().all(|v| v.is_finite()) {
        return Err(LearningError::Diverged { steps });
    }
    Ok(ParamVector::new(theta, epoch_tag))
}

/// Trains from zeros on a pooled dataset for `epochs` passes.
pub fn train_centralized<R: Rng + ?Sized>(
    data: &Dataset,
    cfg: &TrainConfig,
    epochs: usize,
    rng: &mut R,
) -> Result<ParamVector, LearningError> {
    let start = ParamVector::zeros(super::param_count(data.dim(), data.class_count()));
    if epochs == 0 {
        return Ok(start);
    }
    let cfg = TrainConfig {
        local_epochs: epochs,
        prox_weight: 0.0,
        ..*cfg
    };
    local_train(&start, 0, data, &cfg, rng)
}
