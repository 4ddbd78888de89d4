//! Mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{accumulate, Workspace};
use super::optim::{adam_step, AdamConfig, AdamState};
use super::{ModelError, ModelParameters};
use crate::timeseries::WindowedDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Global-norm gradient clipping threshold; `None` (written as `0` in
    /// config files) disables it.
    #[serde(with = "clip_norm_serde")]
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

mod clip_norm_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(v.unwrap_or(0.0))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let v = f64::deserialize(d)?;
        Ok((v != 0.0).then_some(v))
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 1024,
            epochs: 10,
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.batch_size == 0 {
            return Err(ModelError::InvalidArgument("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidArgument("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(ModelError::InvalidArgument("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(ModelError::InvalidArgument("adam_epsilon must be positive".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(ModelError::InvalidArgument("clip_norm must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    /// Mean training loss of each epoch, averaged over samples.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

/// Runs `cfg.epochs` shuffled passes over `data`, updating `params` and the
/// optimizer state in place. The last partial batch of an epoch is kept.
pub fn train_local(
    params: &mut ModelParameters,
    state: &mut AdamState,
    data: &WindowedDataset,
    cfg: &TrainConfig,
) -> Result<TrainLog, ModelError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mc = *params.config();
    if data.ts() != mc.ts || data.n_features() != mc.input_dim {
        return Err(ModelError::ShapeMismatch(format!(
            "data is (ts={}, n={}), model expects (ts={}, n={})",
            data.ts(),
            data.n_features(),
            mc.ts,
            mc.input_dim
        )));
    }
    if let Some(&bad) = data.labels().iter().find(|&&y| y >= mc.num_classes) {
        return Err(ModelError::InvalidArgument(format!(
            "label {bad} outside {} classes",
            mc.num_classes
        )));
    }
    if state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(ModelError::ShapeMismatch("optimizer state does not match parameters".into()));
    }

    let adam = cfg.adam();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut ws = Workspace::new(&mc);
    let mut grads = ModelParameters::zeros(mc);
    let mut log = TrainLog::default();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.values_mut().fill(0.0);
            let samples = batch.iter().map(|&i| (data.window(i), data.labels()[i]));
            let batch_loss = accumulate(params, samples, batch.len(), &mut ws, grads.values_mut())?;
            epoch_total += batch_loss * batch.len() as f64;
            if let Some(limit) = cfg.clip_norm {
                let norm = grads.l2_norm();
                if norm > limit {
                    let s = limit / norm;
                    grads.values_mut().iter_mut().for_each(|g| *g *= s);
                }
            }
            let t = state.t + 1;
            adam_step(params, &grads, state, t, &adam)?;
            log.steps += 1;
        }
        log.epoch_losses.push(epoch_total / data.len() as f64);
    }
    Ok(log)
}
