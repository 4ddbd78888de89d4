//! Two-layer LSTM classifier with a dense softmax head.
//!
//! Layer sizes default to 128 and 64 hidden units with 21 output classes.
//! ReLU is applied to every hidden state a layer emits to the next stage; the
//! recurrence itself runs on the raw hidden state. Layer 2 consumes the full
//! layer-1 sequence, the dense head consumes layer 2's final output.
//!
//! Parameters live in one flat `Vec<f64>` in this fixed tensor order:
//!
//! | name                      | shape           |
//! |---------------------------|-----------------|
//! | `lstm1.kernel`            | `[4·h1, n]`     |
//! | `lstm1.recurrent_kernel`  | `[4·h1, h1]`    |
//! | `lstm1.bias`              | `[4·h1]`        |
//! | `lstm2.kernel`            | `[4·h2, h1]`    |
//! | `lstm2.recurrent_kernel`  | `[4·h2, h2]`    |
//! | `lstm2.bias`              | `[4·h2]`        |
//! | `dense.kernel`            | `[c, h2]`       |
//! | `dense.bias`              | `[c]`           |
//!
//! Gate blocks inside each `4·h` dimension are ordered input, forget, cell,
//! output.

pub mod codec;
mod lstm;
pub mod optim;
pub mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use codec::{deserialize, payload_len, serialize, TensorManifest};
pub use lstm::{backward, forward, loss, predict, Gradients};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use train::{train_local, TrainConfig, TrainLog};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite values produced in layer `{layer}`")]
    NumericOverflow { layer: &'static str },
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("empty dataset")]
    EmptyDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub num_classes: usize,
    pub ts: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: 52,
            hidden1: 128,
            hidden2: 64,
            num_classes: 21,
            ts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Start offsets of each tensor in the flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Offsets {
    pub l1_w: usize,
    pub l1_u: usize,
    pub l1_b: usize,
    pub l2_w: usize,
    pub l2_u: usize,
    pub l2_b: usize,
    pub d_w: usize,
    pub d_b: usize,
    pub total: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("input_dim", self.input_dim),
            ("hidden1", self.hidden1),
            ("hidden2", self.hidden2),
            ("num_classes", self.num_classes),
            ("ts", self.ts),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(ModelError::InvalidArgument(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub(crate) fn offsets(&self) -> Offsets {
        let (n, h1, h2, c) = (self.input_dim, self.hidden1, self.hidden2, self.num_classes);
        let l1_w = 0;
        let l1_u = l1_w + 4 * h1 * n;
        let l1_b = l1_u + 4 * h1 * h1;
        let l2_w = l1_b + 4 * h1;
        let l2_u = l2_w + 4 * h2 * h1;
        let l2_b = l2_u + 4 * h2 * h2;
        let d_w = l2_b + 4 * h2;
        let d_b = d_w + c * h2;
        Offsets {
            l1_w,
            l1_u,
            l1_b,
            l2_w,
            l2_u,
            l2_b,
            d_w,
            d_b,
            total: d_b + c,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.offsets().total
    }

    pub fn layout(&self) -> Vec<TensorSpec> {
        let o = self.offsets();
        let (n, h1, h2, c) = (self.input_dim, self.hidden1, self.hidden2, self.num_classes);
        vec![
            TensorSpec { name: "lstm1.kernel", shape: vec![4 * h1, n], offset: o.l1_w },
            TensorSpec { name: "lstm1.recurrent_kernel", shape: vec![4 * h1, h1], offset: o.l1_u },
            TensorSpec { name: "lstm1.bias", shape: vec![4 * h1], offset: o.l1_b },
            TensorSpec { name: "lstm2.kernel", shape: vec![4 * h2, h1], offset: o.l2_w },
            TensorSpec { name: "lstm2.recurrent_kernel", shape: vec![4 * h2, h2], offset: o.l2_u },
            TensorSpec { name: "lstm2.bias", shape: vec![4 * h2], offset: o.l2_b },
            TensorSpec { name: "dense.kernel", shape: vec![c, h2], offset: o.d_w },
            TensorSpec { name: "dense.bias", shape: vec![c], offset: o.d_b },
        ]
    }

    /// Fields that determine tensor shapes; `ts` does not.
    pub fn shape_key(&self) -> [usize; 4] {
        [self.input_dim, self.hidden1, self.hidden2, self.num_classes]
    }
}

/// All trainable weights of the network, flat, in [`ModelConfig::layout`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    config: ModelConfig,
    values: Vec<f64>,
}

impl ModelParameters {
    pub fn zeros(config: ModelConfig) -> Self {
        Self {
            values: vec![0.0; config.parameter_count()],
            config,
        }
    }

    pub fn from_values(config: ModelConfig, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != config.parameter_count() {
            return Err(ModelError::ShapeMismatch(format!(
                "expected {} values, got {}",
                config.parameter_count(),
                values.len()
            )));
        }
        Ok(Self { config, values })
    }

    /// Uniform `±1/√fan_in` weights, zero biases except forget gates at 1.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(config);
        for spec in config.layout() {
            if spec.shape.len() == 2 {
                let bound = 1.0 / (spec.shape[1] as f64).sqrt();
                for v in &mut p.values[spec.range()] {
                    *v = rng.random_range(-bound..bound);
                }
            }
        }
        let o = config.offsets();
        p.values[o.l1_b + config.hidden1..o.l1_b + 2 * config.hidden1].fill(1.0);
        p.values[o.l2_b + config.hidden2..o.l2_b + 2 * config.hidden2].fill(1.0);
        Ok(p)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.config
            .layout()
            .into_iter()
            .find(|s| s.name == name)
            .map(|s| &self.values[s.range()])
    }

    /// Values rounded to single precision, as they travel on the wire.
    pub fn to_wire_precision(&self) -> Self {
        Self {
            config: self.config,
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub(crate) fn check_compatible(&self, other: &ModelParameters) -> Result<(), ModelError> {
        if self.config.shape_key() != other.config.shape_key() {
            return Err(ModelError::ShapeMismatch(format!(
                "parameter shapes {:?} vs {:?}",
                self.config.shape_key(),
                other.config.shape_key()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_matches_layout() {
        for cfg in [
            ModelConfig::default(),
            ModelConfig { input_dim: 3, hidden1: 4, hidden2: 2, num_classes: 3, ts: 2 },
        ] {
            let from_layout: usize = cfg.layout().iter().map(TensorSpec::len).sum();
            let (n, h1, h2, c) = (cfg.input_dim, cfg.hidden1, cfg.hidden2, cfg.num_classes);
            let closed = 4 * h1 * (n + h1 + 1) + 4 * h2 * (h1 + h2 + 1) + c * (h2 + 1);
            assert_eq!(from_layout, closed);
            assert_eq!(cfg.parameter_count(), closed);
            let mut next = 0;
            for spec in cfg.layout() {
                assert_eq!(spec.offset, next);
                next += spec.len();
            }
        }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let cfg = ModelConfig { input_dim: 9, hidden1: 6, hidden2: 5, num_classes: 4, ts: 3 };
        let a = ModelParameters::init(cfg, 7).unwrap();
        assert_eq!(a, ModelParameters::init(cfg, 7).unwrap());
        assert_ne!(a, ModelParameters::init(cfg, 8).unwrap());
        let k = a.tensor("lstm1.kernel").unwrap();
        assert!(k.iter().all(|v| v.abs() <= 1.0 / 3.0));
        let b = a.tensor("lstm1.bias").unwrap();
        assert!(b[6..12].iter().all(|v| *v == 1.0));
        assert!(b[..6].iter().chain(&b[12..]).all(|v| *v == 0.0));
        assert!(a.tensor("dense.bias").unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_dimension_rejected() {
        let cfg = ModelConfig { hidden2: 0, ..ModelConfig::default() };
        assert!(ModelParameters::init(cfg, 0).is_err());
    }
}
