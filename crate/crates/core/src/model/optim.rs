//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use super::{Gradients, ModelError, ModelParameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Number of steps taken so far.
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn for_params(params: &ModelParameters) -> Self {
        Self::new(params.len())
    }
}

/// One update at step `t` (1-based).
pub fn adam_step(
    params: &mut ModelParameters,
    grads: &Gradients,
    state: &mut AdamState,
    t: u64,
    cfg: &AdamConfig,
) -> Result<(), ModelError> {
    if t == 0 {
        return Err(ModelError::InvalidArgument("Adam step index starts at 1".into()));
    }
    let n = params.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(ModelError::ShapeMismatch(format!(
            "params {n}, gradients {}, moments {}/{}",
            grads.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    let ti = i32::try_from(t).unwrap_or(i32::MAX);
    let bc1 = 1.0 - cfg.beta1.powi(ti);
    let bc2 = 1.0 - cfg.beta2.powi(ti);
    let g = grads.values();
    for (i, p) in params.values_mut().iter_mut().enumerate() {
        let m = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
        let v = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        state.m[i] = m;
        state.v[i] = v;
        *p -= cfg.learning_rate * (m / bc1) / ((v / bc2).sqrt() + cfg.epsilon);
    }
    state.t = t;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn cfg() -> ModelConfig {
        ModelConfig { input_dim: 2, hidden1: 2, hidden2: 2, num_classes: 2, ts: 1 }
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let c = cfg();
        let mut p = ModelParameters::init(c, 1).unwrap();
        let before = p.clone();
        let g: Vec<f64> = (0..p.len()).map(|i| (i as f64 - 20.0) * 0.37 + 0.01).collect();
        let g = ModelParameters::from_values(c, g).unwrap();
        let mut s = AdamState::for_params(&p);
        adam_step(&mut p, &g, &mut s, 1, &AdamConfig::default()).unwrap();
        for i in 0..p.len() {
            let step = p.values()[i] - before.values()[i];
            let want = -0.001 * g.values()[i].signum();
            assert!((step - want).abs() < 1e-6, "{i}: {step} vs {want}");
        }
    }

    #[test]
    fn zero_gradient_only_decays_moments() {
        let c = cfg();
        let mut p = ModelParameters::init(c, 1).unwrap();
        let before = p.clone();
        let mut s = AdamState::for_params(&p);
        s.m.fill(0.5);
        s.v.fill(0.25);
        let mut zero_m = s.clone();
        zero_m.m.fill(0.0);
        let z = ModelParameters::zeros(c);
        let mut p2 = p.clone();
        adam_step(&mut p2, &z, &mut zero_m, 3, &AdamConfig::default()).unwrap();
        assert_eq!(p2, before);
        adam_step(&mut p, &z, &mut s, 3, &AdamConfig::default()).unwrap();
        assert!(s.m.iter().all(|m| (m - 0.45).abs() < 1e-15));
        assert!(s.v.iter().all(|v| (v - 0.24975).abs() < 1e-15));
    }

    #[test]
    fn deterministic_and_checked() {
        let c = cfg();
        let p0 = ModelParameters::init(c, 2).unwrap();
        let g = ModelParameters::init(c, 3).unwrap();
        let run = || {
            let mut p = p0.clone();
            let mut s = AdamState::for_params(&p);
            adam_step(&mut p, &g, &mut s, 1, &AdamConfig::default()).unwrap();
            adam_step(&mut p, &g, &mut s, 2, &AdamConfig::default()).unwrap();
            (p, s)
        };
        assert_eq!(run(), run());
        let mut p = p0.clone();
        let mut bad = AdamState::new(3);
        assert!(adam_step(&mut p, &g, &mut bad, 1, &AdamConfig::default()).is_err());
        let mut s = AdamState::for_params(&p);
        assert!(adam_step(&mut p, &g, &mut s, 0, &AdamConfig::default()).is_err());
    }
}
