//! Forward pass, loss and backpropagation through time.

use super::{ModelConfig, ModelError, ModelParameters, Offsets};
use crate::timeseries::WindowedDataset;

/// Gradients share the parameter layout.
pub type Gradients = ModelParameters;

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Activations of one LSTM layer over a whole sequence.
#[derive(Debug, Clone)]
struct LayerTrace {
    hidden: usize,
    steps: usize,
    /// `steps × 4h` activated gates (i, f, g, o).
    gates: Vec<f64>,
    /// `(steps + 1) × h`, entry 0 is the zero initial state.
    c: Vec<f64>,
    h: Vec<f64>,
    /// `steps × h`.
    tanh_c: Vec<f64>,
}

impl LayerTrace {
    fn new(hidden: usize, steps: usize) -> Self {
        Self {
            hidden,
            steps,
            gates: vec![0.0; steps * 4 * hidden],
            c: vec![0.0; (steps + 1) * hidden],
            h: vec![0.0; (steps + 1) * hidden],
            tanh_c: vec![0.0; steps * hidden],
        }
    }

    fn h_at(&self, t: usize) -> &[f64] {
        &self.h[(t + 1) * self.hidden..(t + 2) * self.hidden]
    }
}

struct LayerWeights<'a> {
    w: &'a [f64],
    u: &'a [f64],
    b: &'a [f64],
    in_dim: usize,
    hidden: usize,
}

fn layer_forward(lw: &LayerWeights<'_>, input: &[f64], tr: &mut LayerTrace) {
    let (h, i_dim) = (lw.hidden, lw.in_dim);
    for t in 0..tr.steps {
        let x = &input[t * i_dim..(t + 1) * i_dim];
        let (h_done, h_rest) = tr.h.split_at_mut((t + 1) * h);
        let h_prev = &h_done[t * h..];
        let z = &mut tr.gates[t * 4 * h..(t + 1) * 4 * h];
        for r in 0..4 * h {
            z[r] = lw.b[r]
                + dot(&lw.w[r * i_dim..(r + 1) * i_dim], x)
                + dot(&lw.u[r * h..(r + 1) * h], h_prev);
        }
        let (c_done, c_rest) = tr.c.split_at_mut((t + 1) * h);
        let c_prev = &c_done[t * h..];
        for k in 0..h {
            let ig = sigmoid(z[k]);
            let fg = sigmoid(z[h + k]);
            let gg = z[2 * h + k].tanh();
            let og = sigmoid(z[3 * h + k]);
            z[k] = ig;
            z[h + k] = fg;
            z[2 * h + k] = gg;
            z[3 * h + k] = og;
            let c = fg * c_prev[k] + ig * gg;
            let tc = c.tanh();
            c_rest[k] = c;
            tr.tanh_c[t * h + k] = tc;
            h_rest[k] = og * tc;
        }
    }
}

struct LayerGrads<'a> {
    w: &'a mut [f64],
    u: &'a mut [f64],
    b: &'a mut [f64],
}

/// Accumulates parameter gradients and, when `d_input` is given, writes the
/// gradient with respect to the layer input (overwriting it).
fn layer_backward(
    lw: &LayerWeights<'_>,
    input: &[f64],
    tr: &LayerTrace,
    dh_ext: &[f64],
    g: &mut LayerGrads<'_>,
    mut d_input: Option<&mut [f64]>,
    scratch: &mut BackwardScratch,
) {
    let (h, i_dim) = (lw.hidden, lw.in_dim);
    let dh_next = &mut scratch.dh_next[..h];
    let dc_next = &mut scratch.dc_next[..h];
    let dz = &mut scratch.dz[..4 * h];
    dh_next.fill(0.0);
    dc_next.fill(0.0);
    if let Some(d) = d_input.as_deref_mut() {
        d.fill(0.0);
    }
    for t in (0..tr.steps).rev() {
        let gates = &tr.gates[t * 4 * h..(t + 1) * 4 * h];
        let c_prev = &tr.c[t * h..(t + 1) * h];
        for k in 0..h {
            let (ig, fg, gg, og) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let tc = tr.tanh_c[t * h + k];
            let dh = dh_ext[t * h + k] + dh_next[k];
            let dc = dh * og * (1.0 - tc * tc) + dc_next[k];
            dc_next[k] = dc * fg;
            dz[k] = dc * gg * ig * (1.0 - ig);
            dz[h + k] = dc * c_prev[k] * fg * (1.0 - fg);
            dz[2 * h + k] = dc * ig * (1.0 - gg * gg);
            dz[3 * h + k] = dh * tc * og * (1.0 - og);
        }
        let x = &input[t * i_dim..(t + 1) * i_dim];
        let h_prev = &tr.h[t * h..(t + 1) * h];
        dh_next.fill(0.0);
        for r in 0..4 * h {
            let d = dz[r];
            if d == 0.0 {
                continue;
            }
            g.b[r] += d;
            axpy(d, x, &mut g.w[r * i_dim..(r + 1) * i_dim]);
            axpy(d, h_prev, &mut g.u[r * h..(r + 1) * h]);
            axpy(d, &lw.u[r * h..(r + 1) * h], dh_next);
            if let Some(di) = d_input.as_deref_mut() {
                axpy(d, &lw.w[r * i_dim..(r + 1) * i_dim], &mut di[t * i_dim..(t + 1) * i_dim]);
            }
        }
    }
}

#[derive(Debug, Clone)]
struct BackwardScratch {
    dh_next: Vec<f64>,
    dc_next: Vec<f64>,
    dz: Vec<f64>,
}

/// Reusable buffers for one sample's forward and backward pass.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    cfg: ModelConfig,
    l1: LayerTrace,
    l2: LayerTrace,
    /// ReLU of the layer-1 sequence, `ts × h1`.
    a1: Vec<f64>,
    /// ReLU of layer 2's last hidden state.
    a2: Vec<f64>,
    probs: Vec<f64>,
    dlogits: Vec<f64>,
    da1: Vec<f64>,
    dh1: Vec<f64>,
    dh2: Vec<f64>,
    scratch: BackwardScratch,
}

impl Workspace {
    pub(crate) fn new(cfg: &ModelConfig) -> Self {
        let (ts, h1, h2, c) = (cfg.ts, cfg.hidden1, cfg.hidden2, cfg.num_classes);
        let hmax = h1.max(h2);
        Self {
            cfg: *cfg,
            l1: LayerTrace::new(h1, ts),
            l2: LayerTrace::new(h2, ts),
            a1: vec![0.0; ts * h1],
            a2: vec![0.0; h2],
            probs: vec![0.0; c],
            dlogits: vec![0.0; c],
            da1: vec![0.0; ts * h1],
            dh1: vec![0.0; ts * h1],
            dh2: vec![0.0; ts * h2],
            scratch: BackwardScratch {
                dh_next: vec![0.0; hmax],
                dc_next: vec![0.0; hmax],
                dz: vec![0.0; 4 * hmax],
            },
        }
    }

    fn layers<'a>(p: &'a [f64], cfg: &ModelConfig, o: &Offsets) -> (LayerWeights<'a>, LayerWeights<'a>) {
        let (n, h1, h2) = (cfg.input_dim, cfg.hidden1, cfg.hidden2);
        (
            LayerWeights {
                w: &p[o.l1_w..o.l1_u],
                u: &p[o.l1_u..o.l1_b],
                b: &p[o.l1_b..o.l2_w],
                in_dim: n,
                hidden: h1,
            },
            LayerWeights {
                w: &p[o.l2_w..o.l2_u],
                u: &p[o.l2_u..o.l2_b],
                b: &p[o.l2_b..o.d_w],
                in_dim: h1,
                hidden: h2,
            },
        )
    }

    /// Runs one `ts × n` sample; probabilities end up in `self.probs`.
    fn forward_sample(&mut self, params: &[f64], o: &Offsets, x: &[f64]) -> Result<(), ModelError> {
        let cfg = self.cfg;
        let (l1, l2) = Self::layers(params, &cfg, o);
        layer_forward(&l1, x, &mut self.l1);
        for (a, &h) in self.a1.iter_mut().zip(&self.l1.h[cfg.hidden1..]) {
            *a = h.max(0.0);
        }
        if !self.a1.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NumericOverflow { layer: "lstm1" });
        }
        layer_forward(&l2, &self.a1, &mut self.l2);
        let last = self.l2.h_at(cfg.ts - 1);
        for (a, &h) in self.a2.iter_mut().zip(last) {
            *a = h.max(0.0);
        }
        if !self.a2.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NumericOverflow { layer: "lstm2" });
        }
        let (h2, c) = (cfg.hidden2, cfg.num_classes);
        let dw = &params[o.d_w..o.d_b];
        let db = &params[o.d_b..o.total];
        for k in 0..c {
            self.probs[k] = db[k] + dot(&dw[k * h2..(k + 1) * h2], &self.a2);
        }
        softmax_in_place(&mut self.probs);
        if !self.probs.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NumericOverflow { layer: "dense" });
        }
        Ok(())
    }

    /// Backward pass for the sample last run through `forward_sample`,
    /// scaling its loss gradient by `scale`. Returns the sample loss.
    fn backward_sample(
        &mut self,
        params: &[f64],
        o: &Offsets,
        x: &[f64],
        label: usize,
        scale: f64,
        grads: &mut [f64],
    ) -> f64 {
        let cfg = self.cfg;
        let (ts, h1, h2, c) = (cfg.ts, cfg.hidden1, cfg.hidden2, cfg.num_classes);
        let p_true = self.probs[label];
        let loss = -p_true.max(PROB_FLOOR).ln();
        if p_true < PROB_FLOOR {
            // The clamp makes the loss locally constant.
            return loss;
        }
        for k in 0..c {
            self.dlogits[k] = scale * (self.probs[k] - f64::from(u8::from(k == label)));
        }
        let (g_l1, rest) = grads.split_at_mut(o.l2_w);
        let (g_l2, g_d) = rest.split_at_mut(o.d_w - o.l2_w);
        let (g_dw, g_db) = g_d.split_at_mut(o.d_b - o.d_w);
        let dw = &params[o.d_w..o.d_b];
        let h2_last = self.l2.h_at(ts - 1);
        self.dh2.fill(0.0);
        let dh2_last = &mut self.dh2[(ts - 1) * h2..];
        for k in 0..c {
            let d = self.dlogits[k];
            g_db[k] += d;
            axpy(d, &self.a2, &mut g_dw[k * h2..(k + 1) * h2]);
            axpy(d, &dw[k * h2..(k + 1) * h2], dh2_last);
        }
        for (d, &h) in dh2_last.iter_mut().zip(h2_last) {
            if h <= 0.0 {
                *d = 0.0;
            }
        }

        let (l1, l2) = Self::layers(params, &cfg, o);
        {
            let (gw, rest) = g_l2.split_at_mut(o.l2_u - o.l2_w);
            let (gu, gb) = rest.split_at_mut(o.l2_b - o.l2_u);
            let mut lg = LayerGrads { w: gw, u: gu, b: gb };
            layer_backward(&l2, &self.a1, &self.l2, &self.dh2, &mut lg, Some(&mut self.da1), &mut self.scratch);
        }
        for ((d, &da), &h) in self.dh1.iter_mut().zip(&self.da1).zip(&self.l1.h[h1..]) {
            *d = if h > 0.0 { da } else { 0.0 };
        }
        {
            let (gw, rest) = g_l1.split_at_mut(o.l1_u - o.l1_w);
            let (gu, gb) = rest.split_at_mut(o.l1_b - o.l1_u);
            let mut lg = LayerGrads { w: gw, u: gu, b: gb };
            layer_backward(&l1, x, &self.l1, &self.dh1, &mut lg, None, &mut self.scratch);
        }
        loss
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn check_inputs(cfg: &ModelConfig, inputs: &[f64], batch: usize) -> Result<(), ModelError> {
    let per = cfg.ts * cfg.input_dim;
    if inputs.len() != batch * per {
        return Err(ModelError::ShapeMismatch(format!(
            "batch of {batch} needs {} values (ts={}, n={}), got {}",
            batch * per,
            cfg.ts,
            cfg.input_dim,
            inputs.len()
        )));
    }
    if inputs.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::InvalidArgument("inputs contain non-finite values".into()));
    }
    Ok(())
}

/// Class probabilities, `batch × num_classes`, for `batch` samples laid out
/// as consecutive `ts × n` blocks.
pub fn forward(params: &ModelParameters, inputs: &[f64], batch: usize) -> Result<Vec<f64>, ModelError> {
    let cfg = *params.config();
    check_inputs(&cfg, inputs, batch)?;
    let o = cfg.offsets();
    let per = cfg.ts * cfg.input_dim;
    let mut ws = Workspace::new(&cfg);
    let mut out = Vec::with_capacity(batch * cfg.num_classes);
    for x in inputs.chunks_exact(per) {
        ws.forward_sample(params.values(), &o, x)?;
        out.extend_from_slice(&ws.probs);
    }
    Ok(out)
}

/// Mean categorical cross-entropy with probabilities clamped at [`PROB_FLOOR`].
pub fn loss(probs: &[f64], labels: &[usize], num_classes: usize) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -probs[i * num_classes + y].max(PROB_FLOOR).ln())
        .sum();
    total / labels.len() as f64
}

fn check_labels(cfg: &ModelConfig, labels: &[usize]) -> Result<(), ModelError> {
    if let Some(&bad) = labels.iter().find(|&&y| y >= cfg.num_classes) {
        return Err(ModelError::InvalidArgument(format!(
            "label {bad} outside {} classes",
            cfg.num_classes
        )));
    }
    Ok(())
}

/// Mean loss and its exact gradient over a batch.
pub fn backward(
    params: &ModelParameters,
    inputs: &[f64],
    labels: &[usize],
) -> Result<(f64, Gradients), ModelError> {
    let cfg = *params.config();
    check_inputs(&cfg, inputs, labels.len())?;
    check_labels(&cfg, labels)?;
    if labels.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let per = cfg.ts * cfg.input_dim;
    let mut grads = ModelParameters::zeros(cfg);
    let mut ws = Workspace::new(&cfg);
    let loss = accumulate(
        params,
        inputs.chunks_exact(per).zip(labels.iter().copied()),
        labels.len(),
        &mut ws,
        grads.values_mut(),
    )?;
    Ok((loss, grads))
}

/// Adds the mean-loss gradient of `samples` into `grads`; returns the mean loss.
pub(crate) fn accumulate<'a>(
    params: &ModelParameters,
    samples: impl Iterator<Item = (&'a [f64], usize)>,
    count: usize,
    ws: &mut Workspace,
    grads: &mut [f64],
) -> Result<f64, ModelError> {
    let o = params.config().offsets();
    let scale = 1.0 / count as f64;
    let mut total = 0.0;
    for (x, y) in samples {
        ws.forward_sample(params.values(), &o, x)?;
        total += ws.backward_sample(params.values(), &o, x, y, scale, grads);
    }
    Ok(total * scale)
}

/// Arg-max predictions and mean loss over a windowed dataset.
pub fn predict(params: &ModelParameters, data: &WindowedDataset) -> Result<(Vec<usize>, f64), ModelError> {
    let cfg = *params.config();
    if data.ts() != cfg.ts || data.n_features() != cfg.input_dim {
        return Err(ModelError::ShapeMismatch(format!(
            "data is (ts={}, n={}), model expects (ts={}, n={})",
            data.ts(),
            data.n_features(),
            cfg.ts,
            cfg.input_dim
        )));
    }
    check_labels(&cfg, data.labels())?;
    let o = cfg.offsets();
    let mut ws = Workspace::new(&cfg);
    let mut preds = Vec::with_capacity(data.len());
    let mut total = 0.0;
    for i in 0..data.len() {
        ws.forward_sample(params.values(), &o, data.window(i))?;
        let best = ws
            .probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &p)| if p > acc.1 { (k, p) } else { acc });
        preds.push(best.0);
        total -= ws.probs[data.labels()[i]].max(PROB_FLOOR).ln();
    }
    let mean = if data.is_empty() { 0.0 } else { total / data.len() as f64 };
    Ok((preds, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> ModelConfig {
        ModelConfig { input_dim: 3, hidden1: 4, hidden2: 4, num_classes: 3, ts: 2 }
    }

    fn random_inputs(cfg: &ModelConfig, batch: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..batch * cfg.ts * cfg.input_dim).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    /// Straight-line scalar LSTM written independently of the vectorised
    /// code: explicit per-gate loops, no shared buffers.
    fn scalar_reference(p: &ModelParameters, x: &[f64]) -> Vec<f64> {
        let cfg = *p.config();
        let get = |name: &str| p.tensor(name).unwrap().to_vec();
        let run = |w: &[f64], u: &[f64], b: &[f64], inp: &[Vec<f64>], h_n: usize| -> Vec<Vec<f64>> {
            let mut h = vec![0.0; h_n];
            let mut c = vec![0.0; h_n];
            let mut out = Vec::new();
            for xt in inp {
                let pre = |gate: usize, k: usize| -> f64 {
                    let r = gate * h_n + k;
                    let mut s = b[r];
                    for (j, xv) in xt.iter().enumerate() {
                        s += w[r * xt.len() + j] * xv;
                    }
                    for (j, hv) in h.iter().enumerate() {
                        s += u[r * h_n + j] * hv;
                    }
                    s
                };
                let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
                let mut nh = vec![0.0; h_n];
                let mut nc = vec![0.0; h_n];
                for k in 0..h_n {
                    let i = sig(pre(0, k));
                    let f = sig(pre(1, k));
                    let g = pre(2, k).tanh();
                    let o = sig(pre(3, k));
                    nc[k] = f * c[k] + i * g;
                    nh[k] = o * nc[k].tanh();
                }
                h = nh;
                c = nc;
                out.push(h.clone());
            }
            out
        };
        let xs: Vec<Vec<f64>> = x.chunks(cfg.input_dim).map(|r| r.to_vec()).collect();
        let h1 = run(&get("lstm1.kernel"), &get("lstm1.recurrent_kernel"), &get("lstm1.bias"), &xs, cfg.hidden1);
        let a1: Vec<Vec<f64>> = h1.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect();
        let h2 = run(&get("lstm2.kernel"), &get("lstm2.recurrent_kernel"), &get("lstm2.bias"), &a1, cfg.hidden2);
        let a2: Vec<f64> = h2.last().unwrap().iter().map(|v| v.max(0.0)).collect();
        let dw = get("dense.kernel");
        let db = get("dense.bias");
        let logits: Vec<f64> = (0..cfg.num_classes)
            .map(|k| db[k] + (0..cfg.hidden2).map(|j| dw[k * cfg.hidden2 + j] * a2[j]).sum::<f64>())
            .collect();
        let m = logits.iter().cloned().fold(f64::MIN, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }

    #[test]
    fn rows_sum_to_one() {
        let cfg = ModelConfig { input_dim: 5, hidden1: 7, hidden2: 3, num_classes: 6, ts: 4 };
        let p = ModelParameters::init(cfg, 1).unwrap();
        let probs = forward(&p, &random_inputs(&cfg, 9, 2), 9).unwrap();
        for row in probs.chunks(6) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn zero_parameters_give_uniform() {
        let cfg = tiny();
        let p = ModelParameters::zeros(cfg);
        let probs = forward(&p, &random_inputs(&cfg, 3, 4), 3).unwrap();
        assert!(probs.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn matches_scalar_reference() {
        let cfg = tiny();
        for seed in 0..5 {
            let p = ModelParameters::init(cfg, seed).unwrap();
            let x = random_inputs(&cfg, 1, seed + 100);
            let got = forward(&p, &x, 1).unwrap();
            let want = scalar_reference(&p, &x);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let cfg = tiny();
        let p = ModelParameters::init(cfg, 0).unwrap();
        assert!(matches!(forward(&p, &[0.0; 5], 1), Err(ModelError::ShapeMismatch(_))));
        assert!(backward(&p, &[0.0; 6], &[3]).is_err());
    }

    #[test]
    fn overflow_names_layer() {
        let cfg = tiny();
        let mut p = ModelParameters::init(cfg, 0).unwrap();
        let o = cfg.offsets();
        p.values_mut()[o.d_w] = f64::INFINITY;
        let err = forward(&p, &random_inputs(&cfg, 1, 0), 1).unwrap_err();
        assert!(matches!(err, ModelError::NumericOverflow { layer: "dense" }), "{err:?}");
    }

    #[test]
    fn loss_values() {
        assert!(loss(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], &[0, 1], 3).abs() < 1e-9);
        let u = [0.25; 8];
        assert!((loss(&u, &[1, 3], 4) - 4f64.ln()).abs() < 1e-9);
        assert!((loss(&[0.7, 0.2, 0.1], &[0], 3) - 0.356675).abs() < 1e-6);
        assert!((loss(&[0.0, 1.0], &[0], 2) - -(1e-12f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn batch_of_copies_matches_single() {
        let cfg = tiny();
        let p = ModelParameters::init(cfg, 3).unwrap();
        let x = random_inputs(&cfg, 1, 9);
        let (_, g1) = backward(&p, &x, &[2]).unwrap();
        let xs: Vec<f64> = x.iter().cycle().take(x.len() * 5).copied().collect();
        let (_, g5) = backward(&p, &xs, &[2; 5]).unwrap();
        for (a, b) in g1.values().iter().zip(g5.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn saturated_prediction_has_no_gradient() {
        let cfg = tiny();
        let mut p = ModelParameters::init(cfg, 3).unwrap();
        let o = cfg.offsets();
        p.values_mut()[o.d_b + 1] = 60.0;
        let (l, g) = backward(&p, &random_inputs(&cfg, 1, 1), &[1]).unwrap();
        assert!(l < 1e-9);
        assert!(g.l2_norm() < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = ModelConfig { input_dim: 3, hidden1: 4, hidden2: 3, num_classes: 3, ts: 3 };
        let p = ModelParameters::init(cfg, 11).unwrap();
        let x = random_inputs(&cfg, 2, 12);
        let labels = [0, 2];
        let (_, g) = backward(&p, &x, &labels).unwrap();
        let f = |q: &ModelParameters| loss(&forward(q, &x, 2).unwrap(), &labels, 3);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..p.len() {
            let mut a = p.clone();
            a.values_mut()[i] += h;
            let mut b = p.clone();
            b.values_mut()[i] -= h;
            let num = (f(&a) - f(&b)) / (2.0 * h);
            let an = g.values()[i];
            worst = worst.max((an - num).abs() / an.abs().max(num.abs()).max(1e-6));
        }
        assert!(worst < 1e-4, "{worst}");
    }
}
