//! Feedforward network: ReLU hidden layers, sigmoid output, binary
//! cross-entropy loss, mini-batch gradient descent via backpropagation.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Learned, Model, ModelSpec, TrainMeta};
use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    /// Hidden layer widths; must be non-empty.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams { hidden: vec![64, 32], learning_rate: 0.1, epochs: 50, batch_size: 256, seed: 0 }
    }
}

impl MlpParams {
    fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(Error::InvalidInput("mlp needs at least one hidden layer".into()));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidInput("hidden layer sizes must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidInput("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Row-major (n_out x n_in).
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub n_in: usize,
    pub n_out: usize,
}

/// The trainable network. Weights are publicly addressable by flat index so
/// analytic gradients can be checked against finite differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    pub layers: Vec<DenseLayer>,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[inline]
fn bce_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl MlpNet {
    /// Xavier-uniform initialization.
    pub fn init(n_in: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> MlpNet {
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for win in sizes.windows(2) {
            let (fan_in, fan_out) = (win[0], win[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            layers.push(DenseLayer { w, b: vec![0.0; fan_out], n_in: fan_in, n_out: fan_out });
        }
        MlpNet { layers }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    /// Forward pass to the output logit (pre-sigmoid).
    pub fn forward_logit(&self, row: &[f64]) -> f64 {
        let mut act = row.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.n_out];
            for o in 0..layer.n_out {
                let wrow = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                let mut z = layer.b[o];
                for (wi, ai) in wrow.iter().zip(&act) {
                    z += wi * ai;
                }
                next[o] = if li + 1 == self.layers.len() { z } else { z.max(0.0) };
            }
            act = next;
        }
        act[0]
    }

    /// Mean binary cross-entropy over the given rows.
    pub fn loss(&self, x: &Matrix, y: &[u8], rows: &[usize]) -> f64 {
        let mut total = 0.0;
        for &r in rows {
            total += bce_logit(self.forward_logit(x.row(r)), y[r] as f64);
        }
        total / rows.len() as f64
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn get_param(&self, idx: usize) -> f64 {
        let mut at = idx;
        for l in &self.layers {
            if at < l.w.len() {
                return l.w[at];
            }
            at -= l.w.len();
            if at < l.b.len() {
                return l.b[at];
            }
            at -= l.b.len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn set_param(&mut self, idx: usize, v: f64) {
        let mut at = idx;
        for l in &mut self.layers {
            if at < l.w.len() {
                l.w[at] = v;
                return;
            }
            at -= l.w.len();
            if at < l.b.len() {
                l.b[at] = v;
                return;
            }
            at -= l.b.len();
        }
        panic!("parameter index {idx} out of range");
    }

    /// Analytic gradient of the mean loss over `rows`, flattened in the same
    /// order as the flat parameter indexing. Returns (gradient, loss).
    pub fn gradients(&self, x: &Matrix, y: &[u8], rows: &[usize]) -> (Vec<f64>, f64) {
        let mut grads = Grads::zeros(self);
        let mut acts = Activations::new(self);
        let mut loss = 0.0;
        let scale = 1.0 / rows.len() as f64;
        for &r in rows {
            loss += self.backprop_into(x.row(r), y[r] as f64, scale, &mut acts, &mut grads);
        }
        (grads.flatten(self), loss * scale)
    }

    /// One-sample backprop accumulating scaled gradients; returns the
    /// unscaled sample loss.
    fn backprop_into(
        &self,
        row: &[f64],
        y: f64,
        scale: f64,
        acts: &mut Activations,
        grads: &mut Grads,
    ) -> f64 {
        let n_layers = self.layers.len();
        // Forward, keeping post-activation values per layer.
        acts.input.clear();
        acts.input.extend_from_slice(row);
        for (li, layer) in self.layers.iter().enumerate() {
            let src_len = if li == 0 { acts.input.len() } else { acts.post[li - 1].len() };
            debug_assert_eq!(src_len, layer.n_in);
            let (before, rest) = acts.post.split_at_mut(li);
            let src: &[f64] = if li == 0 { &acts.input } else { &before[li - 1] };
            let dst = &mut rest[0];
            for o in 0..layer.n_out {
                let wrow = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                let mut z = layer.b[o];
                for (wi, ai) in wrow.iter().zip(src) {
                    z += wi * ai;
                }
                dst[o] = if li + 1 == n_layers { z } else { z.max(0.0) };
            }
        }
        let logit = acts.post[n_layers - 1][0];
        let loss = bce_logit(logit, y);

        // Backward: delta holds dLoss/dz for the current layer.
        acts.delta[n_layers - 1][0] = sigmoid(logit) - y;
        for li in (0..n_layers).rev() {
            let layer = &self.layers[li];
            let (d_before, d_rest) = acts.delta.split_at_mut(li);
            let delta = &d_rest[0];
            let src: &[f64] = if li == 0 { &acts.input } else { &acts.post[li - 1] };

            let g = &mut grads.per_layer[li];
            for o in 0..layer.n_out {
                let dz = delta[o] * scale;
                let grow = &mut g.w[o * layer.n_in..(o + 1) * layer.n_in];
                for (gi, ai) in grow.iter_mut().zip(src) {
                    *gi += dz * ai;
                }
                g.b[o] += dz;
            }

            if li > 0 {
                let prev = &mut d_before[li - 1];
                prev.iter_mut().for_each(|v| *v = 0.0);
                for o in 0..layer.n_out {
                    let dz = delta[o];
                    let wrow = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                    for (p, wi) in prev.iter_mut().zip(wrow) {
                        *p += dz * wi;
                    }
                }
                // ReLU gate on the previous layer's post-activation.
                for (p, &a) in prev.iter_mut().zip(acts.post[li - 1].iter()) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
        }
        loss
    }
}

struct LayerGrads {
    w: Vec<f64>,
    b: Vec<f64>,
}

struct Grads {
    per_layer: Vec<LayerGrads>,
}

impl Grads {
    fn zeros(net: &MlpNet) -> Grads {
        Grads {
            per_layer: net
                .layers
                .iter()
                .map(|l| LayerGrads { w: vec![0.0; l.w.len()], b: vec![0.0; l.b.len()] })
                .collect(),
        }
    }

    fn reset(&mut self) {
        for g in &mut self.per_layer {
            g.w.iter_mut().for_each(|v| *v = 0.0);
            g.b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn flatten(&self, net: &MlpNet) -> Vec<f64> {
        let mut out = Vec::with_capacity(net.n_params());
        for g in &self.per_layer {
            out.extend_from_slice(&g.w);
            out.extend_from_slice(&g.b);
        }
        out
    }
}

struct Activations {
    input: Vec<f64>,
    post: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Activations {
    fn new(net: &MlpNet) -> Activations {
        Activations {
            input: Vec::with_capacity(net.layers[0].n_in),
            post: net.layers.iter().map(|l| vec![0.0; l.n_out]).collect(),
            delta: net.layers.iter().map(|l| vec![0.0; l.n_out]).collect(),
        }
    }
}

pub fn fit_mlp(d: &Dataset, spec: &ModelSpec, params: &MlpParams) -> Result<Model> {
    params.validate()?;
    let (n0, n1) = d.label_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::Fit("mlp requires both classes in training data".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut net = MlpNet::init(d.n_cols(), &params.hidden, &mut rng);
    let n = d.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut grads = Grads::zeros(&net);
    let mut acts = Activations::new(&net);
    let mut final_loss = f64::INFINITY;

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            grads.reset();
            let scale = 1.0 / batch.len() as f64;
            for &r in batch {
                epoch_loss += net.backprop_into(d.x.row(r), d.y[r] as f64, scale, &mut acts, &mut grads);
            }
            let mut finite = true;
            for (layer, g) in net.layers.iter_mut().zip(&grads.per_layer) {
                for (w, gw) in layer.w.iter_mut().zip(&g.w) {
                    *w -= params.learning_rate * gw;
                    finite &= w.is_finite();
                }
                for (b, gb) in layer.b.iter_mut().zip(&g.b) {
                    *b -= params.learning_rate * gb;
                    finite &= b.is_finite();
                }
            }
            if !finite {
                return Err(Error::Divergence {
                    eta: params.learning_rate,
                    msg: "mlp weights became non-finite".into(),
                });
            }
        }
        epoch_loss /= n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence {
                eta: params.learning_rate,
                msg: "mlp training loss became non-finite".into(),
            });
        }
        final_loss = epoch_loss;
    }

    Ok(Model {
        version: super::MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        learned: Learned::Mlp(net),
        meta: TrainMeta { seed: params.seed, epochs_run: params.epochs, final_loss, warning: None },
    })
}
