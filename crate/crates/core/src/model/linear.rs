//! Linear models trained by full-batch first-order methods: L2-penalized
//! logistic regression (gradient ascent on the log-likelihood) and a linear
//! SVC (subgradient descent on the primal hinge objective).

use serde::{Deserialize, Serialize};

use super::{Learned, Model, ModelSpec, TrainMeta};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearParams {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty weight; applied to `w`, not the bias.
    pub lambda: f64,
    /// Kept for the uniform interface; full-batch training is deterministic.
    pub seed: u64,
}

impl Default for LinearParams {
    fn default() -> Self {
        LinearParams { learning_rate: 0.1, epochs: 200, lambda: 1e-4, seed: 0 }
    }
}

impl LinearParams {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidInput("learning_rate must be > 0".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidInput("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

fn require_two_classes(d: &Dataset) -> Result<()> {
    let (n0, n1) = d.label_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::Fit("training data must contain both classes".into()));
    }
    Ok(())
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Stable -log-likelihood contribution for one sample, from the logit.
#[inline]
fn nll_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Logistic regression: maximize the penalized mean log-likelihood by
/// full-batch gradient ascent. Score is the positive-class probability.
pub fn fit_logreg(d: &Dataset, spec: &ModelSpec, params: &LinearParams) -> Result<Model> {
    params.validate()?;
    require_two_classes(d)?;

    let n = d.n_rows();
    let n_feat = d.n_cols();
    let mut w = vec![0.0; n_feat];
    let mut b = 0.0;
    let mut grad_w = vec![0.0; n_feat];
    let mut final_loss = f64::INFINITY;

    for _ in 0..params.epochs {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        let mut loss = 0.0;
        for i in 0..n {
            let row = d.x.row(i);
            let z = b + dot(&w, row);
            let y = d.y[i] as f64;
            loss += nll_logit(z, y);
            let resid = y - sigmoid(z);
            for (g, &v) in grad_w.iter_mut().zip(row) {
                *g += resid * v;
            }
            grad_b += resid;
        }
        loss = loss / n as f64 + 0.5 * params.lambda * sq_norm(&w);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                eta: params.learning_rate,
                msg: "logistic loss became non-finite".into(),
            });
        }
        final_loss = loss;

        let inv_n = 1.0 / n as f64;
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi += params.learning_rate * (g * inv_n - params.lambda * *wi);
        }
        b += params.learning_rate * grad_b * inv_n;
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                eta: params.learning_rate,
                msg: "weights became non-finite".into(),
            });
        }
    }

    Ok(Model {
        version: super::MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        learned: Learned::Linear { w, b, probability: true },
        meta: TrainMeta {
            seed: params.seed,
            epochs_run: params.epochs,
            final_loss,
            warning: None,
        },
    })
}

/// Linear SVC: minimize `(1/n) sum hinge + lambda ||w||^2` by deterministic
/// full-batch subgradient descent with step schedule `eta0 / (1 + t)`.
/// Score is the signed margin.
pub fn fit_linear_svc(d: &Dataset, spec: &ModelSpec, params: &LinearParams) -> Result<Model> {
    params.validate()?;
    require_two_classes(d)?;

    let n = d.n_rows();
    let n_feat = d.n_cols();
    // Labels mapped to {-1, +1}.
    let t: Vec<f64> = d.y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();

    let mut w = vec![0.0; n_feat];
    let mut b = 0.0;
    let mut grad_w = vec![0.0; n_feat];
    let mut final_loss = f64::INFINITY;

    for epoch in 0..params.epochs {
        let eta = params.learning_rate / (1.0 + epoch as f64);
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        let mut hinge_sum = 0.0;
        for i in 0..n {
            let row = d.x.row(i);
            let margin = t[i] * (b + dot(&w, row));
            if margin < 1.0 {
                hinge_sum += 1.0 - margin;
                for (g, &v) in grad_w.iter_mut().zip(row) {
                    *g -= t[i] * v;
                }
                grad_b -= t[i];
            }
        }
        let loss = hinge_sum / n as f64 + params.lambda * sq_norm(&w);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                eta: params.learning_rate,
                msg: "hinge loss became non-finite".into(),
            });
        }
        final_loss = loss;

        let inv_n = 1.0 / n as f64;
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= eta * (g * inv_n + 2.0 * params.lambda * *wi);
        }
        b -= eta * grad_b * inv_n;
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                eta: params.learning_rate,
                msg: "weights became non-finite".into(),
            });
        }
    }

    Ok(Model {
        version: super::MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        learned: Learned::Linear { w, b, probability: false },
        meta: TrainMeta {
            seed: params.seed,
            epochs_run: params.epochs,
            final_loss,
            warning: None,
        },
    })
}

#[inline]
pub(super) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
