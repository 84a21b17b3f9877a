//! Gradient boosting on logistic loss: depth-limited regression trees fit to
//! negative gradients, combined sequentially with shrinkage.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, sort_features, GrowSettings, Target, LEAF};
use super::{Learned, Model, ModelSpec, TrainMeta};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub shrinkage: f64,
    /// Kept for the uniform interface; boosting has no stochastic source.
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams { rounds: 100, max_depth: 3, min_leaf: 1, shrinkage: 0.1, seed: 0 }
    }
}

impl GbtParams {
    fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidInput("max_depth must be >= 1".into()));
        }
        if !(self.shrinkage > 0.0) {
            return Err(Error::InvalidInput("shrinkage must be > 0".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidInput("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[inline]
pub(super) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable binary cross-entropy from logits.
#[inline]
fn bce_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

pub fn fit_gbt(d: &Dataset, spec: &ModelSpec, params: &GbtParams) -> Result<Model> {
    params.validate()?;
    let (n0, n1) = d.label_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::Fit("boosting requires both classes in training data".into()));
    }

    let n = d.n_rows();
    let y: Vec<f64> = d.y.iter().map(|&l| l as f64).collect();
    let prior = n1 as f64 / n as f64;
    let init = (prior / (1.0 - prior)).ln();

    let sorted = sort_features(&d.x);
    let settings = GrowSettings {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf as f64,
        mtry: d.n_cols(),
    };
    // The grower only draws randomness when subsampling features, which
    // boosting does not do.
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut raw = vec![init; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut loss_history = Vec::with_capacity(params.rounds + 1);
    loss_history.push(raw.iter().zip(&y).map(|(&z, &t)| bce_logit(z, t)).sum::<f64>() / n as f64);

    let mut trees = Vec::with_capacity(params.rounds);
    let mut warning = None;
    let mut rising_rounds = 0usize;

    for round in 0..params.rounds {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            grad[i] = y[i] - p;
            hess[i] = p * (1.0 - p);
        }

        let mut grown = grow(
            &d.x,
            &sorted,
            &Target::Residuals { grad: &grad, hess: &hess },
            &settings,
            &mut rng,
        );
        // Bake the learning rate into the leaf values.
        for node in grown.tree.nodes.iter_mut() {
            if node.feature == LEAF {
                node.value *= params.shrinkage;
            }
        }
        for i in 0..n {
            raw[i] += grown.tree.nodes[grown.leaf_of_row[i] as usize].value;
        }

        let loss = raw.iter().zip(&y).map(|(&z, &t)| bce_logit(z, t)).sum::<f64>() / n as f64;
        if loss > *loss_history.last().unwrap() {
            rising_rounds += 1;
        } else {
            rising_rounds = 0;
        }
        loss_history.push(loss);
        trees.push(grown.tree);

        if rising_rounds >= 10 {
            warning = Some(format!(
                "early stop after round {}: training loss rose for 10 consecutive rounds",
                round + 1
            ));
            break;
        }
    }

    let final_loss = *loss_history.last().unwrap();
    Ok(Model {
        version: super::MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        learned: Learned::Gbt { init, trees, n_features: d.n_cols(), loss_history },
        meta: TrainMeta { seed: params.seed, epochs_run: params.rounds, final_loss, warning },
    })
}
