//! Random forest: bagged Gini trees with per-split feature subsampling,
//! majority-vote prediction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, sort_features, GrowSettings, Target, Tree};
use super::{Learned, Model, ModelSpec, TrainMeta};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Features considered per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mtry {
    /// floor(sqrt(n_features)), at least 1.
    Sqrt,
    All,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows unlimited-depth trees.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Resample the training set with replacement per tree.
    pub bootstrap: bool,
    pub mtry: Mtry,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: Some(16),
            min_leaf: 1,
            bootstrap: true,
            mtry: Mtry::Sqrt,
            seed: 0,
        }
    }
}

impl ForestParams {
    /// Preset matching the larger ensemble used for full-scale runs.
    pub fn large_preset(seed: u64) -> ForestParams {
        ForestParams { n_trees: 1000, seed, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidInput("n_trees must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidInput("min_leaf must be >= 1".into()));
        }
        if let Mtry::Fixed(0) = self.mtry {
            return Err(Error::InvalidInput("mtry must be >= 1".into()));
        }
        Ok(())
    }

    fn mtry_count(&self, n_features: usize) -> usize {
        match self.mtry {
            Mtry::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            Mtry::All => n_features,
            Mtry::Fixed(k) => k.min(n_features),
        }
    }
}

pub fn fit_random_forest(d: &Dataset, spec: &ModelSpec, params: &ForestParams) -> Result<Model> {
    params.validate()?;
    if d.classes().len() < 2 {
        return Err(Error::Fit("random forest requires both classes in training data".into()));
    }

    let n = d.n_rows();
    let n_feat = d.n_cols();
    let sorted = sort_features(&d.x);
    let settings = GrowSettings {
        max_depth: params.max_depth.unwrap_or(usize::MAX),
        min_leaf: params.min_leaf as f64,
        mtry: params.mtry_count(n_feat),
    };

    let mut trees = Vec::with_capacity(params.n_trees);
    let mut split_gains = vec![0.0; n_feat];
    let mut weights = vec![1.0f64; n];

    for t in 0..params.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(t as u64);

        if params.bootstrap {
            weights.iter_mut().for_each(|w| *w = 0.0);
            for _ in 0..n {
                weights[rng.gen_range(0..n)] += 1.0;
            }
        }

        let grown = grow(
            &d.x,
            &sorted,
            &Target::Classes { y: &d.y, weights: &weights },
            &settings,
            &mut rng,
        );
        for (g, add) in split_gains.iter_mut().zip(&grown.gains) {
            *g += add;
        }
        trees.push(grown.tree);
    }

    Ok(Model {
        version: super::MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        learned: Learned::Forest { trees, split_gains, n_features: n_feat },
        meta: TrainMeta { seed: params.seed, epochs_run: params.n_trees, final_loss: 0.0, warning: None },
    })
}

/// Fraction of trees voting class 1.
pub(super) fn vote_fraction(trees: &[Tree], row: &[f64]) -> f64 {
    let ones: f64 = trees.iter().map(|t| t.predict_row(row)).sum();
    ones / trees.len() as f64
}
