//! Synthetic imbalanced-traffic generation for desk-scale runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset, Matrix};
use crate::error::{Error, Result};

/// Parameters of a two-blob imbalanced dataset: a majority "attack" blob and
/// a minority "normal" blob whose means differ by `class_separation` on
/// every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_majority: usize,
    pub n_minority: usize,
    pub n_features: usize,
    pub class_separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_majority: 7500,
            n_minority: 100,
            n_features: 4,
            class_separation: 2.6,
            noise_sigma: 1.0,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_majority < 1 || self.n_minority < 1 || self.n_features < 1 {
            return Err(Error::InvalidInput(
                "n_majority, n_minority and n_features must all be >= 1".into(),
            ));
        }
        if self.class_separation < 0.0 || self.noise_sigma < 0.0 {
            return Err(Error::InvalidInput(
                "class_separation and noise_sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Generate the two Gaussian blobs described by `spec`.
///
/// Majority rows (label 1) come first with mean `class_separation` on every
/// coordinate, then minority rows (label 0) with mean 0. Deterministic for a
/// fixed seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;

    let n = spec.n_majority + spec.n_minority;
    let d = spec.n_features;
    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);

    for _ in 0..spec.n_majority {
        for _ in 0..d {
            data.push(spec.class_separation + noise(&normal, spec.noise_sigma, &mut rng));
        }
        y.push(1);
    }
    for _ in 0..spec.n_minority {
        for _ in 0..d {
            data.push(noise(&normal, spec.noise_sigma, &mut rng));
        }
        y.push(0);
    }

    let columns = (0..d).map(|j| Column::numeric(&format!("f{j}"))).collect();
    Ok(Dataset::new(columns, Matrix::from_vec(data, n, d), y, "label"))
}

fn noise(normal: &Normal<f64>, sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        normal.sample(rng)
    }
}
