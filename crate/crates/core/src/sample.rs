//! Minority oversampling (SMOTE, random duplication) and majority
//! undersampling, producing a class-balanced training set.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SYNTHETIC_ID_BASE};
use crate::error::{Error, Result};

/// How synthetic interpolation weights are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    /// One uniform weight per coordinate.
    Vector,
    /// A single uniform weight shared by all coordinates, as in the original
    /// SMOTE formulation.
    Scalar,
}

/// SMOTE parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    /// Number of nearest minority neighbors to interpolate towards.
    pub k: usize,
    /// Desired minority/majority count ratio after sampling.
    pub target_ratio: f64,
    pub seed: u64,
    pub gamma_mode: GammaMode,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig { k: 5, target_ratio: 1.0, seed: 0, gamma_mode: GammaMode::Vector }
    }
}

impl SmoteConfig {
    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::InvalidInput("target_ratio must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Origin of one synthetic row: global row indices of the base minority
/// point and the chosen neighbor, plus a digest of the interpolation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub gamma_digest: u64,
}

/// Result of a sampling operation. For SMOTE, `origins[i]` describes
/// appended row `n_original + i`.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub dataset: Dataset,
    pub origins: Vec<SyntheticOrigin>,
}

impl Sampled {
    /// Write the provenance sidecar: one line per synthetic row.
    pub fn write_provenance(&self, path: &Path, n_original: usize) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "# synthetic_row\tbase\tneighbor\tgamma_digest")?;
        for (i, o) in self.origins.iter().enumerate() {
            writeln!(f, "{}\t{}\t{}\t{:016x}", n_original + i, o.base, o.neighbor, o.gamma_digest)?;
        }
        Ok(())
    }
}

/// Exact k-nearest-neighbor lists among minority rows by Euclidean distance,
/// self excluded, ties broken by lower row index.
pub fn knn_minority(x_min: &[&[f64]], k: usize) -> Result<Vec<Vec<usize>>> {
    let n = x_min.len();
    if n < k + 1 {
        return Err(Error::InvalidInput(format!(
            "minority class has {n} rows but k={k} requires at least {} (lower k)",
            k + 1
        )));
    }
    let mut out = Vec::with_capacity(n);
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        dists.clear();
        for j in 0..n {
            if j == i {
                continue;
            }
            let d2: f64 = x_min[i]
                .iter()
                .zip(x_min[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push((d2, j));
        }
        // Ties break toward the lower index.
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        out.push(dists.iter().take(k).map(|&(_, j)| j).collect());
    }
    Ok(out)
}

/// Interpolate between a base row and its neighbor with per-coordinate
/// weights: `base + gamma * (neighbor - base)`.
#[inline]
pub(crate) fn interpolate(base: &[f64], neighbor: &[f64], gamma: &[f64]) -> Vec<f64> {
    base.iter()
        .zip(neighbor)
        .zip(gamma)
        .map(|((&b, &n), &g)| b + g * (n - b))
        .collect()
}

fn fnv1a(bytes: impl Iterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Count of minority rows needed to reach `ratio * majority`.
pub fn synthetic_needed(majority: usize, minority: usize, ratio: f64) -> usize {
    let target = (ratio * majority as f64).round() as usize;
    target.saturating_sub(minority)
}

struct ClassSplit {
    minority_label: u8,
    minority_rows: Vec<usize>,
    majority_rows: Vec<usize>,
}

fn split_classes(d: &Dataset) -> Result<ClassSplit> {
    let (n0, n1) = d.label_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::InvalidInput(
            "sampling requires both classes to be present".into(),
        ));
    }
    // On a tie the attack class counts as majority.
    let minority_label = if n0 <= n1 { 0 } else { 1 };
    let minority_rows: Vec<usize> =
        (0..d.n_rows()).filter(|&i| d.y[i] == minority_label).collect();
    let majority_rows: Vec<usize> =
        (0..d.n_rows()).filter(|&i| d.y[i] != minority_label).collect();
    Ok(ClassSplit { minority_label, minority_rows, majority_rows })
}

/// SMOTE: append synthetic minority rows until the minority count reaches
/// `round(target_ratio * majority)`.
///
/// Each synthetic row interpolates between a minority row and one of its k
/// nearest minority neighbors; original rows are retained unchanged ahead of
/// the appended ones. Deterministic for a fixed seed.
pub fn smote(d: &Dataset, cfg: &SmoteConfig) -> Result<Sampled> {
    cfg.validate()?;
    let split = split_classes(d)?;
    let n_min = split.minority_rows.len();
    let n_maj = split.majority_rows.len();
    if n_min <= cfg.k {
        return Err(Error::InvalidInput(format!(
            "minority class has {n_min} rows but k={} requires more (lower k)",
            cfg.k
        )));
    }

    let needed = synthetic_needed(n_maj, n_min, cfg.target_ratio);
    let min_views: Vec<&[f64]> = split.minority_rows.iter().map(|&i| d.x.row(i)).collect();
    let neighbors = knn_minority(&min_views, cfg.k)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Every minority point contributes floor(needed / n_min) synthetics; a
    // uniformly chosen remainder set contributes one more each.
    let per_point = needed / n_min;
    let remainder = needed % n_min;
    let mut extra = vec![false; n_min];
    {
        // Partial Fisher-Yates over minority indices.
        let mut idx: Vec<usize> = (0..n_min).collect();
        for t in 0..remainder {
            let j = rng.gen_range(t..n_min);
            idx.swap(t, j);
        }
        for &i in idx.iter().take(remainder) {
            extra[i] = true;
        }
    }

    let mut out = d.clone();
    let mut origins = Vec::with_capacity(needed);
    let d_cols = d.n_cols();
    let mut gamma = vec![0.0; d_cols];
    let mut next_id = SYNTHETIC_ID_BASE;

    for (mi, &row_i) in split.minority_rows.iter().enumerate() {
        let reps = per_point + usize::from(extra[mi]);
        for _ in 0..reps {
            let nbr_local = neighbors[mi][rng.gen_range(0..cfg.k)];
            let row_l = split.minority_rows[nbr_local];
            match cfg.gamma_mode {
                GammaMode::Vector => {
                    for g in gamma.iter_mut() {
                        *g = rng.gen_range(0.0..1.0);
                    }
                }
                GammaMode::Scalar => {
                    let g = rng.gen_range(0.0..1.0);
                    gamma.iter_mut().for_each(|v| *v = g);
                }
            }
            let synth = interpolate(d.x.row(row_i), d.x.row(row_l), &gamma);
            out.x.push_row(&synth);
            out.y.push(split.minority_label);
            out.row_ids.push(next_id);
            next_id += 1;
            origins.push(SyntheticOrigin {
                base: row_i,
                neighbor: row_l,
                gamma_digest: fnv1a(gamma.iter().flat_map(|g| g.to_le_bytes())),
            });
        }
    }

    Ok(Sampled { dataset: out, origins })
}

/// Random oversampling: duplicate minority rows uniformly with replacement
/// until the ratio target is met.
pub fn random_oversample(d: &Dataset, target_ratio: f64, seed: u64) -> Result<Sampled> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::InvalidInput("target_ratio must be in (0, 1]".into()));
    }
    let split = split_classes(d)?;
    let needed =
        synthetic_needed(split.majority_rows.len(), split.minority_rows.len(), target_ratio);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = d.clone();
    for _ in 0..needed {
        let src = split.minority_rows[rng.gen_range(0..split.minority_rows.len())];
        let row = out.x.row(src).to_vec();
        out.x.push_row(&row);
        out.y.push(split.minority_label);
        // A duplicate carries its source row id.
        out.row_ids.push(d.row_ids[src]);
    }
    Ok(Sampled { dataset: out, origins: Vec::new() })
}

/// Random undersampling: discard majority rows uniformly without replacement
/// until minority/majority reaches `target_ratio`. Minority rows and row
/// order are untouched.
pub fn random_undersample(d: &Dataset, target_ratio: f64, seed: u64) -> Result<Sampled> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::InvalidInput("target_ratio must be in (0, 1]".into()));
    }
    let split = split_classes(d)?;
    let n_min = split.minority_rows.len();
    let n_maj = split.majority_rows.len();
    let keep_majority = (n_min as f64 / target_ratio).round() as usize;
    if keep_majority > n_maj {
        return Err(Error::InvalidInput(format!(
            "cannot undersample: ratio {target_ratio} needs {keep_majority} majority rows, only {n_maj} exist"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Choose survivors by partial Fisher-Yates, then restore original order.
    let mut idx = split.majority_rows.clone();
    for t in 0..keep_majority {
        let j = rng.gen_range(t..idx.len());
        idx.swap(t, j);
    }
    let mut keep: Vec<usize> = idx[..keep_majority].to_vec();
    keep.extend(&split.minority_rows);
    keep.sort_unstable();

    Ok(Sampled { dataset: d.select_rows(&keep), origins: Vec::new() })
}
