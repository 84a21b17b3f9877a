//! Column dropping, one-hot encoding and min-max normalization, fitted on
//! training data only.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnKind, Dataset, Matrix};
use crate::error::{Error, Result};

/// Label used for the one-hot overflow bucket and for categories unseen at
/// fit time.
pub const OTHER_BUCKET: &str = "__other__";

/// Columns dropped by default: row identifiers and the aggregate-duration
/// statistics, which do not describe the traffic itself.
pub const DEFAULT_DROP: [&str; 8] =
    ["pkSeqID", "seq", "dur", "mean", "stddev", "sum", "min", "max"];

/// Options controlling [`Preprocessor::fit`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessOptions {
    /// Columns to drop. `None` applies the schema's default drop list
    /// (intersected with the columns actually present).
    pub drop: Option<Vec<String>>,
    /// Columns to one-hot encode. `None` keeps the kinds recorded on the
    /// dataset (i.e. the schema's categorical set).
    pub categorical: Option<Vec<String>>,
    /// Cap on categories kept per column; the rest fold into `__other__`.
    pub max_categories: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions { drop: None, categorical: None, max_categories: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OneHotMap {
    column: String,
    /// Kept categories, most frequent first; anything else routes to the
    /// overflow bucket appended after these.
    categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MinMax {
    column: String,
    min: f64,
    max: f64,
}

/// A fitted preprocessing pipeline: drop list, per-column one-hot maps and
/// per-numeric-column min/max statistics. Immutable after fit; `transform`
/// never updates statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    version: u32,
    pub dropped: Vec<String>,
    one_hot: Vec<OneHotMap>,
    minmax: Vec<MinMax>,
    /// Column names and kinds the preprocessor was fitted on, used to reject
    /// mismatched or already-transformed inputs.
    fitted_columns: Vec<(String, ColumnKind)>,
}

impl Preprocessor {
    /// Fit on training rows only: build category maps (most frequent first,
    /// truncated at `max_categories`) and numeric min/max statistics.
    pub fn fit(train: &Dataset, opts: &PreprocessOptions) -> Result<Preprocessor> {
        if train.n_rows() == 0 {
            return Err(Error::Fit("cannot fit a preprocessor on zero rows".into()));
        }

        let names = train.column_names();
        let dropped: Vec<String> = match &opts.drop {
            Some(list) => list.clone(),
            None => DEFAULT_DROP.iter().map(|s| s.to_string()).collect(),
        }
        .into_iter()
        .filter(|c| names.contains(c))
        .collect();

        let categorical: Vec<String> = match &opts.categorical {
            Some(list) => {
                for c in list {
                    if !names.contains(c) {
                        return Err(Error::Schema(format!(
                            "categorical column '{c}' is not in the dataset"
                        )));
                    }
                }
                list.clone()
            }
            None => train
                .columns
                .iter()
                .filter(|c| c.kind == ColumnKind::Categorical)
                .map(|c| c.name.clone())
                .collect(),
        };

        let mut one_hot = Vec::new();
        let mut minmax = Vec::new();

        for (j, col) in train.columns.iter().enumerate() {
            if dropped.contains(&col.name) {
                continue;
            }
            if categorical.contains(&col.name) {
                one_hot.push(fit_one_hot(train, j, opts.max_categories));
            } else if col.kind != ColumnKind::OneHot {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..train.n_rows() {
                    let v = train.x.get(i, j);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                minmax.push(MinMax { column: col.name.clone(), min: lo, max: hi });
            }
        }

        Ok(Preprocessor {
            version: 1,
            dropped,
            one_hot,
            minmax,
            fitted_columns: train.columns.iter().map(|c| (c.name.clone(), c.kind)).collect(),
        })
    }

    /// Apply drop -> one-hot -> min-max to a dataset with the fitted columns.
    ///
    /// Numeric values are clamped into [0, 1]; constant columns map to 0;
    /// categories unseen at fit time route to the overflow bucket. Refuses
    /// datasets whose columns do not match the fitted layout, including
    /// already-transformed ones.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        let got: Vec<(String, ColumnKind)> =
            d.columns.iter().map(|c| (c.name.clone(), c.kind)).collect();
        if got != self.fitted_columns {
            return Err(Error::Schema(
                "columns do not match the fitted layout (is the dataset already transformed?)"
                    .into(),
            ));
        }
        if d.minmax_applied {
            return Err(Error::Schema("dataset is already min-max normalized".into()));
        }

        enum Plan<'a> {
            Numeric { src: usize, min: f64, max: f64 },
            OneHot { src: usize, map: &'a OneHotMap, lookup: HashMap<&'a str, usize> },
        }

        let mut plans = Vec::new();
        let mut out_columns = Vec::new();
        for (j, col) in d.columns.iter().enumerate() {
            if self.dropped.contains(&col.name) {
                continue;
            }
            if let Some(map) = self.one_hot.iter().find(|m| m.column == col.name) {
                let lookup: HashMap<&str, usize> =
                    map.categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
                for cat in &map.categories {
                    out_columns.push(Column::one_hot(format!("{}={}", col.name, cat)));
                }
                out_columns.push(Column::one_hot(format!("{}={}", col.name, OTHER_BUCKET)));
                plans.push(Plan::OneHot { src: j, map, lookup });
            } else if let Some(mm) = self.minmax.iter().find(|m| m.column == col.name) {
                out_columns.push(Column::numeric(&col.name));
                plans.push(Plan::Numeric { src: j, min: mm.min, max: mm.max });
            } else {
                // Fitted as a pass-through indicator column.
                out_columns.push(col.clone());
                plans.push(Plan::Numeric { src: j, min: 0.0, max: 1.0 });
            }
        }

        let n_out = out_columns.len();
        let mut data = Vec::with_capacity(d.n_rows() * n_out);
        for i in 0..d.n_rows() {
            let row = d.x.row(i);
            for plan in &plans {
                match plan {
                    Plan::Numeric { src, min, max } => {
                        let v = row[*src];
                        let scaled = if max > min { ((v - min) / (max - min)).clamp(0.0, 1.0) } else { 0.0 };
                        data.push(scaled);
                    }
                    Plan::OneHot { src, map, lookup } => {
                        let code = row[*src];
                        let cat = category_of(&d.columns[*src], code);
                        let hit = lookup.get(cat.as_str()).copied().unwrap_or(map.categories.len());
                        let width = map.categories.len() + 1;
                        for k in 0..width {
                            data.push(if k == hit { 1.0 } else { 0.0 });
                        }
                    }
                }
            }
        }

        let mut out = Dataset::new(
            out_columns,
            Matrix::from_vec(data, d.n_rows(), n_out),
            d.y.clone(),
            &d.label_name,
        );
        out.row_ids = d.row_ids.clone();
        out.minmax_applied = true;
        Ok(out)
    }

    /// Names of the columns `transform` will produce.
    pub fn output_columns(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, _) in &self.fitted_columns {
            if self.dropped.contains(name) {
                continue;
            }
            if let Some(map) = self.one_hot.iter().find(|m| &m.column == name) {
                for cat in &map.categories {
                    out.push(format!("{name}={cat}"));
                }
                out.push(format!("{name}={OTHER_BUCKET}"));
            } else {
                out.push(name.clone());
            }
        }
        out
    }

    /// Per-column fitted (min, max), for inspection.
    pub fn minmax_stats(&self) -> Vec<(String, f64, f64)> {
        self.minmax.iter().map(|m| (m.column.clone(), m.min, m.max)).collect()
    }

    /// Persist as a JSON sidecar so the pipeline can be re-applied
    /// bit-identically to new data.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Preprocessor> {
        let json = std::fs::read_to_string(path)?;
        serde_json::from_str(&json).map_err(|e| Error::Serialize(e.to_string()))
    }
}

fn category_of(col: &Column, code: f64) -> String {
    match col.kind {
        ColumnKind::Categorical => col.categories.get(code as usize).cloned().unwrap_or_default(),
        // Numeric column declared categorical at fit time: use its printed value.
        _ => crate::data::format_f64(code),
    }
}

fn fit_one_hot(train: &Dataset, j: usize, max_categories: usize) -> OneHotMap {
    let col = &train.columns[j];
    // Count category frequencies over training rows.
    let mut counts: Vec<(String, usize)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for i in 0..train.n_rows() {
        let cat = category_of(col, train.x.get(i, j));
        match index.get(&cat) {
            Some(&k) => counts[k].1 += 1,
            None => {
                index.insert(cat.clone(), counts.len());
                counts.push((cat, 1));
            }
        }
    }
    // Most frequent first; stable sort keeps first-appearance order on ties.
    counts.sort_by(|a, b| b.1.cmp(&a.1));
    counts.truncate(max_categories);
    OneHotMap { column: col.name.clone(), categories: counts.into_iter().map(|(c, _)| c).collect() }
}
