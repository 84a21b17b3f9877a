//! Feature scoring (chi-squared, mutual information, forest importance),
//! per-scorer thresholding, and the union of the selected sets.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{fit_random_forest, ForestParams, ModelSpec};

/// Scores at or above `fraction * max_score` are selected by default.
pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.05;
pub const DEFAULT_MI_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Chi2,
    MutualInfo,
    RfImportance,
}

impl ScorerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScorerKind::Chi2 => "chi2",
            ScorerKind::MutualInfo => "mutual_info",
            ScorerKind::RfImportance => "rf_importance",
        }
    }

    pub fn parse(s: &str) -> Result<ScorerKind> {
        match s {
            "chi2" | "chi_squared" => Ok(ScorerKind::Chi2),
            "mutual_info" | "mi" => Ok(ScorerKind::MutualInfo),
            "rf_importance" | "rf" => Ok(ScorerKind::RfImportance),
            other => Err(Error::Config(format!("unknown scorer '{other}'"))),
        }
    }
}

/// Per-feature scores from one scorer plus the thresholded selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub scorer: ScorerKind,
    /// (feature, score) in dataset column order; all scores >= 0.
    pub scores: Vec<(String, f64)>,
    pub threshold: f64,
    /// Features with score >= threshold, highest score first.
    pub selected: Vec<String>,
}

impl FeatureReport {
    fn from_scores(
        scorer: ScorerKind,
        scores: Vec<(String, f64)>,
        threshold_fraction: f64,
    ) -> FeatureReport {
        let max = scores.iter().map(|(_, s)| *s).fold(0.0f64, f64::max);
        let threshold = threshold_fraction * max;
        let mut selected: Vec<(String, f64)> =
            scores.iter().filter(|(_, s)| *s >= threshold).cloned().collect();
        selected.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        FeatureReport {
            scorer,
            scores,
            threshold,
            selected: selected.into_iter().map(|(f, _)| f).collect(),
        }
    }

    /// Tabular text format: feature, score, selected flag.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "feature\tscore\tselected")?;
        for (name, score) in &self.scores {
            let sel = self.selected.contains(name);
            writeln!(f, "{name}\t{score}\t{}", if sel { 1 } else { 0 })?;
        }
        Ok(())
    }
}

/// Chi-squared score per feature over nonnegative values: observed per-class
/// feature sums against their expectation under class-independent
/// allocation. A zero column sum scores 0.
pub fn chi2_scores(d: &Dataset, threshold_fraction: f64) -> Result<FeatureReport> {
    if d.n_rows() == 0 {
        return Err(Error::InvalidInput("chi2 needs at least one row".into()));
    }
    let n = d.n_rows() as f64;
    let (n0, n1) = d.label_counts();
    let class_frac = [n0 as f64 / n, n1 as f64 / n];

    let mut scores = Vec::with_capacity(d.n_cols());
    for j in 0..d.n_cols() {
        let mut per_class = [0.0f64; 2];
        for i in 0..d.n_rows() {
            let v = d.x.get(i, j);
            if v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "chi2 requires nonnegative values; column '{}' has {v}",
                    d.columns[j].name
                )));
            }
            per_class[d.y[i] as usize] += v;
        }
        let total = per_class[0] + per_class[1];
        let mut chi2 = 0.0;
        if total > 0.0 {
            for c in 0..2 {
                let expected = total * class_frac[c];
                if expected > 0.0 {
                    let diff = per_class[c] - expected;
                    chi2 += diff * diff / expected;
                }
            }
        }
        scores.push((d.columns[j].name.clone(), chi2));
    }
    Ok(FeatureReport::from_scores(ScorerKind::Chi2, scores, threshold_fraction))
}

/// Equal-frequency bin index per value. Identical values always share a bin.
fn equal_frequency_bins(values: &[f64], n_bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Candidate edges at the quantile positions, deduplicated.
    let mut edges: Vec<f64> = (1..n_bins).map(|j| sorted[j * n / n_bins]).collect();
    edges.dedup();
    values
        .iter()
        .map(|&v| edges.iter().take_while(|&&e| e <= v).count())
        .collect()
}

/// Mutual information in nats between a binned view of each feature and the
/// labels, from the empirical joint histogram.
pub fn mutual_info_scores(
    d: &Dataset,
    n_bins: usize,
    threshold_fraction: f64,
) -> Result<FeatureReport> {
    if n_bins < 2 {
        return Err(Error::InvalidInput("n_bins must be >= 2".into()));
    }
    if d.n_rows() == 0 {
        return Err(Error::InvalidInput("mutual information needs at least one row".into()));
    }

    let mut scores = Vec::with_capacity(d.n_cols());
    let mut column = vec![0.0; d.n_rows()];
    for j in 0..d.n_cols() {
        for i in 0..d.n_rows() {
            column[i] = d.x.get(i, j);
        }
        let bins = equal_frequency_bins(&column, n_bins);
        let width = bins.iter().max().copied().unwrap_or(0) + 1;
        let mut counts = vec![[0usize; 2]; width];
        for (b, &label) in bins.iter().zip(&d.y) {
            counts[*b][label as usize] += 1;
        }
        scores.push((d.columns[j].name.clone(), mi_from_counts(&counts)));
    }
    Ok(FeatureReport::from_scores(ScorerKind::MutualInfo, scores, threshold_fraction))
}

/// MI of an empirical joint table, in nats. Zero cells contribute zero.
pub fn mi_from_counts(counts: &[[usize; 2]]) -> f64 {
    let n: usize = counts.iter().map(|r| r[0] + r[1]).sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let col_totals = [
        counts.iter().map(|r| r[0]).sum::<usize>() as f64,
        counts.iter().map(|r| r[1]).sum::<usize>() as f64,
    ];
    let mut mi = 0.0;
    for row in counts {
        let row_total = (row[0] + row[1]) as f64;
        for c in 0..2 {
            let joint = row[c] as f64;
            if joint > 0.0 {
                mi += joint / n * ((joint * n) / (row_total * col_totals[c])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Gini importance from a trained forest, normalized to sum to 1.
pub fn rf_importance_scores(
    d: &Dataset,
    n_trees: usize,
    seed: u64,
    threshold_fraction: f64,
) -> Result<FeatureReport> {
    if d.classes().len() < 2 {
        return Err(Error::InvalidInput(
            "forest importance is undefined on a single-class dataset".into(),
        ));
    }
    let params = ForestParams { n_trees, seed, ..Default::default() };
    let spec = ModelSpec::RandomForest(params.clone());
    let model = fit_random_forest(d, &spec, &params)?;
    let importance = model.forest_importance()?;
    let scores = d
        .columns
        .iter()
        .zip(importance)
        .map(|(c, s)| (c.name.clone(), s))
        .collect();
    Ok(FeatureReport::from_scores(ScorerKind::RfImportance, scores, threshold_fraction))
}

/// Duplicate-free union of the selected sets, ordered by first appearance.
pub fn select_union(reports: &[FeatureReport]) -> Result<Vec<String>> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("select_union needs at least one report".into()));
    }
    let mut out: Vec<String> = Vec::new();
    for r in reports {
        for f in &r.selected {
            if !out.contains(f) {
                out.push(f.clone());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(x: Vec<Vec<f64>>, y: Vec<u8>) -> Dataset {
        let n_cols = x[0].len();
        let columns = (0..n_cols).map(|j| Column::numeric(&format!("f{j}"))).collect();
        Dataset::new(columns, Matrix::from_rows(&x), y, "label")
    }

    /// Independent brute-force chi2: naive double loop over classes and rows.
    fn chi2_oracle(d: &Dataset, j: usize) -> f64 {
        let n = d.n_rows();
        let mut observed = [0.0f64; 2];
        let mut class_count = [0.0f64; 2];
        for c in 0..2usize {
            for i in 0..n {
                if d.y[i] as usize == c {
                    observed[c] += d.x.get(i, j);
                    class_count[c] += 1.0;
                }
            }
        }
        let total = observed[0] + observed[1];
        if total == 0.0 {
            return 0.0;
        }
        let mut chi2 = 0.0;
        for c in 0..2usize {
            let expected = total * class_count[c] / n as f64;
            if expected > 0.0 {
                chi2 += (observed[c] - expected).powi(2) / expected;
            }
        }
        chi2
    }

    #[test]
    fn chi2_perfectly_aligned_binary_feature() {
        // Feature identical to the label, 10 positives / 10 negatives:
        // per-class sums (0, 10) vs expectation (5, 5) give 5 + 5 = 10.
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i >= 10)]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let d = dataset(x, y);
        let r = chi2_scores(&d, DEFAULT_THRESHOLD_FRACTION).unwrap();
        let oracle = chi2_oracle(&d, 0);
        assert!((r.scores[0].1 - oracle).abs() < 1e-12);
        assert!((r.scores[0].1 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn chi2_constant_feature_scores_zero() {
        let x: Vec<Vec<f64>> = (0..20).map(|_| vec![3.5]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i % 2 == 0)).collect();
        let d = dataset(x, y);
        let r = chi2_scores(&d, DEFAULT_THRESHOLD_FRACTION).unwrap();
        assert!(r.scores[0].1.abs() < 1e-12);
    }

    #[test]
    fn chi2_matches_oracle_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x: Vec<Vec<f64>> =
            (0..200).map(|_| (0..6).map(|_| rng.gen::<f64>()).collect()).collect();
        let y: Vec<u8> = (0..200).map(|_| rng.gen_range(0..2) as u8).collect();
        let d = dataset(x, y);
        let r = chi2_scores(&d, DEFAULT_THRESHOLD_FRACTION).unwrap();
        for j in 0..6 {
            let oracle = chi2_oracle(&d, j);
            assert!(
                (r.scores[j].1 - oracle).abs() <= 1e-9,
                "feature {j}: {} vs oracle {oracle}",
                r.scores[j].1
            );
        }
    }

    #[test]
    fn chi2_rejects_negative_values() {
        let d = dataset(vec![vec![-1.0], vec![1.0]], vec![0, 1]);
        assert!(chi2_scores(&d, DEFAULT_THRESHOLD_FRACTION).is_err());
    }

    #[test]
    fn chi2_invariant_under_row_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let y: Vec<u8> = (0..100).map(|_| rng.gen_range(0..2) as u8).collect();
        let d = dataset(x, y);
        let r1 = chi2_scores(&d, DEFAULT_THRESHOLD_FRACTION).unwrap();
        let idx: Vec<usize> = (0..100).rev().collect();
        let r2 = chi2_scores(&d.select_rows(&idx), DEFAULT_THRESHOLD_FRACTION).unwrap();
        for (a, b) in r1.scores.iter().zip(&r2.scores) {
            assert!((a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn mi_of_label_copy_is_ln2() {
        let x: Vec<Vec<f64>> = (0..10_000).map(|i| vec![f64::from(i % 2 == 0)]).collect();
        let y: Vec<u8> = (0..10_000).map(|i| u8::from(i % 2 == 0)).collect();
        let d = dataset(x, y);
        let r = mutual_info_scores(&d, DEFAULT_MI_BINS, DEFAULT_THRESHOLD_FRACTION).unwrap();
        assert!(
            (r.scores[0].1 - std::f64::consts::LN_2).abs() < 0.05,
            "MI = {}",
            r.scores[0].1
        );
    }

    #[test]
    fn mi_of_independent_feature_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x: Vec<Vec<f64>> = (0..10_000).map(|_| vec![rng.gen::<f64>()]).collect();
        let y: Vec<u8> = (0..10_000).map(|_| rng.gen_range(0..2) as u8).collect();
        let d = dataset(x, y);
        let r = mutual_info_scores(&d, DEFAULT_MI_BINS, DEFAULT_THRESHOLD_FRACTION).unwrap();
        assert!(r.scores[0].1 <= 0.02, "MI = {}", r.scores[0].1);
    }

    #[test]
    fn mi_is_nonnegative_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let rows = rng.gen_range(2..8);
            let counts: Vec<[usize; 2]> =
                (0..rows).map(|_| [rng.gen_range(0..30), rng.gen_range(0..30)]).collect();
            let mi = mi_from_counts(&counts);
            assert!(mi >= 0.0);
            // Symmetry: MI(X;Y) = MI(Y;X). Transposing needs a 2-row table.
            if rows == 2 {
                let t = vec![[counts[0][0], counts[1][0]], [counts[0][1], counts[1][1]]];
                assert!((mi - mi_from_counts(&t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mi_binning_keeps_equal_values_together() {
        let values = vec![1.0, 1.0, 1.0, 2.0, 2.0, 3.0];
        let bins = equal_frequency_bins(&values, 3);
        assert_eq!(bins[0], bins[1]);
        assert_eq!(bins[1], bins[2]);
        assert_ne!(bins[0], bins[5]);
    }

    #[test]
    fn mi_rejects_one_bin() {
        let d = dataset(vec![vec![0.0], vec![1.0]], vec![0, 1]);
        assert!(mutual_info_scores(&d, 1, DEFAULT_THRESHOLD_FRACTION).is_err());
    }

    #[test]
    fn rf_importance_concentrates_on_the_informative_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..300)
            .map(|i| vec![f64::from(i >= 150), rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        let y: Vec<u8> = (0..300).map(|i| u8::from(i >= 150)).collect();
        let d = dataset(x, y);
        let r = rf_importance_scores(&d, 30, 7, DEFAULT_THRESHOLD_FRACTION).unwrap();
        assert!(r.scores[0].1 > 0.9, "informative share = {}", r.scores[0].1);
        let total: f64 = r.scores.iter().map(|(_, s)| s).sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn rf_importance_on_constant_features_errors() {
        let x: Vec<Vec<f64>> = (0..40).map(|_| vec![1.0, 2.0]).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i % 2 == 0)).collect();
        let d = dataset(x, y);
        assert!(rf_importance_scores(&d, 10, 1, DEFAULT_THRESHOLD_FRACTION).is_err());
    }

    #[test]
    fn rf_importance_on_single_class_errors() {
        let d = dataset(vec![vec![0.0], vec![1.0]], vec![1, 1]);
        assert!(rf_importance_scores(&d, 10, 1, DEFAULT_THRESHOLD_FRACTION).is_err());
    }

    #[test]
    fn selected_set_matches_threshold_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x: Vec<Vec<f64>> =
            (0..120).map(|_| (0..5).map(|_| rng.gen::<f64>()).collect()).collect();
        let y: Vec<u8> = (0..120).map(|i| u8::from(i % 2 == 0)).collect();
        let d = dataset(x, y);
        let r = chi2_scores(&d, 0.3).unwrap();
        for (name, score) in &r.scores {
            assert_eq!(r.selected.contains(name), *score >= r.threshold);
        }
    }

    fn report_with(selected: &[&str]) -> FeatureReport {
        FeatureReport {
            scorer: ScorerKind::Chi2,
            scores: selected.iter().map(|s| (s.to_string(), 1.0)).collect(),
            threshold: 0.0,
            selected: selected.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn union_of_the_three_published_selections_has_19_features() {
        let chi2 = report_with(&[
            "srate",
            "sport",
            "AR_P_Proto_P_Sport",
            "AR_P_Proto_P_SrcIP",
            "AR_P_Proto_P_DstIP",
            "rate",
            "AR_P_Proto_P_Dport",
        ]);
        let mi = report_with(&[
            "dport",
            "proto",
            "flgs",
            "state",
            "proto_number",
            "daddr",
            "saddr",
            "flgs_number",
        ]);
        let rf = report_with(&[
            "ltime",
            "stime",
            "AR_P_Proto_P_DstIP",
            "AR_P_Proto_P_SrcIP",
            "AR_P_Proto_P_Dport",
            "daddr",
            "AR_P_Proto_P_Sport",
            "rate",
            "TnP_PerProto",
            "bytes",
        ]);
        let union = select_union(&[chi2, mi, rf]).unwrap();
        assert_eq!(union.len(), 19);
    }

    #[test]
    fn union_is_idempotent_and_superset() {
        let a = report_with(&["x", "y"]);
        let twice = select_union(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(twice, vec!["x".to_string(), "y".to_string()]);
        for f in &a.selected {
            assert!(twice.contains(f));
        }
    }

    #[test]
    fn union_of_disjoint_sets_adds_up() {
        let a: Vec<String> = (0..7).map(|i| format!("a{i}")).collect();
        let b: Vec<String> = (0..8).map(|i| format!("b{i}")).collect();
        let c: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
        let mk = |names: &[String]| {
            report_with(&names.iter().map(String::as_str).collect::<Vec<_>>())
        };
        let union = select_union(&[mk(&a), mk(&b), mk(&c)]).unwrap();
        assert_eq!(union.len(), 25);
    }

    #[test]
    fn union_requires_a_report() {
        assert!(select_union(&[]).is_err());
    }

    #[test]
    fn report_tsv_lists_every_feature() {
        let d = dataset(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0, 1]);
        let r = chi2_scores(&d, DEFAULT_THRESHOLD_FRACTION).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        r.write_tsv(f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert_eq!(text.lines().count(), 3); // header + 2 features
        assert!(text.starts_with("feature\tscore\tselected"));
    }
}
