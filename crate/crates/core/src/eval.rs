//! Hold-out splitting, confusion accounting, the ratio metrics, ROC/AUC and
//! inference timing. Attack (label 1) is the positive class throughout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::model::Model;

/// Confusion counts with attack as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    #[serde(rename = "tp")]
    pub true_pos: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
    #[serde(rename = "fp")]
    pub false_pos: u64,
    #[serde(rename = "tn")]
    pub true_neg: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_neg + self.false_pos + self.true_neg
    }
}

/// The six ratio metrics plus flags naming any that hit the 0/0 convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub fnr: f64,
    pub fpr: f64,
    pub f1: f64,
    /// Metrics whose denominator was zero and were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_division: Vec<String>,
}

/// One ROC point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// Wall-clock inference timing: median of the runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
    pub runs: Vec<f64>,
    pub variance: f64,
}

impl Timing {
    pub fn disabled() -> Timing {
        Timing { seconds: 0.0, runs: Vec::new(), variance: 0.0 }
    }
}

/// Full evaluation of one trained model on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: Confusion,
    pub metrics: MetricSet,
    pub auc: f64,
    pub roc_points: Vec<RocPoint>,
    pub inference_seconds: f64,
    pub timing: Timing,
}

/// Deterministic hold-out split. With `stratified`, per-class proportions
/// are preserved with floor rounding; otherwise the whole index set is
/// shuffled and cut at `floor(fraction * n)`.
pub fn holdout_split(
    d: &Dataset,
    train_fraction: f64,
    stratified: bool,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput("train_fraction must be in (0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();

    if stratified {
        for class in [0u8, 1u8] {
            let mut idx: Vec<usize> = (0..d.n_rows()).filter(|&i| d.y[i] == class).collect();
            if idx.is_empty() {
                continue;
            }
            if idx.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "class {class} has fewer than 2 rows; stratified split impossible"
                )));
            }
            shuffle(&mut idx, &mut rng);
            let n_train = (train_fraction * idx.len() as f64).floor() as usize;
            train_idx.extend_from_slice(&idx[..n_train]);
            test_idx.extend_from_slice(&idx[n_train..]);
        }
    } else {
        let mut idx: Vec<usize> = (0..d.n_rows()).collect();
        shuffle(&mut idx, &mut rng);
        let n_train = (train_fraction * idx.len() as f64).floor() as usize;
        train_idx.extend_from_slice(&idx[..n_train]);
        test_idx.extend_from_slice(&idx[n_train..]);
    }

    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((d.select_rows(&train_idx), d.select_rows(&test_idx)))
}

/// Split with explicit per-class training counts `(normal, attack)`, for
/// pinning externally observed split sizes exactly.
pub fn holdout_split_exact(
    d: &Dataset,
    train_normal: usize,
    train_attack: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, want) in [(0u8, train_normal), (1u8, train_attack)] {
        let mut idx: Vec<usize> = (0..d.n_rows()).filter(|&i| d.y[i] == class).collect();
        if want > idx.len() {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} rows, cannot reserve {want} for training",
                idx.len()
            )));
        }
        shuffle(&mut idx, &mut rng);
        train_idx.extend_from_slice(&idx[..want]);
        test_idx.extend_from_slice(&idx[want..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((d.select_rows(&train_idx), d.select_rows(&test_idx)))
}

fn shuffle(idx: &mut [usize], rng: &mut ChaCha8Rng) {
    for t in (1..idx.len()).rev() {
        let j = rng.gen_range(0..=t);
        idx.swap(t, j);
    }
}

/// Count the four outcomes; attack (1) is positive.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<Confusion> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut c = Confusion { true_pos: 0, false_neg: 0, false_pos: 0, true_neg: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.true_pos += 1,
            (1, 0) => c.false_neg += 1,
            (0, 1) => c.false_pos += 1,
            _ => c.true_neg += 1,
        }
    }
    Ok(c)
}

fn ratio(num: f64, den: f64, name: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        flags.push(name.to_string());
        0.0
    } else {
        num / den
    }
}

/// The six ratio metrics. 0/0 reports as 0 and is flagged.
pub fn metrics(c: &Confusion) -> MetricSet {
    let (tp, fn_, fp, tn) =
        (c.true_pos as f64, c.false_neg as f64, c.false_pos as f64, c.true_neg as f64);
    let mut flags = Vec::new();
    let accuracy = ratio(tp + tn, tp + fn_ + fp + tn, "accuracy", &mut flags);
    let recall = ratio(tp, tp + fn_, "recall", &mut flags);
    let precision = ratio(tp, tp + fp, "precision", &mut flags);
    let fnr = ratio(fn_, tp + fn_, "fnr", &mut flags);
    let fpr = ratio(fp, fp + tn, "fpr", &mut flags);
    let f1 = ratio(2.0 * precision * recall, precision + recall, "f1", &mut flags);
    MetricSet { accuracy, recall, precision, fnr, fpr, f1, zero_division: flags }
}

/// ROC curve by descending-threshold sweep (ties share a step) and its
/// trapezoidal area. Requires both classes in `y_true`.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<(Vec<RocPoint>, f64)> {
    if y_true.len() != scores.len() {
        return Err(Error::InvalidInput("labels and scores differ in length".into()));
    }
    let n_pos = y_true.iter().filter(|&&y| y == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidInput("ROC needs both classes in the truth vector".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        // Consume the whole tie group before emitting a point.
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint { fpr: fp as f64 / n_neg as f64, tpr: tp as f64 / n_pos as f64 });
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0;
    }
    Ok((points, auc))
}

/// Wall-clock seconds for single-threaded prediction over all rows: one
/// untimed warm-up pass, then the median of `runs` timed passes.
pub fn time_inference(m: &Model, x: &Matrix, runs: usize) -> Result<Timing> {
    let runs = runs.max(1);
    m.predict(x)?; // warm-up
    let mut samples = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        let out = m.predict(x)?;
        let dt = start.elapsed().as_secs_f64();
        std::hint::black_box(out);
        samples.push(dt);
    }
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let variance = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (samples.len() - 1) as f64
    } else {
        0.0
    };
    Ok(Timing { seconds: median, runs: samples, variance })
}

/// Evaluate a trained model on a test set. `timing_runs = None` skips the
/// wall-clock measurement (reported as 0), keeping the report deterministic.
pub fn evaluate_model(m: &Model, test: &Dataset, timing_runs: Option<usize>) -> Result<EvalReport> {
    let pred = m.predict(&test.x)?;
    let conf = confusion(&test.y, &pred)?;
    let mset = metrics(&conf);
    let scores = m.decision_scores(&test.x)?;
    let (roc_points, auc) = roc_auc(&test.y, &scores)?;
    let timing = match timing_runs {
        Some(runs) => time_inference(m, &test.x, runs)?,
        None => Timing::disabled(),
    };
    Ok(EvalReport {
        confusion: conf,
        metrics: mset,
        auc,
        roc_points,
        inference_seconds: timing.seconds,
        timing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use crate::synth::{generate_synthetic, SyntheticSpec};

    fn labeled_dataset(y: Vec<u8>) -> Dataset {
        let x: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![i as f64]).collect();
        Dataset::new(vec![Column::numeric("x")], Matrix::from_rows(&x), y, "label")
    }

    #[test]
    fn split_is_a_partition() {
        let y: Vec<u8> = (0..100).map(|i| u8::from(i % 10 != 0)).collect();
        let d = labeled_dataset(y);
        let (train, test) = holdout_split(&d, 0.67, true, 7).unwrap();
        assert_eq!(train.n_rows() + test.n_rows(), d.n_rows());
        let mut ids: Vec<u64> = train.row_ids.iter().chain(&test.row_ids).copied().collect();
        ids.sort_unstable();
        let mut want: Vec<u64> = d.row_ids.clone();
        want.sort_unstable();
        assert_eq!(ids, want, "train and test must partition the rows");
    }

    #[test]
    fn stratified_split_uses_floor_rounding() {
        // 477 minority rows at 0.67 -> floor gives 319 in training.
        let mut y = vec![0u8; 477];
        y.extend(vec![1u8; 1000]);
        let d = labeled_dataset(y);
        let (train, test) = holdout_split(&d, 0.67, true, 1).unwrap();
        let (train_normal, _) = train.label_counts();
        let (test_normal, _) = test.label_counts();
        assert_eq!(train_normal, 319);
        assert_eq!(test_normal, 158);
    }

    #[test]
    fn exact_split_pins_observed_counts() {
        // The published split keeps 324 of 477 normal rows for training.
        let mut y = vec![0u8; 477];
        y.extend(vec![1u8; 1000]);
        let d = labeled_dataset(y);
        let (train, test) = holdout_split_exact(&d, 324, 670, 1).unwrap();
        let (train_normal, train_attack) = train.label_counts();
        let (test_normal, _) = test.label_counts();
        assert_eq!((train_normal, train_attack), (324, 670));
        assert_eq!(test_normal, 153);
    }

    #[test]
    fn half_fraction_on_ten_rows_gives_five_five() {
        let d = labeled_dataset(vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        let (train, test) = holdout_split(&d, 0.5, false, 3).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (5, 5));
    }

    #[test]
    fn stratified_split_rejects_tiny_class() {
        let d = labeled_dataset(vec![0, 1, 1, 1]);
        assert!(holdout_split(&d, 0.5, true, 1).is_err());
    }

    #[test]
    fn split_deterministic_under_seed() {
        let y: Vec<u8> = (0..50).map(|i| u8::from(i % 3 != 0)).collect();
        let d = labeled_dataset(y);
        let (a_train, _) = holdout_split(&d, 0.67, true, 11).unwrap();
        let (b_train, _) = holdout_split(&d, 0.67, true, 11).unwrap();
        assert_eq!(a_train.row_ids, b_train.row_ids);
    }

    #[test]
    fn confusion_four_case_enumeration() {
        let c = confusion(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!((c.true_pos, c.false_neg, c.false_pos, c.true_neg), (1, 1, 1, 1));
        assert_eq!(c.total(), 4);
    }

    #[test]
    fn confusion_perfect_prediction() {
        let c = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((c.false_neg, c.false_pos), (0, 0));
    }

    #[test]
    fn confusion_all_ones_on_all_zeros() {
        let c = confusion(&[0, 0, 0], &[1, 1, 1]).unwrap();
        assert_eq!((c.true_pos, c.false_neg, c.false_pos, c.true_neg), (0, 0, 3, 0));
    }

    #[test]
    fn confusion_length_mismatch_is_error() {
        assert!(confusion(&[1, 0], &[1]).is_err());
    }

    #[test]
    fn metrics_formula_fixture() {
        let c = Confusion { true_pos: 90, false_neg: 10, false_pos: 20, true_neg: 80 };
        let m = metrics(&c);
        assert!((m.accuracy - 0.85).abs() < 1e-12);
        assert!((m.recall - 0.9).abs() < 1e-12);
        assert!((m.precision - 90.0 / 110.0).abs() < 1e-12);
        assert!((m.fnr - 0.1).abs() < 1e-12);
        assert!((m.fpr - 0.2).abs() < 1e-12);
        let expect_f1 = 2.0 * (90.0 / 110.0) * 0.9 / (90.0 / 110.0 + 0.9);
        assert!((m.f1 - expect_f1).abs() < 1e-12);
        assert!(m.zero_division.is_empty());
    }

    #[test]
    fn metrics_perfect_classifier() {
        let c = Confusion { true_pos: 5, false_neg: 0, false_pos: 0, true_neg: 5 };
        let m = metrics(&c);
        assert_eq!((m.accuracy, m.recall, m.precision, m.f1), (1.0, 1.0, 1.0, 1.0));
        assert_eq!((m.fnr, m.fpr), (0.0, 0.0));
    }

    #[test]
    fn metrics_published_imbalanced_logreg_row() {
        // Counts reconstructed from the published imbalanced run: FP 47 of
        // 153 normals, FN 1 of 1,210,458 attacks.
        let c = Confusion { true_pos: 1_210_457, false_neg: 1, false_pos: 47, true_neg: 106 };
        let m = metrics(&c);
        assert!((m.fpr - 0.3072).abs() < 1e-4, "fpr {}", m.fpr);
        assert!((m.fnr - 8.26e-7).abs() < 1e-8, "fnr {}", m.fnr);
        assert!(m.recall > 0.999999, "recall {}", m.recall);
        assert!((m.accuracy - 0.999960).abs() < 1e-6);
        assert!((m.precision - 0.9999612).abs() < 1e-7);
    }

    #[test]
    fn metrics_zero_division_flags() {
        let c = Confusion { true_pos: 0, false_neg: 0, false_pos: 0, true_neg: 10 };
        let m = metrics(&c);
        assert_eq!(m.recall, 0.0);
        assert!(m.zero_division.contains(&"recall".to_string()));
        assert!(m.zero_division.contains(&"fnr".to_string()));
    }

    #[test]
    fn f1_harmonic_identity() {
        let c = Confusion { true_pos: 37, false_neg: 13, false_pos: 9, true_neg: 41 };
        let m = metrics(&c);
        assert!((m.f1 * (m.precision + m.recall) - 2.0 * m.precision * m.recall).abs() < 1e-12);
    }

    #[test]
    fn roc_perfect_and_inverted_ranking() {
        let y = [0u8, 0, 1, 1];
        let (points, auc) = roc_auc(&y, &[0.1, 0.2, 0.8, 0.9]).unwrap();
        assert_eq!(auc, 1.0);
        assert_eq!(points.first().unwrap(), &RocPoint { fpr: 0.0, tpr: 0.0 });
        assert_eq!(points.last().unwrap(), &RocPoint { fpr: 1.0, tpr: 1.0 });

        let (_, auc) = roc_auc(&y, &[0.9, 0.8, 0.2, 0.1]).unwrap();
        assert_eq!(auc, 0.0);
    }

    #[test]
    fn roc_single_class_is_error() {
        assert!(roc_auc(&[1, 1], &[0.5, 0.6]).is_err());
    }

    /// Pair-counting AUC: P(score+ > score-) + 0.5 P(tie).
    fn auc_oracle(y: &[u8], scores: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn roc_auc_matches_pair_counting_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = rng.gen_range(5..200);
            let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            if y.iter().all(|&v| v == 0) || y.iter().all(|&v| v == 1) {
                continue;
            }
            // Coarse scores force plenty of ties.
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..8) as f64) / 8.0).collect();
            let (points, auc) = roc_auc(&y, &scores).unwrap();
            let oracle = auc_oracle(&y, &scores);
            assert!((auc - oracle).abs() <= 1e-9, "auc {auc} vs oracle {oracle}");
            // Monotone sweep.
            for w in points.windows(2) {
                assert!(w[1].fpr >= w[0].fpr);
                assert!(w[1].tpr >= w[0].tpr);
            }
        }
    }

    #[test]
    fn timing_reports_runs_and_variance() {
        let spec = SyntheticSpec {
            n_majority: 200,
            n_minority: 200,
            n_features: 3,
            class_separation: 3.0,
            noise_sigma: 1.0,
            seed: 5,
        };
        let d = generate_synthetic(&spec).unwrap();
        let m = crate::model::fit(
            &d,
            &crate::model::ModelSpec::LogReg(crate::model::LinearParams {
                epochs: 20,
                ..Default::default()
            }),
        )
        .unwrap();
        let t = time_inference(&m, &d.x, 3).unwrap();
        assert_eq!(t.runs.len(), 3);
        assert!(t.seconds >= 0.0);
        assert!(t.variance >= 0.0);

        let empty = Matrix::zeros(0, 3);
        let t0 = time_inference(&m, &empty, 3).unwrap();
        assert!(t0.seconds < 0.01, "empty set should time near zero");
    }
}
