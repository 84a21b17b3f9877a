//! Config-driven experiment runs: load, preprocess, select, sample, train
//! and evaluate every (model, scenario) cell, then emit report files.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{load_dataset, Dataset};
use crate::error::{Error, Result};
use crate::eval::{evaluate_model, EvalReport};
use crate::model::{
    fit, ForestParams, GbtParams, LinearParams, MlpParams, Model, ModelKind, ModelSpec, SvmParams,
};
use crate::preprocess::{PreprocessOptions, Preprocessor};
use crate::sample::{
    random_oversample, random_undersample, smote, GammaMode, Sampled, SmoteConfig, SyntheticOrigin,
};
use crate::schema::Schema;
use crate::select::{
    chi2_scores, mutual_info_scores, rf_importance_scores, select_union, FeatureReport, ScorerKind,
};
use crate::synth::{generate_synthetic, SyntheticSpec};

/// Sampling scenario applied to the training partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Train on the data as-is (the imbalanced baseline).
    None,
    Smote,
    Ros,
    Rus,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::None => "none",
            Scenario::Smote => "smote",
            Scenario::Ros => "ros",
            Scenario::Rus => "rus",
        }
    }

    pub fn parse(s: &str) -> Result<Scenario> {
        match s {
            "none" | "imbalanced" => Ok(Scenario::None),
            "smote" => Ok(Scenario::Smote),
            "ros" => Ok(Scenario::Ros),
            "rus" => Ok(Scenario::Rus),
            other => Err(Error::Config(format!("unknown sampling scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// "synthetic" or "csv".
    pub source: String,
    /// CSV path when source = "csv".
    pub path: Option<String>,
    /// Named schema ("bot-iot") or "infer" to take all non-label columns as
    /// numeric features.
    pub schema: String,
    /// Label column used when inferring a schema.
    pub label_column: String,
    pub n_majority: usize,
    pub n_minority: usize,
    pub n_features: usize,
    pub class_separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        DataConfig {
            source: "synthetic".into(),
            path: None,
            schema: "infer".into(),
            label_column: "label".into(),
            n_majority: s.n_majority,
            n_minority: s.n_minority,
            n_features: s.n_features,
            class_separation: s.class_separation,
            noise_sigma: s.noise_sigma,
            seed: s.seed,
        }
    }
}

impl DataConfig {
    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n_majority: self.n_majority,
            n_minority: self.n_minority,
            n_features: self.n_features,
            class_separation: self.class_separation,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocConfig {
    pub max_categories: usize,
    /// Column drop override; absent applies the schema default.
    pub drop: Option<Vec<String>>,
    /// Categorical-column override; absent follows the schema.
    pub categorical: Option<Vec<String>>,
}

impl Default for PreprocConfig {
    fn default() -> Self {
        PreprocConfig { max_categories: 64, drop: None, categorical: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    /// Scorers to run; empty skips feature selection entirely.
    pub scorers: Vec<String>,
    pub threshold_fraction: f64,
    pub mi_bins: usize,
    pub rf_trees: usize,
    pub rf_seed: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            scorers: Vec::new(),
            threshold_fraction: crate::select::DEFAULT_THRESHOLD_FRACTION,
            mi_bins: crate::select::DEFAULT_MI_BINS,
            rf_trees: 50,
            rf_seed: 17,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactCounts {
    pub normal: usize,
    pub attack: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
    /// Pins per-class training counts exactly (overrides the fraction).
    pub exact_train_counts: Option<ExactCounts>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.67, stratified: true, seed: 42, exact_train_counts: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Scenarios to run, e.g. ["none", "smote"].
    pub scenarios: Vec<String>,
    pub k: usize,
    pub target_ratio: f64,
    pub seed: u64,
    pub gamma_mode: GammaMode,
    /// Emit a provenance sidecar per oversampled scenario.
    pub provenance: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            scenarios: vec!["none".into(), "smote".into()],
            k: 5,
            target_ratio: 1.0,
            seed: 1337,
            gamma_mode: GammaMode::Vector,
            provenance: false,
        }
    }
}

impl SamplingConfig {
    fn smote_config(&self) -> SmoteConfig {
        SmoteConfig {
            k: self.k,
            target_ratio: self.target_ratio,
            seed: self.seed,
            gamma_mode: self.gamma_mode,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    /// Model kinds to train, in report order.
    pub kinds: Vec<String>,
    /// Stratified row cap applied to kernel-SVM training sets (the dual
    /// solver is quadratic in rows); 0 disables the cap.
    pub kernel_train_cap: usize,
    pub logreg: Option<LinearParams>,
    pub linear_svc: Option<LinearParams>,
    pub svm_linear: Option<SvmParams>,
    pub svm_rbf: Option<SvmParams>,
    pub random_forest: Option<ForestParams>,
    pub gbt: Option<GbtParams>,
    pub mlp: Option<MlpParams>,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            kinds: ModelKind::ALL.iter().map(|k| k.as_str().to_string()).collect(),
            kernel_train_cap: 4000,
            logreg: None,
            linear_svc: None,
            svm_linear: None,
            svm_rbf: None,
            random_forest: None,
            gbt: None,
            mlp: None,
        }
    }
}

impl ModelsConfig {
    pub fn build_specs(&self) -> Result<Vec<ModelSpec>> {
        if self.kinds.is_empty() {
            return Err(Error::Config("at least one model kind is required".into()));
        }
        let mut specs = Vec::with_capacity(self.kinds.len());
        for name in &self.kinds {
            let kind = ModelKind::parse(name)?;
            let spec = match kind {
                ModelKind::LogReg => {
                    ModelSpec::LogReg(self.logreg.clone().unwrap_or_default())
                }
                ModelKind::LinearSvc => {
                    ModelSpec::LinearSvc(self.linear_svc.clone().unwrap_or_default())
                }
                ModelKind::SvmLinear => {
                    ModelSpec::SvmLinear(self.svm_linear.clone().unwrap_or_default())
                }
                ModelKind::SvmRbf => ModelSpec::SvmRbf(self.svm_rbf.clone().unwrap_or_default()),
                ModelKind::RandomForest => {
                    ModelSpec::RandomForest(self.random_forest.clone().unwrap_or_default())
                }
                ModelKind::Gbt => ModelSpec::Gbt(self.gbt.clone().unwrap_or_default()),
                ModelKind::Mlp => ModelSpec::Mlp(self.mlp.clone().unwrap_or_default()),
            };
            specs.push(spec);
        }
        Ok(specs)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Wall-clock timing is inherently non-reproducible; disable it when
    /// byte-identical reports are required.
    pub enabled: bool,
    pub runs: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { enabled: true, runs: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub save_models: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into(), save_models: false }
    }
}

/// The full experiment description. Every field has a default, so a config
/// file only states what differs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub preprocess: PreprocConfig,
    pub select: SelectConfig,
    pub split: SplitConfig,
    pub sampling: SamplingConfig,
    pub models: ModelsConfig,
    pub timing: TimingConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The effective config, every default filled in.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        if self.sampling.scenarios.is_empty() {
            return Err(Error::Config("at least one sampling scenario is required".into()));
        }
        self.sampling.scenarios.iter().map(|s| Scenario::parse(s)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.models.build_specs()?;
        self.scenarios()?;
        for s in &self.select.scorers {
            ScorerKind::parse(s)?;
        }
        match self.data.source.as_str() {
            "synthetic" => self.data.synthetic_spec().validate()?,
            "csv" => {
                if self.data.path.is_none() {
                    return Err(Error::Config("data.path is required for a csv source".into()));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "data.source must be 'synthetic' or 'csv', got '{other}'"
                )))
            }
        }
        Ok(())
    }
}

/// Outcome of one (model, scenario) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Report(EvalReport),
    Error(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub model: ModelKind,
    pub scenario: Scenario,
    /// (normal, attack) counts of the training set this cell saw.
    pub train_counts: (usize, usize),
    pub test_counts: (usize, usize),
    pub outcome: CellOutcome,
}

impl CellResult {
    pub fn report(&self) -> Option<&EvalReport> {
        match &self.outcome {
            CellOutcome::Report(r) => Some(r),
            CellOutcome::Error(_) => None,
        }
    }
}

/// Everything one run produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub cells: Vec<CellResult>,
    pub feature_reports: Vec<FeatureReport>,
    pub selected_features: Option<Vec<String>>,
    /// Numeric cells imputed as zero while loading.
    pub imputed_cells: usize,
    /// Leakage-audit assertions executed (debug builds only).
    pub audit_checks: usize,
    #[serde(skip)]
    pub scenario_origins: Vec<(Scenario, Vec<SyntheticOrigin>, usize)>,
    #[serde(skip)]
    pub models: Vec<(ModelKind, Scenario, Model)>,
}

impl RunSummary {
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.report().is_some())
    }
}

fn load_data(cfg: &DataConfig) -> Result<Dataset> {
    match cfg.source.as_str() {
        "synthetic" => generate_synthetic(&cfg.synthetic_spec()),
        "csv" => {
            let path = cfg
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("data.path is required for a csv source".into()))?;
            let path = Path::new(path);
            let schema = match cfg.schema.as_str() {
                "infer" => Arc::new(infer_schema(path, &cfg.label_column)?),
                name => Arc::new(Schema::by_name(name)?),
            };
            load_dataset(path, &schema)
        }
        other => Err(Error::Config(format!("unknown data source '{other}'"))),
    }
}

/// Build a schema from a CSV header: every non-label column is a numeric
/// feature.
pub fn infer_schema(path: &Path, label_column: &str) -> Result<Schema> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut columns = Vec::new();
    let mut found_label = false;
    for h in headers.iter() {
        if h.trim().eq_ignore_ascii_case(label_column) {
            found_label = true;
        } else {
            columns.push(h.trim().to_string());
        }
    }
    if !found_label {
        return Err(Error::Schema(format!(
            "label column '{label_column}' not found in {}",
            path.display()
        )));
    }
    Ok(Schema::custom("inferred", columns, label_column, Vec::new()))
}

struct Audit {
    test_ids: HashSet<u64>,
    checks: usize,
}

impl Audit {
    fn new(test: &Dataset) -> Audit {
        Audit { test_ids: test.row_ids.iter().copied().collect(), checks: 0 }
    }

    /// Debug-mode assertion that no test row reached a training-side stage.
    fn check(&mut self, stage: &str, d: &Dataset) {
        if cfg!(debug_assertions) {
            self.checks += 1;
            for id in &d.row_ids {
                assert!(
                    !self.test_ids.contains(id),
                    "leakage: test row {id} entered stage '{stage}'"
                );
            }
        }
    }
}

fn apply_sampling(
    train: &Dataset,
    scenario: Scenario,
    cfg: &SamplingConfig,
) -> Result<(Dataset, Vec<SyntheticOrigin>)> {
    match scenario {
        Scenario::None => Ok((train.clone(), Vec::new())),
        Scenario::Smote => {
            let Sampled { dataset, origins } = smote(train, &cfg.smote_config())?;
            Ok((dataset, origins))
        }
        Scenario::Ros => {
            let Sampled { dataset, .. } = random_oversample(train, cfg.target_ratio, cfg.seed)?;
            Ok((dataset, Vec::new()))
        }
        Scenario::Rus => {
            let Sampled { dataset, .. } = random_undersample(train, cfg.target_ratio, cfg.seed)?;
            Ok((dataset, Vec::new()))
        }
    }
}

/// Stratified row cap for kernel-SVM training: keeps every minority row and
/// fills the rest of the budget with a seeded majority subsample.
fn cap_rows(train: &Dataset, cap: usize, seed: u64) -> Dataset {
    if cap == 0 || train.n_rows() <= cap {
        return train.clone();
    }
    use rand::{Rng, SeedableRng};
    let (n0, n1) = train.label_counts();
    let minority_label = if n0 <= n1 { 0u8 } else { 1u8 };
    let minority: Vec<usize> =
        (0..train.n_rows()).filter(|&i| train.y[i] == minority_label).collect();
    let mut majority: Vec<usize> =
        (0..train.n_rows()).filter(|&i| train.y[i] != minority_label).collect();

    let keep_minority = minority.len().min(cap / 2);
    let keep_majority = cap - keep_minority;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = if keep_minority < minority.len() {
        let mut m = minority.clone();
        for t in 0..keep_minority {
            let j = rng.gen_range(t..m.len());
            m.swap(t, j);
        }
        m[..keep_minority].to_vec()
    } else {
        minority
    };
    for t in 0..keep_majority.min(majority.len()) {
        let j = rng.gen_range(t..majority.len());
        majority.swap(t, j);
    }
    keep.extend(&majority[..keep_majority.min(majority.len())]);
    keep.sort_unstable();
    train.select_rows(&keep)
}

/// Run the full pipeline: load -> split -> preprocess (fit on train only) ->
/// feature-select (train only) -> sample (train only) -> fit -> evaluate.
/// A failing stage aborts only its own (model, scenario) cell.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let specs = cfg.models.build_specs()?;
    let scenarios = cfg.scenarios()?;

    let full = load_data(&cfg.data)?;
    full.check_finite()?;

    let (train_raw, test_raw) = match cfg.split.exact_train_counts {
        Some(counts) => holdout_exact(&full, counts, cfg.split.seed)?,
        None => crate::eval::holdout_split(
            &full,
            cfg.split.train_fraction,
            cfg.split.stratified,
            cfg.split.seed,
        )?,
    };
    let mut audit = Audit::new(&test_raw);

    audit.check("preprocess-fit", &train_raw);
    let opts = PreprocessOptions {
        drop: cfg.preprocess.drop.clone(),
        categorical: cfg.preprocess.categorical.clone(),
        max_categories: cfg.preprocess.max_categories,
    };
    let prep = Preprocessor::fit(&train_raw, &opts)?;
    let mut train = prep.transform(&train_raw)?;
    let mut test = prep.transform(&test_raw)?;

    let mut feature_reports = Vec::new();
    let mut selected_features = None;
    if !cfg.select.scorers.is_empty() {
        audit.check("feature-select", &train);
        for name in &cfg.select.scorers {
            let report = match ScorerKind::parse(name)? {
                ScorerKind::Chi2 => chi2_scores(&train, cfg.select.threshold_fraction)?,
                ScorerKind::MutualInfo => {
                    mutual_info_scores(&train, cfg.select.mi_bins, cfg.select.threshold_fraction)?
                }
                ScorerKind::RfImportance => rf_importance_scores(
                    &train,
                    cfg.select.rf_trees,
                    cfg.select.rf_seed,
                    cfg.select.threshold_fraction,
                )?,
            };
            feature_reports.push(report);
        }
        let union = select_union(&feature_reports)?;
        train = train.select_columns_by_name(&union)?;
        test = test.select_columns_by_name(&union)?;
        selected_features = Some(union);
    }

    let test_counts = test.label_counts();
    let timing_runs = cfg.timing.enabled.then_some(cfg.timing.runs);

    let mut cells = Vec::new();
    let mut scenario_origins = Vec::new();
    let mut models = Vec::new();

    for scenario in scenarios {
        audit.check("sample", &train);
        let sampled = match apply_sampling(&train, scenario, &cfg.sampling) {
            Ok((dataset, origins)) => {
                scenario_origins.push((scenario, origins, train.n_rows()));
                dataset
            }
            Err(e) => {
                // The whole scenario column fails; record one error per model.
                for spec in &specs {
                    cells.push(CellResult {
                        model: spec.kind(),
                        scenario,
                        train_counts: train.label_counts(),
                        test_counts,
                        outcome: CellOutcome::Error(format!("sampling failed: {e}")),
                    });
                }
                continue;
            }
        };

        for spec in &specs {
            let kind = spec.kind();
            let is_kernel = matches!(kind, ModelKind::SvmLinear | ModelKind::SvmRbf);
            let fit_set = if is_kernel {
                cap_rows(&sampled, cfg.models.kernel_train_cap, cfg.split.seed ^ 0x5eed)
            } else {
                sampled.clone()
            };
            audit.check("fit", &fit_set);

            let outcome = fit(&fit_set, spec).and_then(|m| {
                let report = evaluate_model(&m, &test, timing_runs)?;
                models.push((kind, scenario, m));
                Ok(report)
            });
            cells.push(CellResult {
                model: kind,
                scenario,
                train_counts: fit_set.label_counts(),
                test_counts,
                outcome: match outcome {
                    Ok(r) => CellOutcome::Report(r),
                    Err(e) => CellOutcome::Error(e.to_string()),
                },
            });
        }
    }

    Ok(RunSummary {
        cells,
        feature_reports,
        selected_features,
        imputed_cells: full.imputed_cells,
        audit_checks: audit.checks,
        scenario_origins,
        models,
    })
}

fn holdout_exact(d: &Dataset, counts: ExactCounts, seed: u64) -> Result<(Dataset, Dataset)> {
    crate::eval::holdout_split_exact(d, counts.normal, counts.attack, seed)
}

/// Atomic write: temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_pct(v: f64) -> String {
    format!("{:.4}", v * 100.0)
}

/// Render the summary table in the published column order.
pub fn summary_table(summary: &RunSummary) -> String {
    let mut out = String::new();
    out.push_str(
        "scheme\tscenario\taccuracy\trecall\tprecision\tFNR\tFPR\tF1-score\tAUC-score\tinference time [s]\n",
    );
    for cell in &summary.cells {
        match &cell.outcome {
            CellOutcome::Report(r) => {
                let m = &r.metrics;
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\n",
                    cell.model.display_name(),
                    cell.scenario.as_str(),
                    fmt_pct(m.accuracy),
                    fmt_pct(m.recall),
                    fmt_pct(m.precision),
                    fmt_pct(m.fnr),
                    fmt_pct(m.fpr),
                    fmt_pct(m.f1),
                    fmt_pct(r.auc),
                    r.inference_seconds,
                ));
            }
            CellOutcome::Error(e) => {
                out.push_str(&format!(
                    "{}\t{}\tERROR: {}\n",
                    cell.model.display_name(),
                    cell.scenario.as_str(),
                    e
                ));
            }
        }
    }
    out
}

/// Metrics exported as paired bar-chart data, one file each.
const BAR_METRICS: [&str; 5] = ["fpr", "fnr", "recall", "precision", "inference_time"];

/// Write all report files into `dir`: effective config, the summary table,
/// a machine-readable record, per-cell ROC points, per-scorer feature
/// scores, bar-chart data, and (optionally) provenance sidecars and model
/// artifacts.
pub fn emit_reports(summary: &RunSummary, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let config_path = dir.join("config.toml");
    write_atomic(&config_path, &cfg.to_toml_string()?)?;
    written.push(config_path);

    let table_path = dir.join("summary.txt");
    write_atomic(&table_path, &summary_table(summary))?;
    written.push(table_path);

    let json_path = dir.join("summary.json");
    let json =
        serde_json::to_string_pretty(summary).map_err(|e| Error::Serialize(e.to_string()))?;
    write_atomic(&json_path, &json)?;
    written.push(json_path);

    for cell in &summary.cells {
        if let CellOutcome::Report(r) = &cell.outcome {
            let mut text = String::from("fpr\ttpr\n");
            for p in &r.roc_points {
                text.push_str(&format!("{}\t{}\n", p.fpr, p.tpr));
            }
            let path = dir.join(format!("roc_{}_{}.tsv", cell.model, cell.scenario.as_str()));
            write_atomic(&path, &text)?;
            written.push(path);
        }
    }

    for report in &summary.feature_reports {
        let path = dir.join(format!("features_{}.tsv", report.scorer.as_str()));
        report.write_tsv(&path)?;
        written.push(path);
    }

    let scenario_order: Vec<Scenario> = {
        let mut seen = Vec::new();
        for c in &summary.cells {
            if !seen.contains(&c.scenario) {
                seen.push(c.scenario);
            }
        }
        seen
    };
    let model_order: Vec<ModelKind> = {
        let mut seen = Vec::new();
        for c in &summary.cells {
            if !seen.contains(&c.model) {
                seen.push(c.model);
            }
        }
        seen
    };
    for metric in BAR_METRICS {
        let mut text = String::from("model");
        for s in &scenario_order {
            text.push_str(&format!("\t{}", s.as_str()));
        }
        text.push('\n');
        for model in &model_order {
            text.push_str(model.as_str());
            for scenario in &scenario_order {
                let cell = summary
                    .cells
                    .iter()
                    .find(|c| c.model == *model && c.scenario == *scenario);
                let value = cell.and_then(|c| c.report()).map(|r| match metric {
                    "fpr" => r.metrics.fpr,
                    "fnr" => r.metrics.fnr,
                    "recall" => r.metrics.recall,
                    "precision" => r.metrics.precision,
                    _ => r.inference_seconds,
                });
                match value {
                    Some(v) => text.push_str(&format!("\t{v}")),
                    None => text.push_str("\tNA"),
                }
            }
            text.push('\n');
        }
        let path = dir.join(format!("bars_{metric}.tsv"));
        write_atomic(&path, &text)?;
        written.push(path);
    }

    if cfg.sampling.provenance {
        for (scenario, origins, n_original) in &summary.scenario_origins {
            if origins.is_empty() {
                continue;
            }
            let mut text = String::from("# synthetic_row\tbase\tneighbor\tgamma_digest\n");
            for (i, o) in origins.iter().enumerate() {
                text.push_str(&format!(
                    "{}\t{}\t{}\t{:016x}\n",
                    n_original + i,
                    o.base,
                    o.neighbor,
                    o.gamma_digest
                ));
            }
            let path = dir.join(format!("provenance_{}.tsv", scenario.as_str()));
            write_atomic(&path, &text)?;
            written.push(path);
        }
    }

    if cfg.output.save_models {
        for (kind, scenario, model) in &summary.models {
            let path = dir.join(format!("model_{}_{}.json", kind, scenario.as_str()));
            write_atomic(&path, &model.to_json()?)?;
            written.push(path);
        }
    }

    Ok(written)
}
