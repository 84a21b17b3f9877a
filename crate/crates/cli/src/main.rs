//! Command-line front end: run experiments, generate synthetic traffic,
//! score features, and emit rebalanced datasets.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use flowclass::data::{load_dataset, write_csv, ColumnKind, Dataset};
use flowclass::experiment::{
    emit_reports, infer_schema, run_experiment, summary_table, ExperimentConfig,
};
use flowclass::sample::{random_oversample, random_undersample, smote, GammaMode, SmoteConfig};
use flowclass::schema::Schema;
use flowclass::select::{
    chi2_scores, mutual_info_scores, rf_importance_scores, select_union, FeatureReport,
};
use flowclass::synth::{generate_synthetic, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "flowclass",
    version,
    about = "Train and evaluate binary network-flow classifiers under class imbalance"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full experiment pipeline and write report files.
    Run(RunArgs),
    /// Generate a synthetic imbalanced dataset.
    Gen(GenArgs),
    /// Score features and write per-scorer selection reports.
    Features(FeaturesArgs),
    /// Rebalance a dataset and emit it as CSV.
    Sample(SampleArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Flow-record CSV to load (otherwise synthetic data is generated).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Named schema for the CSV ("bot-iot"), or "infer".
    #[arg(long, default_value = "infer")]
    schema: String,
    /// Label column used when inferring a schema.
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value_t = 7500)]
    n_majority: usize,
    #[arg(long, default_value_t = 100)]
    n_minority: usize,
    #[arg(long, default_value_t = 4)]
    n_features: usize,
    /// Mean separation between the two synthetic blobs, per coordinate.
    #[arg(long, default_value_t = 2.6)]
    sep: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Seed for the synthetic generator.
    #[arg(long, default_value_t = 7)]
    data_seed: u64,
}

impl DataArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(path) = &self.csv {
            cfg.data.source = "csv".into();
            cfg.data.path = Some(path.to_string_lossy().into_owned());
            cfg.data.schema = self.schema.clone();
            cfg.data.label_column = self.label_column.clone();
        } else {
            cfg.data.source = "synthetic".into();
            cfg.data.n_majority = self.n_majority;
            cfg.data.n_minority = self.n_minority;
            cfg.data.n_features = self.n_features;
            cfg.data.class_separation = self.sep;
            cfg.data.noise_sigma = self.sigma;
            cfg.data.seed = self.data_seed;
        }
    }

    fn load(&self) -> Result<Dataset> {
        if let Some(path) = &self.csv {
            let schema = match self.schema.as_str() {
                "infer" => Arc::new(infer_schema(path, &self.label_column)?),
                name => Arc::new(Schema::by_name(name)?),
            };
            Ok(load_dataset(path, &schema)?)
        } else {
            let spec = SyntheticSpec {
                n_majority: self.n_majority,
                n_minority: self.n_minority,
                n_features: self.n_features,
                class_separation: self.sep,
                noise_sigma: self.sigma,
                seed: self.data_seed,
            };
            Ok(generate_synthetic(&spec)?)
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
    #[command(flatten)]
    data: DataArgs,
    /// Output directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated sampling scenarios (none, smote, ros, rus).
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<String>>,
    /// Comma-separated model kinds.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Comma-separated feature scorers (chi2, mutual_info, rf_importance).
    #[arg(long, value_delimiter = ',')]
    scorers: Option<Vec<String>>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Hold-out split seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    smote_k: Option<usize>,
    #[arg(long)]
    target_ratio: Option<f64>,
    #[arg(long)]
    sampling_seed: Option<u64>,
    #[arg(long)]
    max_categories: Option<usize>,
    /// Row cap for kernel-SVM training sets (0 disables).
    #[arg(long)]
    kernel_cap: Option<usize>,
    /// Skip wall-clock inference timing (reports become byte-reproducible).
    #[arg(long)]
    no_timing: bool,
    /// Save every trained model as JSON next to the reports.
    #[arg(long)]
    save_models: bool,
    /// Write SMOTE provenance sidecars.
    #[arg(long)]
    provenance: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Where to write the generated CSV.
    #[arg(long)]
    emit_csv: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Scorers to run.
    #[arg(long, value_delimiter = ',', default_values_t = ["chi2".to_string(), "mutual_info".to_string(), "rf_importance".to_string()])]
    scorers: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    threshold_fraction: f64,
    #[arg(long, default_value_t = 10)]
    mi_bins: usize,
    #[arg(long, default_value_t = 50)]
    rf_trees: usize,
    #[arg(long, default_value_t = 17)]
    rf_seed: u64,
    #[arg(long, default_value_t = 64)]
    max_categories: usize,
    /// Directory for the per-scorer report files.
    #[arg(long, default_value = "features_out")]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Sampling mode: smote, ros, or rus.
    #[arg(long, default_value = "smote")]
    mode: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    target_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Interpolation weights: vector (per-coordinate) or scalar.
    #[arg(long, default_value = "vector")]
    gamma_mode: String,
    /// Where to write the rebalanced CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional SMOTE provenance sidecar path.
    #[arg(long)]
    provenance: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Gen(args) => cmd_gen(args).map(|_| ExitCode::SUCCESS),
        Cmd::Features(args) => cmd_features(args).map(|_| ExitCode::SUCCESS),
        Cmd::Sample(args) => cmd_sample(args).map(|_| ExitCode::SUCCESS),
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };

    // Flag overrides. Data flags only apply when given explicitly or no
    // config file set a source.
    if args.config.is_none() || args.data.csv.is_some() {
        args.data.apply(&mut cfg);
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if let Some(s) = args.scenarios {
        cfg.sampling.scenarios = s;
    }
    if let Some(m) = args.models {
        cfg.models.kinds = m;
    }
    if let Some(s) = args.scorers {
        cfg.select.scorers = s;
    }
    if let Some(f) = args.train_fraction {
        cfg.split.train_fraction = f;
    }
    if let Some(s) = args.seed {
        cfg.split.seed = s;
    }
    if let Some(k) = args.smote_k {
        cfg.sampling.k = k;
    }
    if let Some(r) = args.target_ratio {
        cfg.sampling.target_ratio = r;
    }
    if let Some(s) = args.sampling_seed {
        cfg.sampling.seed = s;
    }
    if let Some(m) = args.max_categories {
        cfg.preprocess.max_categories = m;
    }
    if let Some(c) = args.kernel_cap {
        cfg.models.kernel_train_cap = c;
    }
    if args.no_timing {
        cfg.timing.enabled = false;
    }
    if args.save_models {
        cfg.output.save_models = true;
    }
    if args.provenance {
        cfg.sampling.provenance = true;
    }

    if args.print_config {
        print!("{}", cfg.to_toml_string()?);
        return Ok(ExitCode::SUCCESS);
    }

    let summary = run_experiment(&cfg)?;
    let out_dir = PathBuf::from(&cfg.output.dir);
    let files = emit_reports(&summary, &cfg, &out_dir)?;

    print!("{}", summary_table(&summary));
    if summary.imputed_cells > 0 {
        eprintln!("note: {} missing numeric cells imputed as 0", summary.imputed_cells);
    }
    eprintln!("wrote {} report files to {}", files.len(), out_dir.display());

    if summary.all_ok() {
        Ok(ExitCode::SUCCESS)
    } else {
        for cell in &summary.cells {
            if let flowclass::experiment::CellOutcome::Error(e) = &cell.outcome {
                eprintln!("cell {}/{} failed: {e}", cell.model, cell.scenario.as_str());
            }
        }
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let d = args.data.load()?;
    write_csv(&d, &args.emit_csv)?;
    let (normal, attack) = d.label_counts();
    println!(
        "wrote {} rows ({attack} attack / {normal} normal) to {}",
        d.n_rows(),
        args.emit_csv.display()
    );
    Ok(())
}

fn cmd_features(args: FeaturesArgs) -> Result<()> {
    use flowclass::preprocess::{PreprocessOptions, Preprocessor};

    let raw = args.data.load()?;
    let opts = PreprocessOptions { max_categories: args.max_categories, ..Default::default() };
    let prep = Preprocessor::fit(&raw, &opts)?;
    let d = prep.transform(&raw)?;

    std::fs::create_dir_all(&args.out)?;
    let mut reports: Vec<FeatureReport> = Vec::new();
    for scorer in &args.scorers {
        let report = match flowclass::select::ScorerKind::parse(scorer)? {
            flowclass::select::ScorerKind::Chi2 => chi2_scores(&d, args.threshold_fraction)?,
            flowclass::select::ScorerKind::MutualInfo => {
                mutual_info_scores(&d, args.mi_bins, args.threshold_fraction)?
            }
            flowclass::select::ScorerKind::RfImportance => {
                rf_importance_scores(&d, args.rf_trees, args.rf_seed, args.threshold_fraction)?
            }
        };
        let path = args.out.join(format!("features_{}.tsv", report.scorer.as_str()));
        report.write_tsv(&path)?;
        println!("{}: {} features selected -> {}", scorer, report.selected.len(), path.display());
        reports.push(report);
    }
    let union = select_union(&reports)?;
    println!("union set ({} features): {}", union.len(), union.join(", "));
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let d = args.data.load()?;
    let (normal_before, attack_before) = d.label_counts();

    let sampled = match args.mode.as_str() {
        "smote" => {
            if d.columns.iter().any(|c| c.kind == ColumnKind::Categorical) {
                bail!(
                    "SMOTE interpolates numeric features; one-hot encode categorical columns first \
                     (run the `run` pipeline or drop them)"
                );
            }
            let gamma_mode = match args.gamma_mode.as_str() {
                "vector" => GammaMode::Vector,
                "scalar" => GammaMode::Scalar,
                other => bail!("unknown gamma mode '{other}'"),
            };
            let cfg = SmoteConfig {
                k: args.k,
                target_ratio: args.target_ratio,
                seed: args.seed,
                gamma_mode,
            };
            smote(&d, &cfg)?
        }
        "ros" => random_oversample(&d, args.target_ratio, args.seed)?,
        "rus" => random_undersample(&d, args.target_ratio, args.seed)?,
        other => bail!("unknown sampling mode '{other}' (expected smote, ros or rus)"),
    };

    write_csv(&sampled.dataset, &args.out)?;
    if let Some(prov) = &args.provenance {
        sampled.write_provenance(prov, d.n_rows())?;
    }
    let (normal, attack) = sampled.dataset.label_counts();
    println!(
        "{}: {attack_before}/{normal_before} -> {attack}/{normal} (attack/normal) rows -> {}",
        args.mode,
        args.out.display()
    );
    Ok(())
}
