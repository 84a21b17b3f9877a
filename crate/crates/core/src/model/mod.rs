//! The seven trainable binary classifiers behind one interface: fit,
//! predict, and a real-valued decision score.

pub mod forest;
pub mod gbt;
pub mod linear;
pub mod mlp;
pub mod svm;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use forest::{fit_random_forest, ForestParams, Mtry};
pub use gbt::GbtParams;
pub use linear::LinearParams;
pub use mlp::{MlpNet, MlpParams};
pub use svm::{DualSolution, Kernel, SvmParams};
pub use tree::Tree;

use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LogReg,
    LinearSvc,
    SvmLinear,
    SvmRbf,
    RandomForest,
    Gbt,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::LogReg,
        ModelKind::LinearSvc,
        ModelKind::SvmLinear,
        ModelKind::SvmRbf,
        ModelKind::RandomForest,
        ModelKind::Gbt,
        ModelKind::Mlp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::LogReg => "logreg",
            ModelKind::LinearSvc => "linear_svc",
            ModelKind::SvmLinear => "svm_linear",
            ModelKind::SvmRbf => "svm_rbf",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Gbt => "gbt",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Result<ModelKind> {
        match s {
            "logreg" | "logistic_regression" => Ok(ModelKind::LogReg),
            "linear_svc" => Ok(ModelKind::LinearSvc),
            "svm_linear" | "svm_linear_kernel" => Ok(ModelKind::SvmLinear),
            "svm_rbf" | "svm_rbf_kernel" => Ok(ModelKind::SvmRbf),
            "random_forest" | "rf" => Ok(ModelKind::RandomForest),
            "gbt" | "xgboost" | "gradient_boosting" => Ok(ModelKind::Gbt),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Config(format!("unknown model kind '{other}'"))),
        }
    }

    /// Human-readable name used in report tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            ModelKind::LogReg => "Logistic regression",
            ModelKind::LinearSvc => "Linear SVC",
            ModelKind::SvmLinear => "Linear kernel SVM",
            ModelKind::SvmRbf => "RBF kernel SVM",
            ModelKind::RandomForest => "Random forest",
            ModelKind::Gbt => "Gradient boosting",
            ModelKind::Mlp => "MLP",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A classifier family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    LogReg(LinearParams),
    LinearSvc(LinearParams),
    SvmLinear(SvmParams),
    SvmRbf(SvmParams),
    RandomForest(ForestParams),
    Gbt(GbtParams),
    Mlp(MlpParams),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::LogReg(_) => ModelKind::LogReg,
            ModelSpec::LinearSvc(_) => ModelKind::LinearSvc,
            ModelSpec::SvmLinear(_) => ModelKind::SvmLinear,
            ModelSpec::SvmRbf(_) => ModelKind::SvmRbf,
            ModelSpec::RandomForest(_) => ModelKind::RandomForest,
            ModelSpec::Gbt(_) => ModelKind::Gbt,
            ModelSpec::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn default_for(kind: ModelKind) -> ModelSpec {
        match kind {
            ModelKind::LogReg => ModelSpec::LogReg(LinearParams::default()),
            ModelKind::LinearSvc => ModelSpec::LinearSvc(LinearParams::default()),
            ModelKind::SvmLinear => ModelSpec::SvmLinear(SvmParams::default()),
            ModelKind::SvmRbf => ModelSpec::SvmRbf(SvmParams::default()),
            ModelKind::RandomForest => ModelSpec::RandomForest(ForestParams::default()),
            ModelKind::Gbt => ModelSpec::Gbt(GbtParams::default()),
            ModelKind::Mlp => ModelSpec::Mlp(MlpParams::default()),
        }
    }
}

/// Learned parameters per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Learned {
    Linear {
        w: Vec<f64>,
        b: f64,
        /// Score through a sigmoid (logreg) or as a raw margin (svc).
        probability: bool,
    },
    Svm {
        kernel: Kernel,
        support: Matrix,
        /// `alpha_i * y_i` per kept support vector.
        coeff: Vec<f64>,
        b: f64,
        n_features: usize,
    },
    Forest {
        trees: Vec<Tree>,
        /// Per-feature accumulated Gini decrease across all trees.
        split_gains: Vec<f64>,
        n_features: usize,
    },
    Gbt {
        init: f64,
        trees: Vec<Tree>,
        n_features: usize,
        /// Training loss after initialization and after each round.
        loss_history: Vec<f64>,
    },
    Mlp(MlpNet),
}

/// Training metadata kept with every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub final_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// A trained classifier: immutable, serializable, thread-safe to share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub version: u32,
    pub spec: ModelSpec,
    pub learned: Learned,
    pub meta: TrainMeta,
}

/// Train the classifier described by `spec`.
pub fn fit(d: &Dataset, spec: &ModelSpec) -> Result<Model> {
    if d.n_rows() == 0 {
        return Err(Error::Fit("cannot train on an empty dataset".into()));
    }
    d.check_finite()?;
    match spec {
        ModelSpec::LogReg(p) => linear::fit_logreg(d, spec, p),
        ModelSpec::LinearSvc(p) => linear::fit_linear_svc(d, spec, p),
        ModelSpec::SvmLinear(p) => svm::fit_svm(d, spec, p, true),
        ModelSpec::SvmRbf(p) => svm::fit_svm(d, spec, p, false),
        ModelSpec::RandomForest(p) => forest::fit_random_forest(d, spec, p),
        ModelSpec::Gbt(p) => gbt::fit_gbt(d, spec, p),
        ModelSpec::Mlp(p) => mlp::fit_mlp(d, spec, p),
    }
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn n_features(&self) -> usize {
        match &self.learned {
            Learned::Linear { w, .. } => w.len(),
            Learned::Svm { n_features, .. } => *n_features,
            Learned::Forest { n_features, .. } => *n_features,
            Learned::Gbt { n_features, .. } => *n_features,
            Learned::Mlp(net) => net.n_inputs(),
        }
    }

    /// Decision threshold: 0 for margin scores, 0.5 for probabilities and
    /// vote fractions.
    pub fn threshold(&self) -> f64 {
        match self.kind() {
            ModelKind::LinearSvc | ModelKind::SvmLinear | ModelKind::SvmRbf => 0.0,
            _ => 0.5,
        }
    }

    fn check_dims(&self, x: &Matrix) -> Result<()> {
        if x.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), got: x.n_cols() });
        }
        Ok(())
    }

    #[inline]
    fn score_row(&self, row: &[f64]) -> f64 {
        match &self.learned {
            Learned::Linear { w, b, probability } => {
                let z = b + linear::dot(w, row);
                if *probability {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    z
                }
            }
            Learned::Svm { kernel, support, coeff, b, .. } => {
                svm::svm_score(kernel, support, coeff, *b, row)
            }
            Learned::Forest { trees, .. } => forest::vote_fraction(trees, row),
            Learned::Gbt { init, trees, .. } => {
                let mut raw = *init;
                for t in trees {
                    raw += t.predict_row(row);
                }
                1.0 / (1.0 + (-raw).exp())
            }
            Learned::Mlp(net) => {
                let z = net.forward_logit(row);
                1.0 / (1.0 + (-z).exp())
            }
        }
    }

    /// Real-valued decision scores, one per row.
    pub fn decision_scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_dims(x)?;
        Ok((0..x.n_rows()).map(|i| self.score_row(x.row(i))).collect())
    }

    /// Hard labels: `score >= threshold`.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        let thr = self.threshold();
        Ok(self.decision_scores(x)?.into_iter().map(|s| u8::from(s >= thr)).collect())
    }

    /// Normalized Gini importance for forest models (sums to 1).
    pub fn forest_importance(&self) -> Result<Vec<f64>> {
        match &self.learned {
            Learned::Forest { split_gains, .. } => {
                let total: f64 = split_gains.iter().sum();
                if total <= 0.0 {
                    return Err(Error::Fit(
                        "no split gains accumulated; importance undefined".into(),
                    ));
                }
                Ok(split_gains.iter().map(|g| g / total).collect())
            }
            _ => Err(Error::InvalidInput("not a forest model".into())),
        }
    }

    /// Self-describing JSON artifact (version + spec + parameters),
    /// round-trippable bit-exactly.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Model> {
        serde_json::from_str(json).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model> {
        Model::from_json(&std::fs::read_to_string(path)?)
    }
}
