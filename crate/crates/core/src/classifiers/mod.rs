//! Eleven binary classifiers behind one interface.
//!
//! Every family is fitted through [`fit`] from a [`ClassifierSpec`] (family,
//! named hyperparameters, seed) and yields a [`TrainedClassifier`] whose
//! [`predict_proba`](TrainedClassifier::predict_proba) returns rows of
//! `[P(TD), P(ASD)]`. Labels are `0` (TD) and `1` (ASD); `predict` is the
//! argmax of the probability row with ties going to class 0.
//!
//! Hyperparameter names follow the grid vocabulary of each family (see
//! [`Family::vocabulary`]). Unknown names are rejected when the spec is
//! built; values are type-checked against the family's parameter parser.

pub mod adaboost;
pub mod boosting;
pub mod discriminant;
pub mod forest;
pub mod gmm;
pub mod knn;
pub mod logistic;
pub mod naive_bayes;
mod params;
pub mod svm;
pub mod tree;

pub use params::{Hyperparams, ParamValue};
pub(crate) use params::ParamReader;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{family}: unknown hyperparameter `{name}` (accepted: {accepted:?})")]
    UnknownParam { family: Family, name: String, accepted: Vec<&'static str> },
    #[error("{family}: invalid value for `{name}`: {reason}")]
    InvalidParam { family: Family, name: String, reason: String },
    #[error("training set is empty")]
    Empty,
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error("feature matrix holds a non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("expected {expected} feature columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{family} needs both classes in the training data")]
    SingleClass { family: Family },
    #[error("{family} did not converge after {iterations} iterations: {detail}")]
    Convergence { family: Family, iterations: usize, detail: String },
    #[error("{family}: singular covariance for {what}")]
    Singular { family: Family, what: String },
    #[error("{family}: {reason}")]
    Precondition { family: Family, reason: String },
}

/// Classifier families. Serialized with their short codes (`"SVM"`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "GNB")]
    Gnb,
    #[serde(rename = "DT")]
    Dt,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "KNN")]
    Knn,
    #[serde(rename = "GB")]
    Gb,
    #[serde(rename = "AB")]
    Ab,
    #[serde(rename = "GMM")]
    Gmm,
    #[serde(rename = "LDA")]
    Lda,
    #[serde(rename = "QDA")]
    Qda,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::Lr,
        Family::Gnb,
        Family::Dt,
        Family::Rf,
        Family::Svm,
        Family::Knn,
        Family::Gb,
        Family::Ab,
        Family::Gmm,
        Family::Lda,
        Family::Qda,
    ];

    /// The ten families shown in comparison reports (GMM is trainable but
    /// left out of the default report set).
    pub fn report_set() -> Vec<Family> {
        Family::ALL.into_iter().filter(|f| *f != Family::Gmm).collect()
    }

    pub fn code(self) -> &'static str {
        match self {
            Family::Lr => "LR",
            Family::Gnb => "GNB",
            Family::Dt => "DT",
            Family::Rf => "RF",
            Family::Svm => "SVM",
            Family::Knn => "KNN",
            Family::Gb => "GB",
            Family::Ab => "AB",
            Family::Gmm => "GMM",
            Family::Lda => "LDA",
            Family::Qda => "QDA",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Lr => "logistic regression",
            Family::Gnb => "Gaussian naive Bayes",
            Family::Dt => "decision tree",
            Family::Rf => "random forest",
            Family::Svm => "support vector machine",
            Family::Knn => "k-nearest neighbours",
            Family::Gb => "gradient boosting",
            Family::Ab => "AdaBoost",
            Family::Gmm => "Gaussian mixture",
            Family::Lda => "linear discriminant analysis",
            Family::Qda => "quadratic discriminant analysis",
        }
    }

    /// Accepted hyperparameter names.
    pub fn vocabulary(self) -> &'static [&'static str] {
        match self {
            Family::Lr => &[
                "penalty",
                "C",
                "dual",
                "tol",
                "fit_intercept",
                "intercept_scaling",
                "class_weight",
                "solver",
                "max_iter",
                "l1_ratio",
            ],
            Family::Gnb => &[],
            Family::Dt => &["criterion", "max_depth", "min_samples_split", "min_samples_leaf", "max_features"],
            Family::Rf => &[
                "n_estimators",
                "criterion",
                "max_depth",
                "min_samples_split",
                "min_samples_leaf",
                "max_features",
                "ccp_alpha",
            ],
            Family::Svm => &["C", "kernel", "gamma"],
            Family::Knn => &["n_neighbors", "weights", "algorithm", "p"],
            Family::Gb => &["learning_rate", "n_estimators", "max_depth", "subsample", "min_samples_split", "min_samples_leaf"],
            Family::Ab => &["n_estimators", "learning_rate", "algorithm"],
            Family::Gmm => &["n_components", "covariance_type"],
            Family::Lda => &["solver", "shrinkage", "n_components"],
            Family::Qda => &["reg_param"],
        }
    }

    fn needs_both_classes(self) -> bool {
        matches!(self, Family::Svm | Family::Lda | Family::Qda | Family::Gmm | Family::Ab | Family::Gb)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        let family = match upper.as_str() {
            "NB" => Family::Gnb,
            "ADABOOST" => Family::Ab,
            "KNN" | "K-NN" => Family::Knn,
            other => match Family::ALL.into_iter().find(|f| f.code() == other) {
                Some(f) => f,
                None => {
                    let codes: Vec<&str> = Family::ALL.iter().map(|f| f.code()).collect();
                    return Err(format!("unknown classifier family `{s}` (expected one of {})", codes.join(", ")));
                }
            },
        };
        Ok(family)
    }
}

/// Family, hyperparameters and seed of one classifier configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub family: Family,
    pub hyperparameters: Hyperparams,
    pub seed: u64,
}

impl ClassifierSpec {
    /// Builds and validates a spec.
    pub fn new(family: Family, hyperparameters: Hyperparams, seed: u64) -> Result<Self, ModelError> {
        let spec = ClassifierSpec { family, hyperparameters, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Library defaults for every hyperparameter.
    pub fn defaults(family: Family, seed: u64) -> Self {
        ClassifierSpec { family, hyperparameters: Hyperparams::new(), seed }
    }

    /// The tuned configuration shipped for production use.
    pub fn production_default(family: Family, seed: u64) -> Self {
        use crate::hyperparams;
        let hyperparameters = match family {
            Family::Lr => hyperparams! {
                "penalty" => "l1", "C" => 0.1, "dual" => false, "tol" => 0.01,
                "fit_intercept" => true, "intercept_scaling" => 1i64, "class_weight" => "balanced",
                "solver" => "saga", "max_iter" => 5000i64, "l1_ratio" => ParamValue::Null,
            },
            Family::Gnb => hyperparams! {},
            Family::Dt => hyperparams! {
                "criterion" => "gini", "max_depth" => 5i64, "min_samples_split" => 2i64,
                "min_samples_leaf" => 1i64, "max_features" => ParamValue::Null,
            },
            Family::Rf => hyperparams! {
                "n_estimators" => 200i64, "criterion" => "gini", "max_depth" => 10i64,
                "min_samples_split" => 5i64, "min_samples_leaf" => 4i64, "max_features" => "log2",
                "ccp_alpha" => 0.0,
            },
            Family::Svm => hyperparams! {"C" => 10.0, "kernel" => "rbf", "gamma" => "scale"},
            Family::Knn => hyperparams! {
                "n_neighbors" => 7i64, "weights" => "distance", "algorithm" => "ball_tree", "p" => 1i64,
            },
            Family::Gb => hyperparams! {
                "learning_rate" => 0.01, "n_estimators" => 100i64, "max_depth" => 3i64,
                "subsample" => 0.8, "min_samples_split" => 4i64, "min_samples_leaf" => 3i64,
            },
            Family::Ab => hyperparams! {"n_estimators" => 50i64, "learning_rate" => 1.0, "algorithm" => "SAMME"},
            Family::Gmm => hyperparams! {"n_components" => 2i64, "covariance_type" => "diag"},
            Family::Lda => hyperparams! {
                "solver" => "lsqr", "shrinkage" => ParamValue::Null, "n_components" => ParamValue::Null,
            },
            Family::Qda => hyperparams! {"reg_param" => 0.1},
        };
        ClassifierSpec { family, hyperparameters, seed }
    }

    pub fn with_param(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.hyperparameters.insert(name.to_string(), value.into());
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let vocabulary = self.family.vocabulary();
        for name in self.hyperparameters.keys() {
            if !vocabulary.contains(&name.as_str()) {
                return Err(ModelError::UnknownParam {
                    family: self.family,
                    name: name.clone(),
                    accepted: vocabulary.to_vec(),
                });
            }
        }
        let p = &self.hyperparameters;
        match self.family {
            Family::Lr => logistic::LogisticParams::parse(p).map(drop),
            Family::Gnb => Ok(()),
            Family::Dt => tree::TreeParams::parse(Family::Dt, p).map(drop),
            Family::Rf => forest::ForestParams::parse(p).map(drop),
            Family::Svm => svm::SvmParams::parse(p).map(drop),
            Family::Knn => knn::KnnParams::parse(p).map(drop),
            Family::Gb => boosting::GbParams::parse(p).map(drop),
            Family::Ab => adaboost::AdaBoostParams::parse(p).map(drop),
            Family::Gmm => gmm::GmmParams::parse(p).map(drop),
            Family::Lda => discriminant::LdaParams::parse(p).map(drop),
            Family::Qda => discriminant::QdaParams::parse(p).map(drop),
        }
    }

    /// Compact `name=value` rendering used in reports and logs.
    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.hyperparameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.family, parts.join(", "))
    }
}

/// Learned parameters, one variant per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Logistic(logistic::LogisticModel),
    NaiveBayes(naive_bayes::GaussianNb),
    Tree(tree::DecisionTree),
    Forest(forest::RandomForest),
    Svm(svm::SvmModel),
    Knn(knn::KnnModel),
    GradientBoosting(boosting::GradientBoosting),
    AdaBoost(adaboost::AdaBoost),
    Gmm(gmm::GmmClassifier),
    Lda(discriminant::Lda),
    Qda(discriminant::Qda),
}

impl Model {
    fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        match self {
            Model::Logistic(m) => m.positive_proba(x),
            Model::NaiveBayes(m) => m.positive_proba(x),
            Model::Tree(m) => m.positive_proba(x),
            Model::Forest(m) => m.positive_proba(x),
            Model::Svm(m) => m.positive_proba(x),
            Model::Knn(m) => m.positive_proba(x),
            Model::GradientBoosting(m) => m.positive_proba(x),
            Model::AdaBoost(m) => m.positive_proba(x),
            Model::Gmm(m) => m.positive_proba(x),
            Model::Lda(m) => m.positive_proba(x),
            Model::Qda(m) => m.positive_proba(x),
        }
    }
}

/// A fitted classifier: the spec it was trained from plus learned parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub spec: ClassifierSpec,
    pub n_features: usize,
    pub model: Model,
}

impl TrainedClassifier {
    pub fn family(&self) -> Family {
        self.spec.family
    }

    fn check_dims(&self, x: ArrayView2<f64>) -> Result<(), ModelError> {
        if x.ncols() != self.n_features && x.nrows() > 0 {
            return Err(ModelError::DimensionMismatch { expected: self.n_features, found: x.ncols() });
        }
        Ok(())
    }

    /// `P(ASD)` per row.
    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>, ModelError> {
        self.check_dims(x)?;
        if x.nrows() == 0 {
            return Ok(Vec::new());
        }
        Ok(self.model.positive_proba(x))
    }

    /// Rows of `[P(TD), P(ASD)]`.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, ModelError> {
        let p = self.positive_proba(x)?;
        let mut out = Array2::zeros((p.len(), 2));
        for (i, &p1) in p.iter().enumerate() {
            out[[i, 0]] = 1.0 - p1;
            out[[i, 1]] = p1;
        }
        Ok(out)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<u8>, ModelError> {
        Ok(self.positive_proba(x)?.into_iter().map(label_from_proba).collect())
    }
}

/// Argmax of `[1 - p, p]`, ties to class 0.
pub fn label_from_proba(p: f64) -> u8 {
    u8::from(p > 1.0 - p)
}

/// Checks shapes, labels and finiteness of a training set and returns the
/// class counts `[TD, ASD]`.
pub(crate) fn check_training_data(x: ArrayView2<f64>, y: &[u8]) -> Result<[usize; 2], ModelError> {
    if x.nrows() != y.len() {
        return Err(ModelError::LengthMismatch { rows: x.nrows(), labels: y.len() });
    }
    if y.is_empty() {
        return Err(ModelError::Empty);
    }
    let mut counts = [0usize; 2];
    for &label in y {
        if label > 1 {
            return Err(ModelError::BadLabel(label));
        }
        counts[label as usize] += 1;
    }
    for ((row, column), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(ModelError::NonFinite { row, column });
        }
    }
    Ok(counts)
}

/// Fits the classifier described by `spec`.
pub fn fit(spec: &ClassifierSpec, x: ArrayView2<f64>, y: &[u8]) -> Result<TrainedClassifier, ModelError> {
    spec.validate()?;
    let counts = check_training_data(x, y)?;
    if spec.family.needs_both_classes() && counts.contains(&0) {
        return Err(ModelError::SingleClass { family: spec.family });
    }
    let p = &spec.hyperparameters;
    let seed = spec.seed;
    let model = match spec.family {
        Family::Lr => Model::Logistic(logistic::fit(x, y, &logistic::LogisticParams::parse(p)?)?),
        Family::Gnb => Model::NaiveBayes(naive_bayes::fit(x, y)),
        Family::Dt => Model::Tree(tree::fit_classifier(x, y, &tree::TreeParams::parse(Family::Dt, p)?, seed)),
        Family::Rf => Model::Forest(forest::fit(x, y, &forest::ForestParams::parse(p)?, seed)),
        Family::Svm => Model::Svm(svm::fit(x, y, &svm::SvmParams::parse(p)?)?),
        Family::Knn => Model::Knn(knn::fit(x, y, &knn::KnnParams::parse(p)?)?),
        Family::Gb => Model::GradientBoosting(boosting::fit(x, y, &boosting::GbParams::parse(p)?, seed)),
        Family::Ab => Model::AdaBoost(adaboost::fit(x, y, &adaboost::AdaBoostParams::parse(p)?)),
        Family::Gmm => Model::Gmm(gmm::fit(x, y, &gmm::GmmParams::parse(p)?, &gmm::EmOptions::default(), seed)?),
        Family::Lda => Model::Lda(discriminant::fit_lda(x, y, &discriminant::LdaParams::parse(p)?)?),
        Family::Qda => Model::Qda(discriminant::fit_qda(x, y, &discriminant::QdaParams::parse(p)?)?),
    };
    Ok(TrainedClassifier { spec: spec.clone(), n_features: x.ncols(), model })
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `P(class 1)` from two unnormalized log scores.
pub(crate) fn proba_from_logs(log0: f64, log1: f64) -> f64 {
    match (log0.is_finite(), log1.is_finite()) {
        (true, true) => sigmoid(log1 - log0),
        (false, true) => 1.0,
        (true, false) => 0.0,
        (false, false) => 0.5,
    }
}
