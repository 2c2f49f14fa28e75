//! Stratified K-fold plans, cross-validation and exhaustive grid search.
//!
//! Every fold fits its own scaler and classifier on the out-of-fold rows,
//! so held-out rows never reach a fit call. Grid candidates are enumerated
//! with the first axis varying slowest; the best candidate is the highest
//! mean fold score, ties going to the earliest candidate. A candidate that
//! fails on any fold scores `-inf` and keeps its error message.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{ClassifierSpec, Family, Hyperparams, ModelError, ParamValue};
use crate::data::Dataset;
use crate::evaluation::{self, EvalError};
use crate::pipeline::{FittedPipeline, PipelineError, ScalingConfig};
use crate::rng;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("cannot build {n_folds} folds: {reason}")]
    Folds { n_folds: usize, reason: String },
    #[error("fold plan covers {plan} rows but the data has {data}")]
    PlanMismatch { plan: usize, data: usize },
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("grid axis `{axis}` is not a {family} hyperparameter")]
    UnknownAxis { family: Family, axis: String },
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: PipelineError },
    #[error("fold {fold}: {source}")]
    Score { fold: usize, source: EvalError },
    #[error("refit of the best candidate failed: {0}")]
    Refit(PipelineError),
}

impl SearchError {
    /// The underlying model error, if any.
    pub fn model_error(&self) -> Option<&ModelError> {
        match self {
            SearchError::Fold { source: PipelineError::Model(e), .. } | SearchError::Refit(PipelineError::Model(e)) => Some(e),
            _ => None,
        }
    }
}

/// Fold index of every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.assignments.len()
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified plan: each class is shuffled, then dealt round-robin across
/// folds, the deal continuing from where the previous class stopped.
pub fn make_folds(y: &[u8], n_folds: usize, seed: u64) -> Result<FoldPlan, SearchError> {
    if n_folds < 2 {
        return Err(SearchError::Folds { n_folds, reason: "at least two folds are needed".into() });
    }
    let mut r = rng::child_rng(seed, rng::stream::FOLDS);
    let mut assignments = vec![0; y.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.len() < n_folds {
            return Err(SearchError::Folds {
                n_folds,
                reason: format!("class {} has only {} rows", crate::data::label_name(class), rows.len()),
            });
        }
        rows.shuffle(&mut r);
        for i in rows {
            assignments[i] = next;
            next = (next + 1) % n_folds;
        }
    }
    Ok(FoldPlan { n_folds, assignments, seed, stratified: true })
}

/// Plain shuffled K-fold without regard to labels.
pub fn make_folds_unstratified(n_rows: usize, n_folds: usize, seed: u64) -> Result<FoldPlan, SearchError> {
    if n_folds < 2 || n_rows < n_folds {
        return Err(SearchError::Folds { n_folds, reason: format!("{n_rows} rows cannot fill {n_folds} folds") });
    }
    let mut rows: Vec<usize> = (0..n_rows).collect();
    rows.shuffle(&mut rng::child_rng(seed, rng::stream::FOLDS));
    let mut assignments = vec![0; n_rows];
    for (pos, i) in rows.into_iter().enumerate() {
        assignments[i] = pos % n_folds;
    }
    Ok(FoldPlan { n_folds, assignments, seed, stratified: false })
}

/// Fold score; larger is better for every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Accuracy,
    Recall,
    Precision,
    F1,
    NegLogLoss,
    RocAuc,
}

impl Metric {
    pub fn score(self, y: &[u8], p_hat: &[f64]) -> Result<f64, EvalError> {
        if self == Metric::NegLogLoss {
            return Ok(-evaluation::log_loss(y, p_hat)?);
        }
        if self == Metric::RocAuc {
            return Ok(evaluation::auc(&evaluation::roc_curve(y, p_hat)?));
        }
        let pred: Vec<u8> = p_hat.iter().map(|&p| crate::classifiers::label_from_proba(p)).collect();
        let cm = evaluation::confusion(y, &pred)?;
        Ok(match self {
            Metric::Accuracy => cm.accuracy(),
            Metric::Recall => cm.recall(),
            Metric::Precision => cm.precision(),
            _ => cm.f1(),
        })
    }
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Recall => "recall",
            Metric::Precision => "precision",
            Metric::F1 => "f1",
            Metric::NegLogLoss => "neg_log_loss",
            Metric::RocAuc => "roc_auc",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" => Ok(Metric::Accuracy),
            "recall" => Ok(Metric::Recall),
            "precision" => Ok(Metric::Precision),
            "f1" => Ok(Metric::F1),
            "neg_log_loss" => Ok(Metric::NegLogLoss),
            "roc_auc" => Ok(Metric::RocAuc),
            _ => Err(format!("unknown metric `{s}`")),
        }
    }
}

/// Fits one training part. Swappable so tests can observe every fit.
pub trait Fitter: Sync {
    fn fit(
        &self,
        spec: &ClassifierSpec,
        mask: Vec<String>,
        data: &Dataset,
        scaling: &ScalingConfig,
    ) -> Result<FittedPipeline, PipelineError>;
}

/// The production fitter: scaler then classifier.
#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineFitter;

impl Fitter for PipelineFitter {
    fn fit(&self, spec: &ClassifierSpec, mask: Vec<String>, data: &Dataset, scaling: &ScalingConfig) -> Result<FittedPipeline, PipelineError> {
        FittedPipeline::fit_matrix(spec, mask, data.x(), &data.schema().kinds(), data.y(), scaling)
    }
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    pub score: f64,
    pub model: FittedPipeline,
}

fn check_plan(data: &Dataset, plan: &FoldPlan) -> Result<(), SearchError> {
    if plan.n_rows() != data.n_rows() {
        Err(SearchError::PlanMismatch { plan: plan.n_rows(), data: data.n_rows() })
    } else {
        Ok(())
    }
}

fn run_fold(
    fitter: &dyn Fitter,
    spec: &ClassifierSpec,
    data: &Dataset,
    plan: &FoldPlan,
    fold: usize,
    metric: Metric,
    scaling: &ScalingConfig,
) -> Result<FoldOutcome, SearchError> {
    let train = data.select_rows(&plan.train_rows(fold));
    let test = data.select_rows(&plan.test_rows(fold));
    let model = fitter
        .fit(spec, data.schema().codes(), &train, scaling)
        .map_err(|source| SearchError::Fold { fold, source })?;
    let p = model.positive_proba(test.x()).map_err(|source| SearchError::Fold { fold, source })?;
    let score = metric.score(test.y(), &p).map_err(|source| SearchError::Score { fold, source })?;
    Ok(FoldOutcome { fold, score, model })
}

/// Per-fold outcomes including the fitted fold models.
pub fn cross_validate_with(
    fitter: &dyn Fitter,
    spec: &ClassifierSpec,
    data: &Dataset,
    plan: &FoldPlan,
    metric: Metric,
    scaling: &ScalingConfig,
) -> Result<Vec<FoldOutcome>, SearchError> {
    check_plan(data, plan)?;
    (0..plan.n_folds).map(|fold| run_fold(fitter, spec, data, plan, fold, metric, scaling)).collect()
}

/// Per-fold scores of `spec` on `data` (already restricted to its mask).
pub fn cross_val_score(
    spec: &ClassifierSpec,
    data: &Dataset,
    plan: &FoldPlan,
    metric: Metric,
    scaling: &ScalingConfig,
) -> Result<Vec<f64>, SearchError> {
    Ok(cross_validate_with(&PipelineFitter, spec, data, plan, metric, scaling)?.into_iter().map(|o| o.score).collect())
}

/// Candidate values per hyperparameter, in table order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub family: Family,
    pub axes: Vec<(String, Vec<ParamValue>)>,
}

fn values<T: Into<ParamValue> + Clone>(items: &[T]) -> Vec<ParamValue> {
    items.iter().cloned().map(Into::into).collect()
}

impl ParamGrid {
    pub fn new(family: Family, axes: Vec<(String, Vec<ParamValue>)>) -> Result<Self, SearchError> {
        for (axis, vals) in &axes {
            if !family.vocabulary().contains(&axis.as_str()) {
                return Err(SearchError::UnknownAxis { family, axis: axis.clone() });
            }
            if vals.is_empty() {
                return Err(SearchError::EmptyGrid);
            }
        }
        Ok(ParamGrid { family, axes })
    }

    /// The tuning grid shipped for `family`. Naive Bayes has no axes and
    /// yields the single default candidate.
    pub fn preset(family: Family) -> ParamGrid {
        let none = ParamValue::Null;
        let axes: Vec<(&str, Vec<ParamValue>)> = match family {
            Family::Lr => vec![
                ("penalty", values(&["l1"])),
                ("C", values(&[0.01, 0.1, 1.0, 10.0])),
                ("dual", values(&[false])),
                ("tol", values(&[0.0001, 0.001, 0.01])),
                ("fit_intercept", values(&[true, false])),
                ("intercept_scaling", values(&[1i64, 2, 5])),
                ("class_weight", vec![none.clone(), "balanced".into()]),
                ("solver", values(&["saga"])),
                ("max_iter", values(&[1000i64, 2000, 5000])),
                ("l1_ratio", vec![none]),
            ],
            Family::Gnb => vec![],
            Family::Dt => vec![
                ("criterion", values(&["gini", "entropy"])),
                ("max_depth", vec![none.clone(), 5i64.into(), 10i64.into(), 20i64.into()]),
                ("min_samples_split", values(&[2i64, 5, 10])),
                ("min_samples_leaf", values(&[1i64, 2, 4])),
                ("max_features", vec![none, "sqrt".into(), "log2".into()]),
            ],
            Family::Rf => vec![
                ("n_estimators", values(&[100i64, 200, 300])),
                ("criterion", values(&["gini", "entropy"])),
                ("max_depth", vec![none, 5i64.into(), 10i64.into()]),
                ("min_samples_split", values(&[2i64, 5, 10])),
                ("min_samples_leaf", values(&[1i64, 2, 4])),
                ("max_features", values(&["sqrt", "log2"])),
                ("ccp_alpha", values(&[0.0, 0.1, 0.2])),
            ],
            Family::Svm => vec![
                ("C", vec![0.1.into(), 1i64.into(), 10i64.into()]),
                ("kernel", values(&["linear", "rbf", "sigmoid"])),
                ("gamma", values(&["scale", "auto"])),
            ],
            Family::Knn => vec![
                ("n_neighbors", values(&[3i64, 5, 7])),
                ("weights", values(&["uniform", "distance"])),
                ("algorithm", values(&["auto", "ball_tree", "kd_tree", "brute"])),
                ("p", values(&[1i64, 2])),
            ],
            Family::Gb => vec![
                ("learning_rate", values(&[0.1, 0.01, 0.001])),
                ("n_estimators", values(&[100i64, 200, 300])),
                ("max_depth", values(&[3i64, 4, 5])),
                ("subsample", values(&[0.8, 1.0])),
                ("min_samples_split", values(&[2i64, 4, 6])),
                ("min_samples_leaf", values(&[1i64, 2, 3])),
            ],
            Family::Ab => vec![
                ("n_estimators", values(&[50i64, 100, 200])),
                ("learning_rate", values(&[0.01, 0.1, 1.0])),
                ("algorithm", values(&["SAMME", "SAMME.R"])),
            ],
            Family::Gmm => vec![
                ("n_components", values(&[2i64, 3, 4, 5])),
                ("covariance_type", values(&["spherical", "tied", "diag", "full"])),
            ],
            Family::Lda => vec![
                ("solver", values(&["lsqr", "eigen"])),
                ("shrinkage", vec!["auto".into(), none.clone(), 0.5.into(), 1.0.into()]),
                ("n_components", vec![none, 1i64.into()]),
            ],
            Family::Qda => vec![("reg_param", values(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]))],
        };
        ParamGrid { family, axes: axes.into_iter().map(|(k, v)| (k.to_string(), v)).collect() }
    }

    /// Number of candidates in the cartesian product.
    pub fn size(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    /// All candidates, first axis slowest.
    pub fn candidates(&self, seed: u64) -> Vec<ClassifierSpec> {
        let mut out = Vec::with_capacity(self.size());
        let mut index = vec![0usize; self.axes.len()];
        loop {
            let mut h = Hyperparams::new();
            for ((name, vals), &i) in self.axes.iter().zip(&index) {
                h.insert(name.clone(), vals[i].clone());
            }
            out.push(ClassifierSpec { family: self.family, hyperparameters: h, seed });
            let mut axis = self.axes.len();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                index[axis] += 1;
                if index[axis] < self.axes[axis].1.len() {
                    break;
                }
                index[axis] = 0;
            }
        }
    }
}

mod non_finite_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        v.is_finite().then_some(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// One row of the search table. A failed candidate has `mean_score = -inf`
/// (`null` in JSON), the scores of the folds that ran, and the first error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub spec: ClassifierSpec,
    pub fold_scores: Vec<f64>,
    #[serde(with = "non_finite_as_null")]
    pub mean_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub family: Family,
    pub metric: Metric,
    pub n_folds: usize,
    pub fold_seed: u64,
    pub candidates: Vec<CandidateResult>,
    pub best_index: usize,
    pub best_spec: ClassifierSpec,
    #[serde(with = "non_finite_as_null")]
    pub best_mean_score: f64,
}

/// Cross-validates every candidate of `grid`. No refit.
pub fn grid_search_with(
    fitter: &dyn Fitter,
    grid: &ParamGrid,
    data: &Dataset,
    plan: &FoldPlan,
    metric: Metric,
    scaling: &ScalingConfig,
    seed: u64,
) -> Result<SearchResult, SearchError> {
    check_plan(data, plan)?;
    let specs = grid.candidates(seed);
    if specs.is_empty() {
        return Err(SearchError::EmptyGrid);
    }
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|c| (0..plan.n_folds).map(move |f| (c, f))).collect();
    let outcomes: Vec<Result<f64, String>> = jobs
        .par_iter()
        .map(|&(c, f)| run_fold(fitter, &specs[c], data, plan, f, metric, scaling).map(|o| o.score).map_err(|e| e.to_string()))
        .collect();
    let mut candidates = Vec::with_capacity(specs.len());
    for (c, spec) in specs.into_iter().enumerate() {
        let runs = &outcomes[c * plan.n_folds..(c + 1) * plan.n_folds];
        let fold_scores: Vec<f64> = runs.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let error = runs.iter().find_map(|r| r.as_ref().err().cloned());
        let mean_score = if error.is_some() {
            f64::NEG_INFINITY
        } else {
            fold_scores.iter().sum::<f64>() / fold_scores.len() as f64
        };
        if let Some(e) = &error {
            log::debug!("{} failed: {e}", spec.describe());
        }
        candidates.push(CandidateResult { spec, fold_scores, mean_score, error });
    }
    let mut best_index = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.mean_score > candidates[best_index].mean_score {
            best_index = i;
        }
    }
    Ok(SearchResult {
        family: grid.family,
        metric,
        n_folds: plan.n_folds,
        fold_seed: plan.seed,
        best_spec: candidates[best_index].spec.clone(),
        best_mean_score: candidates[best_index].mean_score,
        best_index,
        candidates,
    })
}

/// Grid search followed by a refit of the best candidate on all rows.
pub fn grid_search(
    grid: &ParamGrid,
    data: &Dataset,
    plan: &FoldPlan,
    metric: Metric,
    scaling: &ScalingConfig,
    seed: u64,
) -> Result<(SearchResult, FittedPipeline), SearchError> {
    let result = grid_search_with(&PipelineFitter, grid, data, plan, metric, scaling, seed)?;
    let model = refit(&result.best_spec, data, scaling)?;
    Ok((result, model))
}

/// Fits `spec` on every row of `data`.
pub fn refit(spec: &ClassifierSpec, data: &Dataset, scaling: &ScalingConfig) -> Result<FittedPipeline, SearchError> {
    PipelineFitter.fit(spec, data.schema().codes(), data, scaling).map_err(SearchError::Refit)
}

/// Class counts per fold, `[TD, ASD]`.
pub fn fold_class_counts(plan: &FoldPlan, y: &[u8]) -> Vec<[usize; 2]> {
    let mut counts = vec![[0usize; 2]; plan.n_folds];
    for (&f, &label) in plan.assignments.iter().zip(y) {
        counts[f][usize::from(label)] += 1;
    }
    counts
}
