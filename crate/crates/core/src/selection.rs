//! Feature selection: chi-squared ranking, recursive feature elimination
//! over logistic regression, PCA-loading ranking, and the vote that keeps
//! features chosen by every selector.
//!
//! Chi-squared uses the contingency-table statistic `Σ (O − E)² / E` on
//! category codes, so it runs on the raw encodings (numeric columns are
//! binned into quartiles first). RFE and PCA run on scaled data. Ties are
//! broken by ascending column index everywhere.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::classifiers::logistic::{self, LogisticParams};
use crate::classifiers::ModelError;
use crate::data::{FeatureKind, Schema};
use crate::linalg;

/// The 20 questionnaire items retained by the vote at K = 25 on the
/// reference cohort. Shipped as the default production mask.
pub const DEFAULT_FEATURE_MASK: [&str; 20] = [
    "New1a3", "New1a4", "New1a5", "New1a7", "New1b1", "New1b2", "New1b3", "New1c1", "New2a1", "New2a3", "New2a4",
    "New2a5", "New2a6", "New2a7", "New2b", "New2c", "New2d1", "New2d2", "New2d3", "New2d4",
];

/// Default K sweep.
pub const DEFAULT_KS: [usize; 5] = [10, 15, 20, 25, 30];

/// Eigenvalues below this are treated as null components.
const NULL_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("K = {k} is outside 1..={n_features}")]
    KOutOfRange { k: usize, n_features: usize },
    #[error("chi-squared needs non-negative integer categories; row {row}, column {column} holds {value}")]
    InvalidCell { row: usize, column: usize, value: f64 },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("{0} feature codes given for {1} columns")]
    CodeCount(usize, usize),
    #[error("vote threshold {threshold} must lie in 1..={sets}")]
    Threshold { threshold: usize, sets: usize },
    #[error("recursive feature elimination failed: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Chs,
    Rfe,
    Pca,
}

impl std::fmt::Display for Selector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Selector::Chs => "CHS",
            Selector::Rfe => "RFE",
            Selector::Pca => "PCA",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFeature {
    pub feature: String,
    pub index: usize,
    pub score: f64,
}

/// The K features picked by one selector, best first. Scores are the
/// chi-squared statistic, the RFE rank (1 = kept) or the max |loading|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeatures {
    pub selector: Selector,
    pub k: usize,
    pub features: Vec<ScoredFeature>,
}

impl RankedFeatures {
    fn from_order(selector: Selector, order: &[usize], scores: &[f64], codes: &[String]) -> Self {
        RankedFeatures {
            selector,
            k: order.len(),
            features: order
                .iter()
                .map(|&j| ScoredFeature { feature: codes[j].clone(), index: j, score: scores[j] })
                .collect(),
        }
    }

    pub fn codes(&self) -> Vec<String> {
        self.features.iter().map(|f| f.feature.clone()).collect()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.index).collect()
    }

    pub fn index_set(&self) -> BTreeSet<usize> {
        self.features.iter().map(|f| f.index).collect()
    }
}

fn check_k(k: usize, n_features: usize) -> Result<(), SelectionError> {
    if k == 0 || k > n_features {
        Err(SelectionError::KOutOfRange { k, n_features })
    } else {
        Ok(())
    }
}

fn check_codes(codes: &[String], n: usize) -> Result<(), SelectionError> {
    if codes.len() != n {
        Err(SelectionError::CodeCount(codes.len(), n))
    } else {
        Ok(())
    }
}

/// Column indices sorted by descending score, ties by ascending index.
fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Contingency-table chi-squared score of every column against `y`.
pub fn chi2_scores(x: ArrayView2<f64>, y: &[u8]) -> Result<Vec<f64>, SelectionError> {
    if x.nrows() != y.len() {
        return Err(SelectionError::LengthMismatch { rows: x.nrows(), labels: y.len() });
    }
    let n = y.len() as f64;
    let class_totals = [y.iter().filter(|&&v| v == 0).count() as f64, y.iter().filter(|&&v| v == 1).count() as f64];
    let mut scores = Vec::with_capacity(x.ncols());
    for (column, col) in x.axis_iter(Axis(1)).enumerate() {
        let mut table: BTreeMap<u64, [f64; 2]> = BTreeMap::new();
        for (row, (&v, &label)) in col.iter().zip(y).enumerate() {
            if !(v >= 0.0) || v.fract() != 0.0 || !v.is_finite() {
                return Err(SelectionError::InvalidCell { row, column, value: v });
            }
            table.entry(v as u64).or_default()[usize::from(label.min(1))] += 1.0;
        }
        let mut chi2 = 0.0;
        for counts in table.values() {
            let row_total = counts[0] + counts[1];
            for j in 0..2 {
                let expected = row_total * class_totals[j] / n;
                if expected > 0.0 {
                    chi2 += (counts[j] - expected).powi(2) / expected;
                }
            }
        }
        scores.push(chi2);
    }
    Ok(scores)
}

/// Quartile bin (0..=3) of each numeric column; other columns unchanged.
/// Cut points are the 25th, 50th and 75th percentiles (linear
/// interpolation) of the column; a value goes to the number of cut points
/// it exceeds.
pub fn discretize_for_chi2(x: ArrayView2<f64>, kinds: &[FeatureKind]) -> Array2<f64> {
    let mut out = x.to_owned();
    for (j, kind) in kinds.iter().enumerate() {
        if *kind != FeatureKind::Numeric {
            continue;
        }
        let mut sorted: Vec<f64> = x.column(j).to_vec();
        sorted.sort_by(f64::total_cmp);
        let cuts: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&q| quantile(&sorted, q)).collect();
        for v in out.column_mut(j) {
            *v = cuts.iter().filter(|&&c| *v > c).count() as f64;
        }
    }
    out
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Top-K columns by chi-squared score.
pub fn select_k_best_chi2(x: ArrayView2<f64>, y: &[u8], k: usize, codes: &[String]) -> Result<RankedFeatures, SelectionError> {
    check_k(k, x.ncols())?;
    check_codes(codes, x.ncols())?;
    let scores = chi2_scores(x, y)?;
    let order = rank_desc(&scores);
    Ok(RankedFeatures::from_order(Selector::Chs, &order[..k], &scores, codes))
}

/// Logistic-regression settings used inside RFE.
pub fn rfe_estimator() -> LogisticParams {
    LogisticParams::default()
}

/// Recursive feature elimination: refit, drop the column with the
/// smallest |coefficient| (the higher index on ties), repeat until K remain.
pub fn rfe_logreg(
    x: ArrayView2<f64>,
    y: &[u8],
    k: usize,
    codes: &[String],
    estimator: &LogisticParams,
) -> Result<RankedFeatures, SelectionError> {
    check_k(k, x.ncols())?;
    check_codes(codes, x.ncols())?;
    if x.nrows() != y.len() {
        return Err(SelectionError::LengthMismatch { rows: x.nrows(), labels: y.len() });
    }
    let mut active: Vec<usize> = (0..x.ncols()).collect();
    while active.len() > k {
        let sub = x.select(Axis(1), &active);
        let coef = logistic::fit_coefficients(sub.view(), y, estimator)?;
        let mut drop = 0;
        for pos in 1..active.len() {
            if coef[pos].abs() <= coef[drop].abs() {
                drop = pos;
            }
        }
        active.remove(drop);
    }
    let ranks = vec![1.0; x.ncols()];
    Ok(RankedFeatures::from_order(Selector::Rfe, &active, &ranks, codes))
}

/// Features ranked by their largest |loading| over the top-K principal
/// components of the covariance of `x`.
pub fn pca_loading_select(x: ArrayView2<f64>, k: usize, codes: &[String]) -> Result<RankedFeatures, SelectionError> {
    check_k(k, x.ncols())?;
    check_codes(codes, x.ncols())?;
    let cov = linalg::covariance(&linalg::to_dmatrix(x), 1);
    let (values, vectors) = linalg::sym_eigen_desc(&cov, 1e-10);
    let d = x.ncols();
    let mut scores = vec![0.0f64; d];
    for c in 0..k {
        if values[c] < NULL_EIGENVALUE {
            break;
        }
        for (j, s) in scores.iter_mut().enumerate() {
            *s = s.max(vectors[(j, c)].abs());
        }
    }
    let order = rank_desc(&scores);
    Ok(RankedFeatures::from_order(Selector::Pca, &order[..k], &scores, codes))
}

/// Outcome of a vote: the retained items and whether the result is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vote<T: Ord> {
    pub selected: BTreeSet<T>,
    pub empty_warning: bool,
}

/// Keeps items chosen by at least `threshold` of the input sets.
/// `threshold = sets.len()` is the intersection.
pub fn majority_vote<T: Ord + Clone>(sets: &[BTreeSet<T>], threshold: usize) -> Result<Vote<T>, SelectionError> {
    if sets.is_empty() || threshold == 0 || threshold > sets.len() {
        return Err(SelectionError::Threshold { threshold, sets: sets.len() });
    }
    let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
    for set in sets {
        for item in set {
            *counts.entry(item).or_default() += 1;
        }
    }
    let selected: BTreeSet<T> = counts.into_iter().filter(|(_, c)| *c >= threshold).map(|(t, _)| t.clone()).collect();
    let empty_warning = selected.is_empty();
    Ok(Vote { selected, empty_warning })
}

/// Intersection of all input sets.
pub fn unanimous_vote<T: Ord + Clone>(sets: &[BTreeSet<T>]) -> Result<Vote<T>, SelectionError> {
    majority_vote(sets, sets.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub ks: Vec<usize>,
    /// Number of selectors that must agree; `None` means all three.
    pub vote_threshold: Option<usize>,
    pub rfe_estimator: LogisticParams,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { ks: DEFAULT_KS.to_vec(), vote_threshold: None, rfe_estimator: rfe_estimator() }
    }
}

/// Result for one K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub chs: Vec<ScoredFeature>,
    pub rfe: Vec<ScoredFeature>,
    pub pca: Vec<ScoredFeature>,
    /// Voted features in column order.
    pub voted: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty_vote: bool,
}

/// Per-K selector rankings and voted sets, serialized as
/// `{"10": {"chs": [...], "rfe": [...], "pca": [...], "voted": [...]}, ...}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelectionReport {
    pub per_k: BTreeMap<usize, KSelection>,
}

impl SelectionReport {
    pub fn voted(&self, k: usize) -> Option<&[String]> {
        self.per_k.get(&k).map(|s| s.voted.as_slice())
    }

    pub fn voted_sizes(&self) -> Vec<(usize, usize)> {
        self.per_k.iter().map(|(k, s)| (*k, s.voted.len())).collect()
    }
}

/// Runs the three selectors and the vote for every K.
///
/// `raw` holds unscaled encodings (for chi-squared); `scaled` the same rows
/// after preprocessing (for RFE and PCA).
pub fn sweep_k(
    raw: ArrayView2<f64>,
    scaled: ArrayView2<f64>,
    y: &[u8],
    schema: &Schema,
    config: &SelectionConfig,
) -> Result<SelectionReport, SelectionError> {
    let codes = schema.codes();
    let discrete = discretize_for_chi2(raw, &schema.kinds());
    let threshold = config.vote_threshold.unwrap_or(3);
    let mut report = SelectionReport::default();
    for &k in &config.ks {
        check_k(k, schema.len())?;
        let (chs, (rfe, pca)) = rayon::join(
            || select_k_best_chi2(discrete.view(), y, k, &codes),
            || {
                rayon::join(
                    || rfe_logreg(scaled, y, k, &codes, &config.rfe_estimator),
                    || pca_loading_select(scaled, k, &codes),
                )
            },
        );
        let (chs, rfe, pca) = (chs?, rfe?, pca?);
        let vote = majority_vote(&[chs.index_set(), rfe.index_set(), pca.index_set()], threshold)?;
        if vote.empty_warning {
            log::warn!("K = {k}: the selectors share no feature");
        }
        report.per_k.insert(
            k,
            KSelection {
                chs: chs.features,
                rfe: rfe.features,
                pca: pca.features,
                voted: vote.selected.iter().map(|&j| codes[j].clone()).collect(),
                empty_vote: vote.empty_warning,
            },
        );
    }
    Ok(report)
}
