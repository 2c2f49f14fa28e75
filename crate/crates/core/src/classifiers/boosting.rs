//! Gradient boosting on the logistic loss.
//!
//! `F₀` is the prior log-odds. Stage `m` fits a squared-error regression
//! tree to the residuals `y − σ(F_{m−1})` on a row subsample, replaces each
//! leaf value by the Newton step `Σ r / Σ p(1 − p)` over the in-bag rows
//! in that leaf, and adds it scaled by the learning rate:
//! `F_m = F_{m−1} + ν h_m`.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tree::{self, DecisionTree, Impurity, MaxFeatures, TreeParams};
use super::{sigmoid, Family, Hyperparams, ModelError, ParamReader};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GbParams {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub subsample: f64,
    pub tree: TreeParams,
}

impl GbParams {
    pub fn parse(p: &Hyperparams) -> Result<Self, ModelError> {
        let r = ParamReader::new(Family::Gb, p);
        let learning_rate = r.f64("learning_rate", 0.1)?;
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            return Err(r.reject("learning_rate", "must be a finite non-negative number"));
        }
        let subsample = r.f64("subsample", 1.0)?;
        if !(subsample > 0.0 && subsample <= 1.0) {
            return Err(r.reject("subsample", "must lie in (0, 1]"));
        }
        let n_estimators = r.usize("n_estimators", 100)?;
        if n_estimators == 0 {
            return Err(r.reject("n_estimators", "must be at least 1"));
        }
        let min_samples_split = r.usize("min_samples_split", 2)?;
        let min_samples_leaf = r.usize("min_samples_leaf", 1)?;
        if min_samples_split < 2 || min_samples_leaf < 1 {
            return Err(r.reject("min_samples_split", "needs min_samples_split >= 2 and min_samples_leaf >= 1"));
        }
        let tree = TreeParams {
            criterion: Impurity::SquaredError,
            max_depth: Some(r.usize("max_depth", 3)?),
            min_samples_split,
            min_samples_leaf,
            max_features: MaxFeatures::All,
            ccp_alpha: 0.0,
        };
        Ok(GbParams { learning_rate, n_estimators, subsample, tree })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub stages: Vec<DecisionTree>,
}

pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &GbParams, seed: u64) -> GradientBoosting {
    let n = y.len();
    let target: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let prior = (target.iter().sum::<f64>() / n as f64).clamp(1e-15, 1.0 - 1e-15);
    let init = (prior / (1.0 - prior)).ln();
    let mut f = vec![init; n];
    let n_bag = ((params.subsample * n as f64).floor() as usize).max(1);
    let stream = rng::derive(seed, rng::stream::BOOSTING);
    let mut stages = Vec::with_capacity(params.n_estimators);
    for m in 0..params.n_estimators {
        let p: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let residual: Vec<f64> = target.iter().zip(&p).map(|(t, q)| t - q).collect();
        let mut rows: Vec<usize> = (0..n).collect();
        if n_bag < n {
            let mut r = rng::rng_from(rng::derive(stream, m as u64));
            rows.shuffle(&mut r);
            rows.truncate(n_bag);
            rows.sort_unstable();
        }
        let mut stage = tree::fit_regressor(x, &residual, rows.clone(), &params.tree);
        let mut num = vec![0.0; stage.nodes.len()];
        let mut den = vec![0.0; stage.nodes.len()];
        for &i in &rows {
            let leaf = stage.apply(|j| x[[i, j]]);
            num[leaf] += residual[i];
            den[leaf] += p[i] * (1.0 - p[i]);
        }
        for leaf in 0..stage.nodes.len() {
            if stage.nodes[leaf].children.is_none() {
                let v = if den[leaf].abs() < 1e-150 { 0.0 } else { num[leaf] / den[leaf] };
                stage.set_leaf_value(leaf, v);
            }
        }
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += params.learning_rate * stage.predict_row(x, i);
        }
        stages.push(stage);
    }
    GradientBoosting { init, learning_rate: params.learning_rate, stages }
}

impl GradientBoosting {
    /// Raw scores `F_m(x)` after the first `m` stages.
    pub fn decision_at(&self, x: ArrayView2<f64>, m: usize) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| self.init + self.stages[..m.min(self.stages.len())].iter().map(|t| self.learning_rate * t.predict_row(x, i)).sum::<f64>())
            .collect()
    }

    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.decision_at(x, self.stages.len()).into_iter().map(sigmoid).collect()
    }
}
