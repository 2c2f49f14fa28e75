//! AdaBoost over depth-1 gini stumps.
//!
//! Labels are mapped to `yᵢ ∈ {−1, +1}`. In the discrete variant (`SAMME`)
//! round `t` fits a stump to the current weights, measures its weighted
//! error `e_t`, sets `α_t = ν · ½ ln((1 − e_t) / e_t)` and multiplies each
//! weight by `exp(−α_t yᵢ h_t(xᵢ))` before renormalizing. The real variant
//! (`SAMME.R`) uses the stump's leaf probabilities `p` and the stage output
//! `h_t = ½ ln(p / (1 − p))` with weights scaled by `exp(−ν yᵢ h_t(xᵢ))`.
//!
//! Boosting stops early when a stump is perfect (its `α` is capped at
//! `ln(1e10)`) or when `e_t ≥ 0.5` (that round gets `α = 0` and is not
//! kept). `P(ASD) = σ(2F)` with `F` the sum of stage outputs.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::tree::{self, DecisionTree, Impurity, MaxFeatures, TreeParams};
use super::{sigmoid, Family, Hyperparams, ModelError, ParamReader};

/// Cap on a single stage weight.
pub const ALPHA_CAP: f64 = 23.025850929940457; // ln(1e10)
const PROBA_EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Samme,
    SammeR,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub variant: Variant,
}

impl AdaBoostParams {
    pub fn parse(p: &Hyperparams) -> Result<Self, ModelError> {
        let r = ParamReader::new(Family::Ab, p);
        let n_estimators = r.usize("n_estimators", 50)?;
        if n_estimators == 0 {
            return Err(r.reject("n_estimators", "must be at least 1"));
        }
        let variant = match r.choice("algorithm", "SAMME", &["SAMME", "SAMME.R"])? {
            "SAMME" => Variant::Samme,
            _ => Variant::SammeR,
        };
        Ok(AdaBoostParams { n_estimators, learning_rate: r.positive_f64("learning_rate", 1.0)?, variant })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub stump: DecisionTree,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub variant: Variant,
    pub learning_rate: f64,
    pub stages: Vec<Stage>,
}

/// One boosting round as seen by the trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub weights_before: Vec<f64>,
    pub feature: Option<usize>,
    pub threshold: f64,
    pub error: f64,
    pub alpha: f64,
    pub weights_after: Vec<f64>,
    pub kept: bool,
}

fn stump_params() -> TreeParams {
    TreeParams {
        criterion: Impurity::Gini,
        max_depth: Some(1),
        min_samples_split: 2,
        min_samples_leaf: 1,
        max_features: MaxFeatures::All,
        ccp_alpha: 0.0,
    }
}

fn sign_of(p1: f64) -> f64 {
    if super::label_from_proba(p1) == 1 {
        1.0
    } else {
        -1.0
    }
}

fn real_output(p1: f64) -> f64 {
    let p = p1.clamp(PROBA_EPS, 1.0 - PROBA_EPS);
    0.5 * (p / (1.0 - p)).ln()
}

/// Fits and records every round, including a halting one.
pub fn fit_traced(x: ArrayView2<f64>, y: &[u8], params: &AdaBoostParams) -> (AdaBoost, Vec<Round>) {
    let n = y.len();
    let signs: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut stages = Vec::new();
    let mut rounds = Vec::new();
    let sp = stump_params();
    for _ in 0..params.n_estimators {
        let stump = tree::grow(x, &targets, &w, (0..n).collect(), Impurity::Gini, &sp, None);
        let leaf_p: Vec<f64> = (0..n).map(|i| stump.predict_row(x, i)).collect();
        let total: f64 = w.iter().sum();
        let error = (0..n).filter(|&i| sign_of(leaf_p[i]) != signs[i]).map(|i| w[i]).sum::<f64>() / total;
        let root = &stump.nodes[0];
        let (feature, threshold) = match root.children {
            Some(_) => (Some(root.feature), root.threshold),
            None => (None, 0.0),
        };
        let before = w.clone();
        if error >= 0.5 {
            rounds.push(Round { weights_before: before.clone(), feature, threshold, error, alpha: 0.0, weights_after: before, kept: false });
            break;
        }
        let perfect = error <= 0.0;
        let alpha = match params.variant {
            Variant::Samme => {
                let raw = if perfect { ALPHA_CAP } else { (0.5 * ((1.0 - error) / error).ln()).min(ALPHA_CAP) };
                params.learning_rate * raw
            }
            Variant::SammeR => params.learning_rate,
        };
        if !perfect {
            for i in 0..n {
                let h = match params.variant {
                    Variant::Samme => sign_of(leaf_p[i]),
                    Variant::SammeR => real_output(leaf_p[i]),
                };
                w[i] *= (-alpha * signs[i] * h).exp();
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        rounds.push(Round { weights_before: before, feature, threshold, error, alpha, weights_after: w.clone(), kept: true });
        stages.push(Stage { stump, alpha });
        if perfect {
            break;
        }
    }
    (AdaBoost { variant: params.variant, learning_rate: params.learning_rate, stages }, rounds)
}

pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &AdaBoostParams) -> AdaBoost {
    fit_traced(x, y, params).0
}

impl AdaBoost {
    pub fn decision(&self, x: ArrayView2<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                self.stages
                    .iter()
                    .map(|s| {
                        let p = s.stump.predict_row(x, i);
                        match self.variant {
                            Variant::Samme => s.alpha * sign_of(p),
                            Variant::SammeR => s.alpha * real_output(p),
                        }
                    })
                    .sum()
            })
            .collect()
    }

    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.decision(x).into_iter().map(|f| sigmoid(2.0 * f)).collect()
    }
}
