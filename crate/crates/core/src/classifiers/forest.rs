//! Random forest: bootstrap-aggregated CART trees with per-split feature
//! subsampling. Each tree casts one vote; `P(ASD)` is the fraction of
//! trees voting ASD.

use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{self, DecisionTree, MaxFeatures, TreeParams};
use super::{label_from_proba, Family, Hyperparams, ModelError, ParamReader};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    /// Not part of the tuning vocabulary; callers that need the
    /// degenerate no-resampling ensemble set it directly.
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn parse(p: &Hyperparams) -> Result<Self, ModelError> {
        let r = ParamReader::new(Family::Rf, p);
        let n_estimators = r.usize("n_estimators", 100)?;
        if n_estimators == 0 {
            return Err(r.reject("n_estimators", "must be at least 1"));
        }
        Ok(ForestParams { n_estimators, tree: TreeParams::parse_with(&r, MaxFeatures::Sqrt)?, bootstrap: true })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &ForestParams, seed: u64) -> RandomForest {
    let n = y.len();
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let forest_seed = rng::derive(seed, rng::stream::FOREST);
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let tree_seed = rng::derive(forest_seed, t as u64);
            let mut r = rng::rng_from(tree_seed);
            let mut weights = vec![0.0; n];
            if params.bootstrap {
                for _ in 0..n {
                    weights[r.random_range(0..n)] += 1.0;
                }
            } else {
                weights.iter_mut().for_each(|w| *w = 1.0);
            }
            let rows: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
            tree::grow(x, &targets, &weights, rows, params.tree.criterion, &params.tree, Some(&mut r))
        })
        .collect();
    RandomForest { trees }
}

impl RandomForest {
    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let k = self.trees.len() as f64;
        (0..x.nrows())
            .map(|i| {
                let votes = self.trees.iter().filter(|t| label_from_proba(t.predict_row(x, i)) == 1).count();
                votes as f64 / k
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperparams;
    use ndarray::Array2;
    use rand::SeedableRng;

    fn blobs(seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<u8> = (0..80).map(|i| u8::from(i % 2 == 0)).collect();
        let x = Array2::from_shape_fn((80, 3), |(i, _)| r.random::<f64>() + if y[i] == 1 { 2.0 } else { 0.0 });
        (x, y)
    }

    #[test]
    fn single_tree_without_resampling_matches_decision_tree() {
        let (x, y) = blobs(1);
        let mut p = ForestParams::parse(&hyperparams! {"n_estimators" => 1i64, "max_features" => crate::classifiers::ParamValue::Null}).unwrap();
        p.bootstrap = false;
        let forest = fit(x.view(), &y, &p, 4);
        let single = tree::fit_classifier(x.view(), &y, &p.tree, 4);
        let votes: Vec<u8> = forest.positive_proba(x.view()).into_iter().map(label_from_proba).collect();
        let direct: Vec<u8> = single.positive_proba(x.view()).into_iter().map(label_from_proba).collect();
        assert_eq!(votes, direct);
    }

    #[test]
    fn separable_blobs_are_fitted_and_probabilities_are_vote_fractions() {
        let (x, y) = blobs(2);
        let p = ForestParams::parse(&hyperparams! {"n_estimators" => 200i64}).unwrap();
        let forest = fit(x.view(), &y, &p, 11);
        let probs = forest.positive_proba(x.view());
        for (p, t) in probs.iter().zip(&y) {
            assert_eq!(label_from_proba(*p), *t);
            assert!(((p * 200.0).round() - p * 200.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = blobs(3);
        let p = ForestParams::parse(&hyperparams! {"n_estimators" => 25i64}).unwrap();
        assert_eq!(fit(x.view(), &y, &p, 9), fit(x.view(), &y, &p, 9));
        assert_ne!(fit(x.view(), &y, &p, 9), fit(x.view(), &y, &p, 10));
    }
}
