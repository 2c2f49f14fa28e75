//! CART trees.
//!
//! One builder serves classification (gini or entropy on weighted class
//! counts, leaf value = weighted fraction of class 1) and regression
//! (weighted squared error, leaf value = weighted mean). Splits are
//! axis-aligned thresholds at midpoints between consecutive distinct
//! values. Features are scanned in ascending index order unless
//! `max_features` asks for a random subset; ties keep the first candidate.
//!
//! Minimal cost-complexity pruning is applied after growth when
//! `ccp_alpha > 0`.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Family, Hyperparams, ModelError, ParamReader, ParamValue};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Impurity {
    Gini,
    Entropy,
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (n_features as f64).log2().floor() as usize,
            MaxFeatures::Count(k) => k,
            MaxFeatures::Fraction(f) => (f * n_features as f64).floor() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub criterion: Impurity,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub ccp_alpha: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: Impurity::Gini,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            ccp_alpha: 0.0,
        }
    }
}

impl TreeParams {
    /// Reads the tree hyperparameters shared by DT, RF and GB.
    pub(crate) fn parse_with(r: &ParamReader, default_max_features: MaxFeatures) -> Result<Self, ModelError> {
        let criterion = match r.choice("criterion", "gini", &["gini", "entropy", "log_loss"])? {
            "gini" => Impurity::Gini,
            _ => Impurity::Entropy,
        };
        let min_samples_split = r.usize("min_samples_split", 2)?;
        if min_samples_split < 2 {
            return Err(r.reject("min_samples_split", "must be at least 2"));
        }
        let min_samples_leaf = r.usize("min_samples_leaf", 1)?;
        if min_samples_leaf < 1 {
            return Err(r.reject("min_samples_leaf", "must be at least 1"));
        }
        let max_features = match r.raw("max_features") {
            None => default_max_features,
            Some(ParamValue::Null) => MaxFeatures::All,
            Some(ParamValue::Int(k)) if *k >= 1 => MaxFeatures::Count(*k as usize),
            Some(ParamValue::Float(f)) if *f > 0.0 && *f <= 1.0 => MaxFeatures::Fraction(*f),
            Some(ParamValue::Str(_)) => match r.choice("max_features", "sqrt", &["sqrt", "log2"])? {
                "sqrt" => MaxFeatures::Sqrt,
                _ => MaxFeatures::Log2,
            },
            Some(other) => return Err(r.reject("max_features", format!("unsupported value {other}"))),
        };
        let ccp_alpha = r.f64("ccp_alpha", 0.0)?;
        if !(ccp_alpha >= 0.0) {
            return Err(r.reject("ccp_alpha", "must be non-negative"));
        }
        Ok(TreeParams { criterion, max_depth: r.opt_usize("max_depth")?, min_samples_split, min_samples_leaf, max_features, ccp_alpha })
    }

    pub fn parse(family: Family, p: &Hyperparams) -> Result<Self, ModelError> {
        Self::parse_with(&ParamReader::new(family, p), MaxFeatures::All)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: usize,
    pub threshold: f64,
    pub children: Option<(usize, usize)>,
    pub value: f64,
    pub n_samples: usize,
    pub weight: f64,
    pub impurity: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    w: f64,
    wt: f64,
    wtt: f64,
}

impl Acc {
    fn add(&mut self, w: f64, t: f64) {
        self.w += w;
        self.wt += w * t;
        self.wtt += w * t * t;
    }

    fn minus(self, other: Acc) -> Acc {
        Acc { w: self.w - other.w, wt: self.wt - other.wt, wtt: self.wtt - other.wtt }
    }

    fn value(&self) -> f64 {
        if self.w > 0.0 {
            self.wt / self.w
        } else {
            0.0
        }
    }

    fn impurity(&self, kind: Impurity) -> f64 {
        if self.w <= 0.0 {
            return 0.0;
        }
        match kind {
            Impurity::Gini => {
                let p = (self.wt / self.w).clamp(0.0, 1.0);
                2.0 * p * (1.0 - p)
            }
            Impurity::Entropy => {
                let p = (self.wt / self.w).clamp(0.0, 1.0);
                let h = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
                h(p) + h(1.0 - p)
            }
            Impurity::SquaredError => {
                let m = self.wt / self.w;
                (self.wtt / self.w - m * m).max(0.0)
            }
        }
    }
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    targets: &'a [f64],
    weights: &'a [f64],
    kind: Impurity,
    params: &'a TreeParams,
    n_try: usize,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Builder<'_> {
    fn accumulate(&self, rows: &[usize]) -> Acc {
        let mut acc = Acc::default();
        for &i in rows {
            acc.add(self.weights[i], self.targets[i]);
        }
        acc
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let acc = self.accumulate(&rows);
        let impurity = acc.impurity(self.kind);
        let idx = self.nodes.len();
        self.nodes.push(Node {
            feature: 0,
            threshold: 0.0,
            children: None,
            value: acc.value(),
            n_samples: rows.len(),
            weight: acc.w,
            impurity,
            depth,
        });
        let p = self.params;
        let can_split = p.max_depth.is_none_or(|m| depth < m)
            && rows.len() >= p.min_samples_split
            && rows.len() >= 2 * p.min_samples_leaf
            && impurity > 1e-15;
        if !can_split {
            return idx;
        }
        if let Some(split) = self.best_split(&rows, acc) {
            let (left, right): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| self.x[[i, split.feature]] <= split.threshold);
            let l = self.build(left, depth + 1);
            let r = self.build(right, depth + 1);
            let node = &mut self.nodes[idx];
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.children = Some((l, r));
        }
        idx
    }

    fn feature_order(&mut self) -> Vec<usize> {
        let d = self.x.ncols();
        let mut order: Vec<usize> = (0..d).collect();
        if self.n_try < d {
            if let Some(rng) = self.rng.as_deref_mut() {
                order.shuffle(rng);
            }
        }
        order
    }

    fn best_split(&mut self, rows: &[usize], total: Acc) -> Option<Split> {
        let parent = total.w * total.impurity(self.kind);
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<Split> = None;
        let mut visited = 0;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for f in self.feature_order() {
            if visited >= self.n_try && best.is_some() {
                break;
            }
            sorted.clear();
            sorted.extend(rows.iter().map(|&i| (self.x[[i, f]], i)));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if sorted[0].0 == sorted[sorted.len() - 1].0 {
                continue;
            }
            visited += 1;
            let mut left = Acc::default();
            for pos in 0..sorted.len() - 1 {
                let (v, i) = sorted[pos];
                left.add(self.weights[i], self.targets[i]);
                let next = sorted[pos + 1].0;
                let n_left = pos + 1;
                if v == next || n_left < min_leaf || sorted.len() - n_left < min_leaf {
                    continue;
                }
                let right = total.minus(left);
                let decrease = parent - left.w * left.impurity(self.kind) - right.w * right.impurity(self.kind);
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    let mut threshold = 0.5 * (v + next);
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Split { feature: f, threshold, decrease });
                }
            }
        }
        best
    }
}

/// Grows a tree over `rows` with per-row `weights` and `targets`.
pub fn grow(
    x: ArrayView2<f64>,
    targets: &[f64],
    weights: &[f64],
    rows: Vec<usize>,
    kind: Impurity,
    params: &TreeParams,
    rng: Option<&mut ChaCha8Rng>,
) -> DecisionTree {
    let n_try = params.max_features.resolve(x.ncols());
    let mut builder = Builder { x, targets, weights, kind, params, n_try, rng, nodes: Vec::new() };
    builder.build(rows, 0);
    let mut tree = DecisionTree { nodes: builder.nodes };
    if params.ccp_alpha > 0.0 {
        tree.prune(params.ccp_alpha);
    }
    tree
}

/// Unweighted classification tree on all rows.
pub fn fit_classifier(x: ArrayView2<f64>, y: &[u8], params: &TreeParams, seed: u64) -> DecisionTree {
    let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let weights = vec![1.0; y.len()];
    let mut r = rng::child_rng(seed, rng::stream::TREE);
    grow(x, &targets, &weights, (0..y.len()).collect(), params.criterion, params, Some(&mut r))
}

/// Squared-error regression tree on `rows`.
pub fn fit_regressor(x: ArrayView2<f64>, targets: &[f64], rows: Vec<usize>, params: &TreeParams) -> DecisionTree {
    let weights = vec![1.0; targets.len()];
    grow(x, targets, &weights, rows, Impurity::SquaredError, params, None)
}

impl DecisionTree {
    pub fn apply(&self, row: impl Fn(usize) -> f64) -> usize {
        let mut idx = 0;
        while let Some((l, r)) = self.nodes[idx].children {
            idx = if row(self.nodes[idx].feature) <= self.nodes[idx].threshold { l } else { r };
        }
        idx
    }

    pub fn predict_row(&self, x: ArrayView2<f64>, i: usize) -> f64 {
        self.nodes[self.apply(|f| x[[i, f]])].value
    }

    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        (0..x.nrows()).map(|i| self.predict_row(x, i)).collect()
    }

    fn reachable(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            out.push(i);
            if let Some((l, r)) = self.nodes[i].children {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<&Node> {
        self.reachable().into_iter().map(|i| &self.nodes[i]).filter(|n| n.children.is_none()).collect()
    }

    pub fn depth(&self) -> usize {
        self.leaves().iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        self.nodes[leaf].value = value;
    }

    /// Minimal cost-complexity pruning: repeatedly collapses the weakest
    /// link while its effective alpha is at most `alpha`.
    fn prune(&mut self, alpha: f64) {
        let total = self.nodes[0].weight.max(f64::MIN_POSITIVE);
        let risk: Vec<f64> = self.nodes.iter().map(|n| n.impurity * n.weight / total).collect();
        loop {
            let n = self.nodes.len();
            let mut leaves = vec![0usize; n];
            let mut subtree = vec![0.0; n];
            for i in (0..n).rev() {
                match self.nodes[i].children {
                    None => {
                        leaves[i] = 1;
                        subtree[i] = risk[i];
                    }
                    Some((l, r)) => {
                        leaves[i] = leaves[l] + leaves[r];
                        subtree[i] = subtree[l] + subtree[r];
                    }
                }
            }
            let weakest = self
                .reachable()
                .into_iter()
                .filter(|&i| self.nodes[i].children.is_some())
                .map(|i| (i, (risk[i] - subtree[i]) / (leaves[i] - 1) as f64))
                .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
                    Some((_, bg)) if bg <= g => best,
                    _ => Some((i, g)),
                });
            match weakest {
                Some((i, g)) if g <= alpha => self.nodes[i].children = None,
                _ => break,
            }
        }
        self.compact();
    }

    /// Drops unreachable nodes, renumbering in pre-order.
    fn compact(&mut self) {
        let order = self.reachable();
        let mut new_index = vec![usize::MAX; self.nodes.len()];
        for (k, &i) in order.iter().enumerate() {
            new_index[i] = k;
        }
        let nodes = order
            .iter()
            .map(|&i| {
                let mut node = self.nodes[i].clone();
                node.children = node.children.map(|(l, r)| (new_index[l], new_index[r]));
                node
            })
            .collect();
        self.nodes = nodes;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperparams;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};

    fn params(p: Hyperparams) -> TreeParams {
        TreeParams::parse(Family::Dt, &p).unwrap()
    }

    #[test]
    fn threshold_matches_exhaustive_scan() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let x = Array2::from_shape_fn((n, 1), |_| r.random::<f64>());
        let y: Vec<u8> = x.column(0).iter().map(|&v| u8::from(v > 0.5)).collect();
        let t = fit_classifier(x.view(), &y, &TreeParams::default(), 0);
        assert_eq!(t.leaves().len(), 2);
        // Oracle: the largest value below 0.5 and the smallest above.
        let below = x.column(0).iter().cloned().filter(|&v| v <= 0.5).fold(f64::MIN, f64::max);
        let above = x.column(0).iter().cloned().filter(|&v| v > 0.5).fold(f64::MAX, f64::min);
        assert!((t.nodes[0].threshold - 0.5 * (below + above)).abs() < 1e-12);
        let pred: Vec<u8> = t.positive_proba(x.view()).into_iter().map(super::super::label_from_proba).collect();
        assert_eq!(pred, y);
    }

    #[test]
    fn root_only_tree_predicts_the_majority() {
        let x = array![[0.0], [1.0], [2.0]];
        let t = fit_classifier(x.view(), &[1, 1, 0], &params(hyperparams! {"max_depth" => 0i64}), 0);
        assert_eq!(t.nodes.len(), 1);
        assert!((t.nodes[0].value - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pure_node_is_not_split() {
        let x = array![[0.0], [1.0], [2.0]];
        let t = fit_classifier(x.view(), &[1, 1, 1], &TreeParams::default(), 0);
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn leaf_size_and_depth_limits_hold() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((200, 3), |_| r.random::<f64>());
        let y: Vec<u8> = (0..200).map(|_| u8::from(r.random::<bool>())).collect();
        for (depth, leaf) in [(3usize, 1usize), (6, 5), (20, 10)] {
            let p = params(hyperparams! {"max_depth" => depth as i64, "min_samples_leaf" => leaf as i64});
            let t = fit_classifier(x.view(), &y, &p, 0);
            assert!(t.depth() <= depth);
            assert!(t.leaves().iter().all(|n| n.n_samples >= leaf));
        }
    }

    #[test]
    fn entropy_criterion_splits_xor() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = [0, 0, 1, 1];
        let t = fit_classifier(x.view(), &y, &params(hyperparams! {"criterion" => "entropy"}), 0);
        let pred: Vec<u8> = t.positive_proba(x.view()).into_iter().map(super::super::label_from_proba).collect();
        assert_eq!(pred, y);
    }

    #[test]
    fn pruning_collapses_weak_splits() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = Array2::from_shape_fn((100, 2), |_| r.random::<f64>());
        let y: Vec<u8> = (0..100).map(|i| u8::from(x[[i, 0]] > 0.5) ^ u8::from(r.random::<f64>() < 0.1)).collect();
        let full = fit_classifier(x.view(), &y, &TreeParams::default(), 0);
        let mut p = TreeParams { ccp_alpha: 0.02, ..TreeParams::default() };
        let pruned = fit_classifier(x.view(), &y, &p, 0);
        assert!(pruned.leaves().len() < full.leaves().len());
        assert!(pruned.leaves().len() >= 2);
        p.ccp_alpha = 1.0;
        assert_eq!(fit_classifier(x.view(), &y, &p, 0).nodes.len(), 1);
    }

    #[test]
    fn regression_tree_fits_a_step() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let t = fit_regressor(x.view(), &[1.0, 1.0, 5.0, 5.0], (0..4).collect(), &TreeParams::default());
        assert_eq!(t.leaves().len(), 2);
        assert_eq!(t.positive_proba(x.view()), vec![1.0, 1.0, 5.0, 5.0]);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(20), 4);
        assert_eq!(MaxFeatures::Log2.resolve(20), 4);
        assert_eq!(MaxFeatures::Log2.resolve(1), 1);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
        assert_eq!(MaxFeatures::Fraction(0.5).resolve(7), 3);
    }
}
