//! Gaussian naive Bayes.
//!
//! Per-class feature means and variances with class priors from label
//! frequencies. Variances are floored at `1e-9` times the largest feature
//! variance of the training set so constant columns stay finite.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::proba_from_logs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// `ln P(class)`; `-inf` for a class absent from training.
    pub log_prior: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

pub fn fit(x: ArrayView2<f64>, y: &[u8]) -> GaussianNb {
    let d = x.ncols();
    let n = y.len() as f64;
    let overall_max_var = (0..d)
        .map(|j| {
            let col = x.column(j);
            let m = col.sum() / n;
            col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
        })
        .fold(0.0, f64::max);
    let floor = if overall_max_var > 0.0 { 1e-9 * overall_max_var } else { 1e-9 };

    let mut means = [vec![0.0; d], vec![0.0; d]];
    let mut variances = [vec![floor; d], vec![floor; d]];
    let mut log_prior = [f64::NEG_INFINITY; 2];
    for class in 0..2u8 {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.is_empty() {
            continue;
        }
        let c = class as usize;
        let nc = rows.len() as f64;
        log_prior[c] = (nc / n).ln();
        for j in 0..d {
            let m = rows.iter().map(|&i| x[[i, j]]).sum::<f64>() / nc;
            let v = rows.iter().map(|&i| (x[[i, j]] - m).powi(2)).sum::<f64>() / nc;
            means[c][j] = m;
            variances[c][j] = v.max(floor);
        }
    }
    GaussianNb { log_prior, means, variances }
}

impl GaussianNb {
    pub fn joint_log_likelihood(&self, row: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for c in 0..2 {
            if self.log_prior[c] == f64::NEG_INFINITY {
                out[c] = f64::NEG_INFINITY;
                continue;
            }
            let mut ll = self.log_prior[c];
            for ((x, m), v) in row.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                ll -= 0.5 * ((2.0 * PI * v).ln() + (x - m).powi(2) / v);
            }
            out[c] = ll;
        }
        out
    }

    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                let row: Vec<f64> = row.to_vec();
                let [l0, l1] = self.joint_log_likelihood(&row);
                proba_from_logs(l0, l1)
            })
            .collect()
    }
}
