//! k-nearest neighbours under the Minkowski-p distance.
//!
//! Every `algorithm` choice runs the same brute-force search; the value is
//! validated and kept in the spec but does not change results. Neighbour
//! ties are broken by training-row order.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{Family, Hyperparams, ModelError, ParamReader};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnParams {
    pub n_neighbors: usize,
    pub distance_weighted: bool,
    pub p: f64,
}

impl KnnParams {
    pub fn parse(p: &Hyperparams) -> Result<Self, ModelError> {
        let r = ParamReader::new(Family::Knn, p);
        let n_neighbors = r.usize("n_neighbors", 5)?;
        if n_neighbors == 0 {
            return Err(r.reject("n_neighbors", "must be at least 1"));
        }
        r.choice("algorithm", "auto", &["auto", "ball_tree", "kd_tree", "brute"])?;
        let minkowski = r.f64("p", 2.0)?;
        if !(minkowski >= 1.0) || !minkowski.is_finite() {
            return Err(r.reject("p", "must be a finite number >= 1"));
        }
        Ok(KnnParams {
            n_neighbors,
            distance_weighted: r.choice("weights", "uniform", &["uniform", "distance"])? == "distance",
            p: minkowski,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub distance_weighted: bool,
    pub p: f64,
    pub x: Array2<f64>,
    pub y: Vec<u8>,
}

pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &KnnParams) -> Result<KnnModel, ModelError> {
    if params.n_neighbors > y.len() {
        return Err(ModelError::Precondition {
            family: Family::Knn,
            reason: format!("n_neighbors = {} exceeds the {} training rows", params.n_neighbors, y.len()),
        });
    }
    Ok(KnnModel {
        k: params.n_neighbors,
        distance_weighted: params.distance_weighted,
        p: params.p,
        x: x.as_standard_layout().into_owned(),
        y: y.to_vec(),
    })
}

pub fn minkowski(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum()
    } else if p == 2.0 {
        a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
    } else {
        a.iter().zip(b).map(|(u, v)| (u - v).abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

impl KnnModel {
    /// Indices and distances of the `k` nearest training rows.
    pub fn neighbours(&self, query: &[f64]) -> Vec<(usize, f64)> {
        let mut d: Vec<(usize, f64)> = self
            .x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| (i, minkowski(row.as_slice().expect("owned rows are contiguous"), query, self.p)))
            .collect();
        d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        d.truncate(self.k);
        d
    }

    fn proba_row(&self, query: &[f64]) -> f64 {
        let nn = self.neighbours(query);
        if self.distance_weighted {
            let exact: Vec<&(usize, f64)> = nn.iter().filter(|(_, d)| *d == 0.0).collect();
            if !exact.is_empty() {
                return exact.iter().filter(|(i, _)| self.y[*i] == 1).count() as f64 / exact.len() as f64;
            }
            let total: f64 = nn.iter().map(|(_, d)| 1.0 / d).sum();
            nn.iter().filter(|(i, _)| self.y[*i] == 1).map(|(_, d)| 1.0 / d).sum::<f64>() / total
        } else {
            nn.iter().filter(|(i, _)| self.y[*i] == 1).count() as f64 / nn.len() as f64
        }
    }

    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.proba_row(&r.to_vec())).collect()
    }
}
