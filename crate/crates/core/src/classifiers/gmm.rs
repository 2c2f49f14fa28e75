//! Generative classifier with one Gaussian mixture per class.
//!
//! Each class density `P(x | k) = Σᵢ πᵢ N(x | μᵢ, Σᵢ)` is fitted by EM,
//! seeded by k-means++ followed by Lloyd iterations; rows are then
//! classified by `P(x | k) P(k)`. Covariances are `full`, `tied` (shared
//! within the class), `diag` or `spherical`, each with `reg_covar` added to
//! the diagonal. EM stops when the mean log-likelihood changes by less
//! than `tol`; running out of iterations is an error.

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::discriminant::{class_matrix, Gaussian};
use super::{proba_from_logs, Family, Hyperparams, ModelError, ParamReader};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovarianceType {
    Full,
    Tied,
    Diag,
    Spherical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    pub n_components: usize,
    pub covariance_type: CovarianceType,
}

impl GmmParams {
    pub fn parse(p: &Hyperparams) -> Result<Self, ModelError> {
        let r = ParamReader::new(Family::Gmm, p);
        let n_components = r.usize("n_components", 1)?;
        if n_components == 0 {
            return Err(r.reject("n_components", "must be at least 1"));
        }
        let covariance_type = match r.choice("covariance_type", "full", &["full", "tied", "diag", "spherical"])? {
            "full" => CovarianceType::Full,
            "tied" => CovarianceType::Tied,
            "diag" => CovarianceType::Diag,
            _ => CovarianceType::Spherical,
        };
        Ok(GmmParams { n_components, covariance_type })
    }
}

/// Numerical settings outside the tuning vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmOptions {
    pub reg_covar: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub kmeans_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { reg_covar: 1e-6, max_iter: 100, tol: 1e-3, kmeans_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub log_weights: Vec<f64>,
    pub components: Vec<Gaussian>,
    /// Mean log-likelihood at each EM iteration.
    pub log_likelihood: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmClassifier {
    pub covariance_type: CovarianceType,
    pub classes: [Mixture; 2],
    pub log_priors: [f64; 2],
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|a| (a - m).exp()).sum::<f64>().ln()
}

fn sq_dist(x: &DMatrix<f64>, i: usize, c: &DVector<f64>) -> f64 {
    (0..x.ncols()).map(|j| (x[(i, j)] - c[j]).powi(2)).sum()
}

/// k-means++ seeding then Lloyd iterations; returns hard assignments.
fn kmeans(x: &DMatrix<f64>, k: usize, iters: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    let n = x.nrows();
    let row = |i: usize| x.row(i).transpose();
    let mut centres = vec![row(r.random_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x, i, &centres[0])).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = r.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            r.random_range(0..n)
        };
        centres.push(row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x, i, centres.last().expect("non-empty")));
        }
    }
    let mut assign = vec![usize::MAX; n];
    for _ in 0..iters.max(1) {
        let mut changed = false;
        for (i, a) in assign.iter_mut().enumerate() {
            let best = (0..k)
                .map(|c| (c, sq_dist(x, i, &centres[c])))
                .fold((0, f64::INFINITY), |b, (c, d)| if d < b.1 { (c, d) } else { b });
            if *a != best.0 {
                *a = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (c, centre) in centres.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assign[i] == c).collect();
            if !members.is_empty() {
                *centre = DVector::from_fn(x.ncols(), |j, _| members.iter().map(|&i| x[(i, j)]).sum::<f64>() / members.len() as f64);
            }
        }
    }
    assign
}

struct Em<'a> {
    x: &'a DMatrix<f64>,
    kind: CovarianceType,
    reg: f64,
    class: u8,
}

impl Em<'_> {
    fn m_step(&self, resp: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<Gaussian>), ModelError> {
        let (n, d) = (self.x.nrows(), self.x.ncols());
        let k = resp.ncols();
        let nk: Vec<f64> = (0..k).map(|j| resp.column(j).sum() + 10.0 * f64::EPSILON).collect();
        let means: Vec<DVector<f64>> = (0..k)
            .map(|j| DVector::from_fn(d, |c, _| (0..n).map(|i| resp[(i, j)] * self.x[(i, c)]).sum::<f64>() / nk[j]))
            .collect();
        let scatter = |j: usize| -> DMatrix<f64> {
            let mut s = DMatrix::zeros(d, d);
            for i in 0..n {
                let diff = self.x.row(i).transpose() - &means[j];
                s += &diff * diff.transpose() * resp[(i, j)];
            }
            s
        };
        let eye = DMatrix::<f64>::identity(d, d);
        let covs: Vec<DMatrix<f64>> = match self.kind {
            CovarianceType::Full => (0..k).map(|j| scatter(j) / nk[j] + &eye * self.reg).collect(),
            CovarianceType::Tied => {
                let mut s = DMatrix::zeros(d, d);
                for j in 0..k {
                    s += scatter(j);
                }
                let tied = s / nk.iter().sum::<f64>() + &eye * self.reg;
                vec![tied; k]
            }
            CovarianceType::Diag | CovarianceType::Spherical => (0..k)
                .map(|j| {
                    let var: Vec<f64> = (0..d)
                        .map(|c| (0..n).map(|i| resp[(i, j)] * (self.x[(i, c)] - means[j][c]).powi(2)).sum::<f64>() / nk[j] + self.reg)
                        .collect();
                    if self.kind == CovarianceType::Spherical {
                        let m = var.iter().sum::<f64>() / d as f64;
                        &eye * m
                    } else {
                        DMatrix::from_diagonal(&DVector::from_vec(var))
                    }
                })
                .collect(),
        };
        let total: f64 = nk.iter().sum();
        let log_weights = nk.iter().map(|v| (v / total).ln()).collect();
        let comps = covs
            .iter()
            .enumerate()
            .map(|(j, cov)| {
                Gaussian::new(&means[j], cov).ok_or_else(|| ModelError::Singular {
                    family: Family::Gmm,
                    what: format!("class {} ({}), component {j}", self.class, crate::data::label_name(self.class)),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((log_weights, comps))
    }

    /// Responsibilities and mean log-likelihood.
    fn e_step(&self, log_weights: &[f64], comps: &[Gaussian]) -> (DMatrix<f64>, f64) {
        let (n, k) = (self.x.nrows(), comps.len());
        let mut resp = DMatrix::zeros(n, k);
        let mut total = 0.0;
        for i in 0..n {
            let row: Vec<f64> = self.x.row(i).iter().copied().collect();
            let lp: Vec<f64> = (0..k).map(|j| log_weights[j] + comps[j].log_pdf(&row)).collect();
            let lse = log_sum_exp(&lp);
            total += lse;
            for j in 0..k {
                resp[(i, j)] = (lp[j] - lse).exp();
            }
        }
        (resp, total / n as f64)
    }
}

fn fit_mixture(x: &DMatrix<f64>, class: u8, params: &GmmParams, opts: &EmOptions, r: &mut ChaCha8Rng) -> Result<Mixture, ModelError> {
    let k = params.n_components.min(x.nrows()).max(1);
    let assign = kmeans(x, k, opts.kmeans_iter, r);
    let mut resp = DMatrix::zeros(x.nrows(), k);
    for (i, &a) in assign.iter().enumerate() {
        resp[(i, a)] = 1.0;
    }
    let em = Em { x, kind: params.covariance_type, reg: opts.reg_covar, class };
    let (mut log_weights, mut comps) = em.m_step(&resp)?;
    let mut history = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for _ in 0..opts.max_iter {
        let (resp, ll) = em.e_step(&log_weights, &comps);
        history.push(ll);
        let delta = ll - last;
        last = ll;
        (log_weights, comps) = em.m_step(&resp)?;
        if delta.abs() < opts.tol {
            return Ok(Mixture { log_weights, components: comps, log_likelihood: history });
        }
    }
    let delta = match history.as_slice() {
        [.., a, b] => b - a,
        _ => f64::NAN,
    };
    Err(ModelError::Convergence {
        family: Family::Gmm,
        iterations: opts.max_iter,
        detail: format!("EM for class {class} still moving: last log-likelihood change {delta:.3e}"),
    })
}

pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &GmmParams, opts: &EmOptions, seed: u64) -> Result<GmmClassifier, ModelError> {
    let n = y.len() as f64;
    let base = rng::derive(seed, rng::stream::MIXTURE);
    let mut mixtures = Vec::with_capacity(2);
    let mut log_priors = [0.0; 2];
    for class in 0..2u8 {
        let xk = class_matrix(x, y, class);
        log_priors[class as usize] = (xk.nrows() as f64 / n).ln();
        let mut r = rng::rng_from(rng::derive(base, u64::from(class)));
        mixtures.push(fit_mixture(&xk, class, params, opts, &mut r)?);
    }
    let m1 = mixtures.pop().expect("two classes");
    let m0 = mixtures.pop().expect("two classes");
    Ok(GmmClassifier { covariance_type: params.covariance_type, classes: [m0, m1], log_priors })
}

impl Mixture {
    pub fn log_density(&self, row: &[f64]) -> f64 {
        let lp: Vec<f64> = self.log_weights.iter().zip(&self.components).map(|(w, g)| w + g.log_pdf(row)).collect();
        log_sum_exp(&lp)
    }
}

impl GmmClassifier {
    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| {
                let row = r.to_vec();
                let l0 = self.classes[0].log_density(&row) + self.log_priors[0];
                let l1 = self.classes[1].log_density(&row) + self.log_priors[1];
                proba_from_logs(l0, l1)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::discriminant::{fit_qda, QdaParams};
    use crate::hyperparams;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn two_blob_classes(seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = Normal::new(0.0, 1.0).unwrap();
        let n = 160;
        let y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let lobe = if (i / 2) % 2 == 0 { 3.0 } else { -3.0 };
            let centre = if y[i] == 1 { lobe } else if j == 0 { -4.0 } else { 4.0 };
            centre + g.sample(&mut r)
        });
        (x, y)
    }

    #[test]
    fn single_component_matches_unregularized_qda() {
        let (x, y) = two_blob_classes(1);
        let opts = EmOptions { reg_covar: 0.0, ..EmOptions::default() };
        let p = GmmParams::parse(&hyperparams! {"n_components" => 1i64, "covariance_type" => "full"}).unwrap();
        let gmm = fit(x.view(), &y, &p, &opts, 0).unwrap();
        let qda = fit_qda(x.view(), &y, &QdaParams { reg_param: 0.0 }).unwrap();
        for (a, b) in gmm.positive_proba(x.view()).iter().zip(qda.positive_proba(x.view())) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn em_log_likelihood_is_non_decreasing() {
        let (x, y) = two_blob_classes(2);
        let opts = EmOptions { reg_covar: 0.0, tol: 1e-7, max_iter: 20_000, ..EmOptions::default() };
        for kind in ["full", "tied", "diag", "spherical"] {
            let p = GmmParams::parse(&hyperparams! {"n_components" => 3i64, "covariance_type" => kind}).unwrap();
            let gmm = fit(x.view(), &y, &p, &opts, 4).unwrap();
            for mix in &gmm.classes {
                for w in mix.log_likelihood.windows(2) {
                    assert!(w[1] >= w[0] - 1e-9, "{kind}: {} -> {}", w[0], w[1]);
                }
            }
        }
    }

    #[test]
    fn components_are_clamped_to_class_size() {
        let x = ndarray::array![[0.0], [1.0], [5.0], [6.0], [7.0]];
        let p = GmmParams::parse(&hyperparams! {"n_components" => 4i64, "covariance_type" => "spherical"}).unwrap();
        let gmm = fit(x.view(), &[0, 0, 1, 1, 1], &p, &EmOptions::default(), 0).unwrap();
        assert_eq!(gmm.classes[0].components.len(), 2);
        assert_eq!(gmm.classes[1].components.len(), 3);
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let (x, y) = two_blob_classes(3);
        let opts = EmOptions { max_iter: 1, tol: 0.0, ..EmOptions::default() };
        let p = GmmParams::parse(&hyperparams! {"n_components" => 2i64}).unwrap();
        assert!(matches!(fit(x.view(), &y, &p, &opts, 0), Err(ModelError::Convergence { .. })));
    }
}
