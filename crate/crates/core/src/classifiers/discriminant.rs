//! Linear and quadratic discriminant analysis.
//!
//! LDA models both classes with a shared covariance: the prior-weighted
//! average of the per-class covariances (divisor `n_k`), each optionally
//! shrunk toward `(tr Σ / d) I` by a fixed amount or by the Ledoit-Wolf
//! estimate (`shrinkage = "auto"`). The discriminant is
//! `d(x) = wᵀx + b` with `w = Σ⁻¹(μ₁ − μ₀)`. The `lsqr` solver obtains `w`
//! by a Cholesky solve; `eigen` goes through the generalized eigenproblem
//! `S_b v = λ S_w v`. For two classes both give the same `w`.
//!
//! QDA keeps one covariance per class (divisor `n_k`), regularized as
//! `(1 − r) Σ_k + r (tr Σ_k / d) I`.

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{proba_from_logs, sigmoid, Family, Hyperparams, ModelError, ParamReader, ParamValue};
use crate::linalg::{self, CholeskyFactor};

/// Relative pivot tolerance below which a covariance counts as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shrinkage {
    None,
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdaSolver {
    Lsqr,
    Eigen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaParams {
    pub solver: LdaSolver,
    pub shrinkage: Shrinkage,
    pub n_components: Option<usize>,
}

impl LdaParams {
    pub fn parse(p: &Hyperparams) -> Result<Self, ModelError> {
        let r = ParamReader::new(Family::Lda, p);
        let solver = match r.choice("solver", "lsqr", &["lsqr", "eigen"])? {
            "lsqr" => LdaSolver::Lsqr,
            _ => LdaSolver::Eigen,
        };
        let shrinkage = match r.raw("shrinkage") {
            None | Some(ParamValue::Null) => Shrinkage::None,
            Some(ParamValue::Str(_)) => {
                r.choice("shrinkage", "auto", &["auto"])?;
                Shrinkage::Auto
            }
            Some(_) => Shrinkage::Fixed(r.fraction("shrinkage", 0.0)?),
        };
        let n_components = r.opt_usize("n_components")?;
        if n_components.is_some_and(|k| k > 1) {
            return Err(r.reject("n_components", "at most 1 for two classes"));
        }
        Ok(LdaParams { solver, shrinkage, n_components })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdaParams {
    pub reg_param: f64,
}

impl QdaParams {
    pub fn parse(p: &Hyperparams) -> Result<Self, ModelError> {
        let r = ParamReader::new(Family::Qda, p);
        Ok(QdaParams { reg_param: r.fraction("reg_param", 0.0)? })
    }
}

/// Rows of `x` belonging to `class` as a dense matrix.
pub(crate) fn class_matrix(x: ArrayView2<f64>, y: &[u8], class: u8) -> DMatrix<f64> {
    let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
    DMatrix::from_fn(rows.len(), x.ncols(), |r, c| x[[rows[r], c]])
}

fn shrink_toward_identity(cov: &DMatrix<f64>, amount: f64) -> DMatrix<f64> {
    let d = cov.nrows();
    let mu = cov.trace() / d as f64;
    cov * (1.0 - amount) + DMatrix::identity(d, d) * (amount * mu)
}

/// Ledoit-Wolf shrinkage intensity of centred data `xc`.
pub fn ledoit_wolf_shrinkage(xc: &DMatrix<f64>) -> f64 {
    let (n, d) = (xc.nrows() as f64, xc.ncols());
    let x2 = xc.map(|v| v * v);
    let emp_trace: Vec<f64> = (0..d).map(|j| x2.column(j).sum() / n).collect();
    let mu = emp_trace.iter().sum::<f64>() / d as f64;
    let beta_ = (x2.transpose() * &x2).sum();
    let delta_ = (xc.transpose() * xc).map(|v| v * v).sum() / (n * n);
    let beta = (beta_ / n - delta_) / (d as f64 * n);
    let delta = (delta_ - 2.0 * mu * emp_trace.iter().sum::<f64>() + d as f64 * mu * mu) / d as f64;
    let beta = beta.min(delta);
    if beta == 0.0 {
        0.0
    } else {
        beta / delta
    }
}

/// Covariance (divisor n) of `xk`, shrunk as requested.
fn class_covariance(xk: &DMatrix<f64>, shrinkage: Shrinkage) -> DMatrix<f64> {
    match shrinkage {
        Shrinkage::None => linalg::covariance(xk, 0),
        Shrinkage::Fixed(s) => shrink_toward_identity(&linalg::covariance(xk, 0), s),
        Shrinkage::Auto => {
            let d = xk.ncols();
            let mean = linalg::column_means(xk);
            let mut xc = xk.clone();
            for mut row in xc.row_iter_mut() {
                row -= mean.transpose();
            }
            let n = xk.nrows().max(1) as f64;
            let scale: Vec<f64> = (0..d)
                .map(|j| {
                    let s = (xc.column(j).map(|v| v * v).sum() / n).sqrt();
                    if s > 0.0 {
                        s
                    } else {
                        1.0
                    }
                })
                .collect();
            let xs = DMatrix::from_fn(xc.nrows(), d, |i, j| xc[(i, j)] / scale[j]);
            let s = ledoit_wolf_shrinkage(&xs);
            let standardized = shrink_toward_identity(&linalg::covariance(&xs, 0), s);
            DMatrix::from_fn(d, d, |i, j| scale[i] * standardized[(i, j)] * scale[j])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lda {
    /// Discriminant direction `w`.
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub means: [Vec<f64>; 2],
    pub priors: [f64; 2],
}

pub fn fit_lda(x: ArrayView2<f64>, y: &[u8], params: &LdaParams) -> Result<Lda, ModelError> {
    let n = y.len() as f64;
    let d = x.ncols();
    let parts = [class_matrix(x, y, 0), class_matrix(x, y, 1)];
    let priors = [parts[0].nrows() as f64 / n, parts[1].nrows() as f64 / n];
    let means = [linalg::column_means(&parts[0]), linalg::column_means(&parts[1])];
    let mut sw = DMatrix::zeros(d, d);
    for k in 0..2 {
        sw += class_covariance(&parts[k], params.shrinkage) * priors[k];
    }
    let chol = CholeskyFactor::new(&sw, SINGULAR_TOL)
        .ok_or_else(|| ModelError::Singular { family: Family::Lda, what: "the pooled within-class covariance".into() })?;

    // Per-class linear scores c_k·x + b_k with c_k = Σ⁻¹ μ_k.
    let class_coef: Vec<DVector<f64>> = match params.solver {
        LdaSolver::Lsqr => {
            let rhs = DMatrix::from_columns(&[means[0].clone(), means[1].clone()]);
            let sol = chol.solve(&rhs);
            vec![sol.column(0).into_owned(), sol.column(1).into_owned()]
        }
        LdaSolver::Eigen => {
            let overall = &means[0] * priors[0] + &means[1] * priors[1];
            let mut sb = DMatrix::zeros(d, d);
            for k in 0..2 {
                let diff = &means[k] - &overall;
                sb += &diff * diff.transpose() * priors[k];
            }
            // Whitened problem L⁻¹ S_b L⁻ᵀ u = λ u, then v = L⁻ᵀ u.
            let l_inv_sb = chol.lower.solve_lower_triangular(&sb).expect("non-singular factor");
            let m = chol.lower.solve_lower_triangular(&l_inv_sb.transpose()).expect("non-singular factor");
            let m = (&m + m.transpose()) * 0.5;
            let (_, u) = linalg::sym_eigen_desc(&m, 1e-10);
            let v = chol.lower.transpose().solve_upper_triangular(&u).expect("non-singular factor");
            let vvt = &v * v.transpose();
            vec![&vvt * &means[0], &vvt * &means[1]]
        }
    };
    let intercepts: Vec<f64> =
        (0..2).map(|k| -0.5 * means[k].dot(&class_coef[k]) + priors[k].ln()).collect();
    let coef = &class_coef[1] - &class_coef[0];
    Ok(Lda {
        coef: coef.iter().copied().collect(),
        intercept: intercepts[1] - intercepts[0],
        means: [means[0].iter().copied().collect(), means[1].iter().copied().collect()],
        priors,
    })
}

impl Lda {
    pub fn decision(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| r.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>() + self.intercept)
            .collect()
    }

    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.decision(x).into_iter().map(sigmoid).collect()
    }
}

/// A multivariate normal stored as mean and Cholesky factor of its
/// covariance (row-major lower triangle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub log_det: f64,
}

impl Gaussian {
    pub fn new(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Option<Self> {
        let f = CholeskyFactor::new(cov, SINGULAR_TOL)?;
        let d = cov.nrows();
        let mut lower = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                lower[i * d + j] = f.lower[(i, j)];
            }
        }
        Some(Gaussian { mean: mean.iter().copied().collect(), lower, log_det: f.log_det })
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let d = self.mean.len();
        let mut z = vec![0.0; d];
        let mut maha = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= self.lower[i * d + j] * z[j];
            }
            z[i] = s / self.lower[i * d + i];
            maha += z[i] * z[i];
        }
        -0.5 * (d as f64 * (2.0 * PI).ln() + self.log_det + maha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qda {
    pub classes: [Gaussian; 2],
    pub log_priors: [f64; 2],
}

pub fn fit_qda(x: ArrayView2<f64>, y: &[u8], params: &QdaParams) -> Result<Qda, ModelError> {
    let n = y.len() as f64;
    let mut fitted = Vec::with_capacity(2);
    let mut log_priors = [0.0; 2];
    for class in 0..2u8 {
        let xk = class_matrix(x, y, class);
        log_priors[class as usize] = (xk.nrows() as f64 / n).ln();
        let cov = shrink_toward_identity(&linalg::covariance(&xk, 0), params.reg_param);
        let g = Gaussian::new(&linalg::column_means(&xk), &cov).ok_or_else(|| ModelError::Singular {
            family: Family::Qda,
            what: format!("class {} ({})", class, crate::data::label_name(class)),
        })?;
        fitted.push(g);
    }
    let g1 = fitted.pop().expect("two classes");
    let g0 = fitted.pop().expect("two classes");
    Ok(Qda { classes: [g0, g1], log_priors })
}

impl Qda {
    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| {
                let row = r.to_vec();
                let l0 = self.classes[0].log_pdf(&row) + self.log_priors[0];
                let l1 = self.classes[1].log_pdf(&row) + self.log_priors[1];
                proba_from_logs(l0, l1)
            })
            .collect()
    }
}
