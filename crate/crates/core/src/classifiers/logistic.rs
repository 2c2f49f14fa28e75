//! Penalized logistic regression.
//!
//! Minimizes `C · Σ wᵢ ℓᵢ(β, b) + R(β)` with `ℓ` the logistic loss, `wᵢ` the
//! row weights (`class_weight`) and `R` the L1 norm, half the squared L2
//! norm, an elastic-net mix or nothing. The intercept is never penalized,
//! so `intercept_scaling` is accepted but has no effect.
//!
//! The solver is accelerated proximal gradient (FISTA) with backtracking
//! and adaptive restart. It stops when the sup-norm of the proximal
//! gradient mapping of the per-row objective (the one above divided by
//! `C n`) falls below `tol`.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{sigmoid, Family, Hyperparams, ModelError, ParamReader, ParamValue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Penalty {
    L1,
    L2,
    ElasticNet { l1_ratio: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub penalty: Penalty,
    pub c: f64,
    pub tol: f64,
    pub fit_intercept: bool,
    pub balanced: bool,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { penalty: Penalty::L2, c: 1.0, tol: 1e-4, fit_intercept: true, balanced: false, max_iter: 1000 }
    }
}

impl LogisticParams {
    pub fn parse(p: &Hyperparams) -> Result<Self, ModelError> {
        let r = ParamReader::new(Family::Lr, p);
        let penalty_name = r.choice("penalty", "l2", &["l1", "l2", "elasticnet", "None"])?;
        let l1_ratio = match r.raw("l1_ratio") {
            None | Some(ParamValue::Null) => None,
            Some(_) => Some(r.fraction("l1_ratio", 0.0)?),
        };
        let penalty = match penalty_name {
            "l1" => Penalty::L1,
            "l2" => Penalty::L2,
            "None" => Penalty::None,
            _ => match l1_ratio {
                Some(l1_ratio) => Penalty::ElasticNet { l1_ratio },
                None => return Err(r.reject("l1_ratio", "required when penalty is 'elasticnet'")),
            },
        };
        if r.bool("dual", false)? {
            return Err(r.reject("dual", "the dual formulation is not supported"));
        }
        r.choice("solver", "saga", &["saga"])?;
        r.positive_f64("intercept_scaling", 1.0)?;
        let class_weight = r.choice("class_weight", "None", &["None", "balanced"])?;
        let max_iter = r.usize("max_iter", 1000)?;
        if max_iter == 0 {
            return Err(r.reject("max_iter", "must be at least 1"));
        }
        Ok(LogisticParams {
            penalty,
            c: r.positive_f64("C", 1.0)?,
            tol: r.positive_f64("tol", 1e-4)?,
            fit_intercept: r.bool("fit_intercept", true)?,
            balanced: class_weight == "balanced",
            max_iter,
        })
    }

    fn split_penalty(&self) -> (f64, f64) {
        match self.penalty {
            Penalty::L1 => (1.0, 0.0),
            Penalty::L2 => (0.0, 1.0),
            Penalty::ElasticNet { l1_ratio } => (l1_ratio, 1.0 - l1_ratio),
            Penalty::None => (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub n_iter: usize,
}

impl LogisticModel {
    pub fn decision(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| row.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>() + self.intercept)
            .collect()
    }

    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.decision(x).into_iter().map(sigmoid).collect()
    }
}

fn row_weights(y: &[u8], balanced: bool) -> Vec<f64> {
    if !balanced {
        return vec![1.0; y.len()];
    }
    let n = y.len() as f64;
    let n1 = y.iter().filter(|&&v| v == 1).count() as f64;
    let w = [n / (2.0 * (n - n1)), n / (2.0 * n1)];
    y.iter().map(|&v| w[v as usize]).collect()
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// The solver's objective `C · Σ wᵢ ℓᵢ + R(β)` at `(coef, intercept)`.
pub fn penalized_loss(x: ArrayView2<f64>, y: &[u8], params: &LogisticParams, coef: &[f64], intercept: f64) -> f64 {
    let w = row_weights(y, params.balanced);
    let data: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .zip(&w)
        .map(|((row, &label), wi)| {
            let z = row.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>() + intercept;
            let s = if label == 1 { -z } else { z };
            wi * softplus(s)
        })
        .sum();
    let (l1, l2) = params.split_penalty();
    let r = l1 * coef.iter().map(|b| b.abs()).sum::<f64>() + 0.5 * l2 * coef.iter().map(|b| b * b).sum::<f64>();
    params.c * data + r
}

/// Smooth part, scaled by `1 / (C n)`: mean weighted loss plus the L2 term.
struct Smooth<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    w: Vec<f64>,
    lam2: f64,
    fit_intercept: bool,
}

impl Smooth<'_> {
    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.x.ncols();
        let n = self.x.nrows() as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for ((row, &label), wi) in self.x.rows().into_iter().zip(self.y).zip(&self.w) {
            let z = dot(row, &theta[..d]) + theta[d];
            let t = f64::from(label);
            value += wi * if label == 1 { softplus(-z) } else { softplus(z) };
            let r = wi * (sigmoid(z) - t);
            for (g, xv) in grad[..d].iter_mut().zip(row.iter()) {
                *g += r * xv;
            }
            grad[d] += r;
        }
        value /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        if !self.fit_intercept {
            grad[d] = 0.0;
        }
        if self.lam2 > 0.0 {
            for (g, b) in grad[..d].iter_mut().zip(&theta[..d]) {
                *g += self.lam2 * b;
            }
            value += 0.5 * self.lam2 * theta[..d].iter().map(|b| b * b).sum::<f64>();
        }
        value
    }

    /// Power-iteration estimate of the gradient's Lipschitz constant.
    fn lipschitz(&self) -> f64 {
        let d = self.x.ncols();
        let n = self.x.nrows() as f64;
        let mut v = vec![1.0 / ((d + 1) as f64).sqrt(); d + 1];
        let mut estimate = 0.0;
        for _ in 0..30 {
            let mut out = vec![0.0; d + 1];
            for (row, wi) in self.x.rows().into_iter().zip(&self.w) {
                let z = dot(row, &v[..d]) + v[d];
                for (o, xv) in out[..d].iter_mut().zip(row.iter()) {
                    *o += wi * z * xv;
                }
                out[d] += wi * z;
            }
            let norm = out.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            estimate = norm;
            v = out.into_iter().map(|a| a / norm).collect();
        }
        0.25 * estimate / n + self.lam2
    }
}

fn dot(row: ArrayView1<f64>, b: &[f64]) -> f64 {
    row.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &LogisticParams) -> Result<LogisticModel, ModelError> {
    let d = x.ncols();
    let n = y.len();
    let n1 = y.iter().filter(|&&v| v == 1).count();
    if n1 == 0 || n1 == n {
        let intercept = ((n1 as f64 + 0.5) / ((n - n1) as f64 + 0.5)).ln();
        return Ok(LogisticModel { coef: vec![0.0; d], intercept, n_iter: 0 });
    }

    let scale = 1.0 / (params.c * n as f64);
    let (l1, l2) = params.split_penalty();
    let lam1 = l1 * scale;
    let smooth = Smooth { x, y, w: row_weights(y, params.balanced), lam2: l2 * scale, fit_intercept: params.fit_intercept };
    let prox = |v: &[f64], step: f64, out: &mut [f64]| {
        for j in 0..d {
            out[j] = soft_threshold(v[j], step * lam1);
        }
        out[d] = if params.fit_intercept { v[d] } else { 0.0 };
    };

    let mut lipschitz = smooth.lipschitz().max(1e-12) * 1.01;
    let mut theta = vec![0.0; d + 1];
    let mut z = theta.clone();
    let mut t = 1.0f64;
    let mut grad = vec![0.0; d + 1];
    let mut trial = vec![0.0; d + 1];
    let mut trial_grad = vec![0.0; d + 1];
    let mut step_in = vec![0.0; d + 1];
    let mut residual = f64::INFINITY;

    for iter in 1..=params.max_iter {
        let fz = smooth.value_grad(&z, &mut grad);
        loop {
            for k in 0..=d {
                step_in[k] = z[k] - grad[k] / lipschitz;
            }
            prox(&step_in, 1.0 / lipschitz, &mut trial);
            let mut model = fz;
            let mut dist = 0.0;
            for k in 0..=d {
                let diff = trial[k] - z[k];
                model += grad[k] * diff;
                dist += diff * diff;
            }
            let ft = smooth.value_grad(&trial, &mut trial_grad);
            if ft <= model + 0.5 * lipschitz * dist + 1e-12 * ft.abs().max(1.0) {
                break;
            }
            lipschitz *= 2.0;
        }

        residual = (0..=d).map(|k| (lipschitz * (trial[k] - z[k])).abs()).fold(0.0, f64::max);
        // Gradient-based restart: drop momentum when it points uphill.
        let uphill: f64 = (0..=d).map(|k| (z[k] - trial[k]) * (trial[k] - theta[k])).sum();
        let t_next = if uphill > 0.0 { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let momentum = if uphill > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        for k in 0..=d {
            z[k] = trial[k] + momentum * (trial[k] - theta[k]);
        }
        theta.copy_from_slice(&trial);
        t = t_next;

        if residual <= params.tol {
            return Ok(LogisticModel { coef: theta[..d].to_vec(), intercept: theta[d], n_iter: iter });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(ModelError::Convergence {
        family: Family::Lr,
        iterations: params.max_iter,
        detail: format!("final gradient-mapping norm {residual:.3e} above tol {:.1e}", params.tol),
    })
}

/// Convenience for callers that only need coefficients (recursive
/// feature elimination).
pub fn fit_coefficients(x: ArrayView2<f64>, y: &[u8], params: &LogisticParams) -> Result<Array1<f64>, ModelError> {
    Ok(Array1::from(fit(x, y, params)?.coef))
}
