//! Soft-margin support vector machine.
//!
//! The dual `min ½ αᵀQα − eᵀα` subject to `0 ≤ αᵢ ≤ C`, `yᵀα = 0` is solved
//! by sequential minimal optimization with second-order working-set
//! selection, iterating until the maximal KKT violation `m(α) − M(α)`
//! drops below `1e-6`. Probabilities come from a Platt sigmoid fitted to
//! the training decision values.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Family, Hyperparams, ModelError, ParamReader, ParamValue};

/// Stopping tolerance on the maximal KKT violation.
pub const KKT_TOL: f64 = 1e-6;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
    Sigmoid { gamma: f64, coef0: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Sigmoid { gamma, coef0 } => (gamma * dot(a, b) + coef0).tanh(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Scale,
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: &'static str,
    pub gamma: Gamma,
    pub max_iter: usize,
}

impl SvmParams {
    pub fn parse(p: &Hyperparams) -> Result<Self, ModelError> {
        let r = ParamReader::new(Family::Svm, p);
        let gamma = match r.raw("gamma") {
            None => Gamma::Scale,
            Some(ParamValue::Str(_)) => match r.choice("gamma", "scale", &["scale", "auto"])? {
                "scale" => Gamma::Scale,
                _ => Gamma::Auto,
            },
            Some(_) => Gamma::Value(r.positive_f64("gamma", 1.0)?),
        };
        Ok(SvmParams {
            c: r.positive_f64("C", 1.0)?,
            kernel: r.choice("kernel", "rbf", &["linear", "rbf", "sigmoid"])?,
            gamma,
            max_iter: 0,
        })
    }

    fn resolve_kernel(&self, x: ArrayView2<f64>) -> Kernel {
        let d = x.ncols().max(1) as f64;
        let gamma = match self.gamma {
            Gamma::Value(g) => g,
            Gamma::Auto => 1.0 / d,
            Gamma::Scale => {
                let n = x.len().max(1) as f64;
                let mean = x.sum() / n;
                let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    1.0 / (d * var)
                } else {
                    1.0
                }
            }
        };
        match self.kernel {
            "linear" => Kernel::Linear,
            "rbf" => Kernel::Rbf { gamma },
            _ => Kernel::Sigmoid { gamma, coef0: 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    /// Support vectors (rows with `αᵢ > 0`).
    pub support_vectors: Vec<Vec<f64>>,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    /// `αᵢ yᵢ` with `yᵢ ∈ {−1, +1}`.
    pub dual_coef: Vec<f64>,
    pub intercept: f64,
    /// Platt parameters: `P(ASD | f) = 1 / (1 + exp(A f + B))`.
    pub platt_a: f64,
    pub platt_b: f64,
    pub iterations: usize,
    /// Maximal KKT violation at termination.
    pub kkt_gap: f64,
}

/// Raw dual solution, exposed for diagnostics.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub kkt_gap: f64,
}

pub fn solve_dual(kernel_matrix: &[Vec<f64>], y: &[f64], c: f64, max_iter: usize) -> Result<DualSolution, ModelError> {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel_matrix[i][j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    let mut gap;
    loop {
        // Select i maximizing −yᵢ∇ᵢ over I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !is_upper(alpha[t]) } else { !is_lower(alpha[t]) };
            if in_up && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        // Select j over I_low by the second-order gain.
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i_sel == usize::MAX {
                continue;
            }
            let b = gmax - v;
            if b > 0.0 {
                let mut a = kernel_matrix[i_sel][i_sel] + kernel_matrix[t][t] - 2.0 * kernel_matrix[i_sel][t];
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain < best_gain {
                    best_gain = gain;
                    j_sel = t;
                }
            }
        }
        gap = gmax - gmin;
        if gap < KKT_TOL || j_sel == usize::MAX || i_sel == usize::MAX {
            break;
        }
        if iterations >= max_iter {
            let violations = (0..n)
                .filter(|&t| {
                    let v = -y[t] * grad[t];
                    let in_up = if y[t] > 0.0 { !is_upper(alpha[t]) } else { !is_lower(alpha[t]) };
                    let in_low = if y[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t]) };
                    (in_up && v > gmin + KKT_TOL) || (in_low && v < gmax - KKT_TOL)
                })
                .count();
            return Err(ModelError::Convergence {
                family: Family::Svm,
                iterations,
                detail: format!("{violations} KKT violations remain (gap {gap:.3e})"),
            });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = kernel_matrix[i][i] + kernel_matrix[j][j] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kernel_matrix[i][i] + kernel_matrix[j][j] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // Intercept from free vectors, or the midpoint of the feasible range.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += yg;
            free_count += 1;
        } else if (is_upper(alpha[t]) && y[t] < 0.0) || (is_lower(alpha[t]) && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free_count > 0 { free_sum / free_count as f64 } else { 0.5 * (ub + lb) };
    Ok(DualSolution { alpha, intercept: -rho, iterations, kkt_gap: gap.max(0.0) })
}

pub fn fit(x: ArrayView2<f64>, y: &[u8], params: &SvmParams) -> Result<SvmModel, ModelError> {
    let n = y.len();
    let kernel = params.resolve_kernel(x);
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    let km: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| kernel.eval(&rows[i], &rows[j])).collect()).collect();
    let signs: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let max_iter = if params.max_iter > 0 { params.max_iter } else { (100 * n).max(1_000_000) };
    let sol = solve_dual(&km, &signs, params.c, max_iter)?;

    let support_indices: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > 0.0).collect();
    let decision: Vec<f64> = (0..n)
        .map(|i| support_indices.iter().map(|&s| sol.alpha[s] * signs[s] * km[s][i]).sum::<f64>() + sol.intercept)
        .collect();
    let (platt_a, platt_b) = platt(&decision, y);
    Ok(SvmModel {
        kernel,
        c: params.c,
        support_vectors: support_indices.iter().map(|&i| rows[i].clone()).collect(),
        dual_coef: support_indices.iter().map(|&i| sol.alpha[i] * signs[i]).collect(),
        support_indices,
        intercept: sol.intercept,
        platt_a,
        platt_b,
        iterations: sol.iterations,
        kkt_gap: sol.kkt_gap,
    })
}

/// Platt's sigmoid fit by Newton's method with backtracking, using the
/// regularized targets `(N₊+1)/(N₊+2)` and `1/(N₋+2)`.
pub fn platt(decision: &[f64], y: &[u8]) -> (f64, f64) {
    let prior1 = y.iter().filter(|&&v| v == 1).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y.iter().map(|&v| if v == 1 { hi } else { lo }).collect();
    let (max_iter, min_step, sigma, eps) = (100, 1e-10, 1e-12, 1e-5);

    let objective = |a: f64, b: f64| -> f64 {
        decision
            .iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let fapb = f * a + b;
                if fapb >= 0.0 {
                    ti * fapb + (-fapb).exp().ln_1p()
                } else {
                    (ti - 1.0) * fapb + fapb.exp().ln_1p()
                }
            })
            .sum()
    };

    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..max_iter {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&f, &ti) in decision.iter().zip(&t) {
            let fapb = f * a + b;
            let (p, q) = if fapb >= 0.0 {
                let e = (-fapb).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = fapb.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    (a, b)
}

impl SvmModel {
    pub fn decision_row(&self, row: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * self.kernel.eval(sv, row))
            .sum::<f64>()
            + self.intercept
    }

    pub fn decision(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.decision_row(&r.to_vec())).collect()
    }

    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.decision(x).into_iter().map(|f| sigmoid(-(self.platt_a * f + self.platt_b))).collect()
    }

    /// Primal weights `w = Σ αᵢ yᵢ xᵢ` (meaningful for the linear kernel).
    pub fn primal_weights(&self) -> Vec<f64> {
        let d = self.support_vectors.first().map_or(0, Vec::len);
        let mut w = vec![0.0; d];
        for (sv, c) in self.support_vectors.iter().zip(&self.dual_coef) {
            for (wj, xj) in w.iter_mut().zip(sv) {
                *wj += c * xj;
            }
        }
        w
    }
}
