//! Dense symmetric linear algebra over nalgebra, shared by PCA and the
//! Gaussian models.

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;

pub fn to_dmatrix(x: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[[i, j]])
}

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows().max(1) as f64;
    DVector::from_fn(x.ncols(), |j, _| x.column(j).sum() / n)
}

/// Covariance with divisor `n - ddof`.
pub fn covariance(x: &DMatrix<f64>, ddof: usize) -> DMatrix<f64> {
    let mu = column_means(x);
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mu.transpose();
    }
    let denom = (x.nrows().saturating_sub(ddof)).max(1) as f64;
    (centered.transpose() * &centered) / denom
}

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue; ties
/// keep the solver's column order. Eigenvectors are columns.
pub fn sym_eigen_desc(m: &DMatrix<f64>, tol: f64) -> (Vec<f64>, DMatrix<f64>) {
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), tol, 0)
        .unwrap_or_else(|| nalgebra::SymmetricEigen::new(m.clone()));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Cholesky factor and log-determinant of a symmetric positive definite
/// matrix, or `None` when a pivot falls below `rel_tol * max(diag)`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub lower: DMatrix<f64>,
    pub log_det: f64,
}

impl CholeskyFactor {
    pub fn new(m: &DMatrix<f64>, rel_tol: f64) -> Option<Self> {
        let scale = m.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if !(scale > 0.0) || !scale.is_finite() {
            return None;
        }
        let chol = nalgebra::Cholesky::new(m.clone())?;
        let lower = chol.l();
        if lower.diagonal().iter().any(|&d| !(d * d > rel_tol * scale)) {
            return None;
        }
        let log_det = 2.0 * lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Some(CholeskyFactor { lower, log_det })
    }

    /// Squared Mahalanobis norm `vᵀ Σ⁻¹ v`.
    pub fn mahalanobis_sq(&self, v: &DVector<f64>) -> f64 {
        let z = self
            .lower
            .solve_lower_triangular(v)
            .expect("non-singular triangular factor");
        z.norm_squared()
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let z = self.lower.solve_lower_triangular(b).expect("non-singular");
        self.lower.transpose().solve_upper_triangular(&z).expect("non-singular")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn covariance_and_eigen() {
        let x = to_dmatrix(array![[1.0, 0.0], [-1.0, 0.0], [3.0, 0.0], [-3.0, 0.0]].view());
        let c = covariance(&x, 0);
        assert_eq!(c[(0, 0)], 5.0);
        assert_eq!(c[(1, 1)], 0.0);
        let (vals, vecs) = sym_eigen_desc(&c, 1e-12);
        assert_eq!(vals[0], 5.0);
        assert!((vecs[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_detects_singular() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(CholeskyFactor::new(&s, 1e-12).is_none());
        let p = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let f = CholeskyFactor::new(&p, 1e-12).unwrap();
        assert!((f.log_det - 36f64.ln()).abs() < 1e-12);
        assert!((f.mahalanobis_sq(&DVector::from_vec(vec![2.0, 3.0])) - 2.0).abs() < 1e-12);
    }
}
