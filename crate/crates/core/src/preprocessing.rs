//! Z-score standardization and min-max scaling.
//!
//! Both transforms are fitted per column. The standard deviation uses the
//! population divisor N. Constant columns map to 0 under either transform.
//! Values outside the fitted range are not clipped, so min-max outputs on
//! unseen rows may leave [0, 1].

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("cannot fit a scaler on an empty matrix")]
    Empty,
    #[error("expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl StandardizerParams {
    /// Parameters that leave every column unchanged.
    pub fn identity(n: usize) -> Self {
        StandardizerParams { mean: vec![0.0; n], std: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

impl MinMaxParams {
    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }
}

pub fn fit_standardizer(x: ArrayView2<f64>) -> Result<StandardizerParams, PreprocessError> {
    if x.nrows() == 0 {
        return Err(PreprocessError::Empty);
    }
    let n = x.nrows() as f64;
    let (mean, std) = x
        .axis_iter(Axis(1))
        .map(|col| {
            let mu = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            (mu, var.sqrt())
        })
        .unzip();
    Ok(StandardizerParams { mean, std })
}

pub fn transform_standardize(x: ArrayView2<f64>, p: &StandardizerParams) -> Result<Array2<f64>, PreprocessError> {
    check_width(x, p.len())?;
    let mut out = x.to_owned();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let (mu, sd) = (p.mean[j], p.std[j]);
        col.mapv_inplace(|v| if sd > 0.0 { (v - mu) / sd } else { 0.0 });
    }
    Ok(out)
}

pub fn fit_minmax(x: ArrayView2<f64>) -> Result<MinMaxParams, PreprocessError> {
    if x.nrows() == 0 {
        return Err(PreprocessError::Empty);
    }
    let (min, max) = x
        .axis_iter(Axis(1))
        .map(|col| col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
        .unzip();
    Ok(MinMaxParams { min, max })
}

pub fn transform_minmax(x: ArrayView2<f64>, p: &MinMaxParams) -> Result<Array2<f64>, PreprocessError> {
    check_width(x, p.len())?;
    let mut out = x.to_owned();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let (lo, hi) = (p.min[j], p.max[j]);
        let range = hi - lo;
        col.mapv_inplace(|v| if range > 0.0 { (v - lo) / range } else { 0.0 });
    }
    Ok(out)
}

fn check_width(x: ArrayView2<f64>, expected: usize) -> Result<(), PreprocessError> {
    if x.ncols() != expected {
        return Err(PreprocessError::DimensionMismatch { expected, found: x.ncols() });
    }
    Ok(())
}
