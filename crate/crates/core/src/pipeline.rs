//! Scaling plus classifier, fitted together on the rows of a feature mask.
//!
//! Columns are first z-scored, then min-max scaled, with both parameter
//! sets estimated on the training rows only. [`StandardizeScope`] controls
//! whether the z-score step touches every column or only numeric ones
//! (binary items then pass through it unchanged).

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{self, ClassifierSpec, ModelError, TrainedClassifier};
use crate::data::{DataError, Dataset, FeatureKind};
use crate::preprocessing::{self, MinMaxParams, PreprocessError, StandardizerParams};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{kinds} column kinds given for {columns} columns")]
    KindCount { kinds: usize, columns: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeScope {
    #[default]
    AllColumns,
    NumericOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub standardize: StandardizeScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedScaler {
    pub standardizer: StandardizerParams,
    pub minmax: MinMaxParams,
}

impl FittedScaler {
    pub fn fit(x: ArrayView2<f64>, kinds: &[FeatureKind], config: &ScalingConfig) -> Result<Self, PipelineError> {
        if kinds.len() != x.ncols() {
            return Err(PipelineError::KindCount { kinds: kinds.len(), columns: x.ncols() });
        }
        let mut standardizer = preprocessing::fit_standardizer(x)?;
        if config.standardize == StandardizeScope::NumericOnly {
            for (j, kind) in kinds.iter().enumerate() {
                if *kind != FeatureKind::Numeric {
                    standardizer.mean[j] = 0.0;
                    standardizer.std[j] = 1.0;
                }
            }
        }
        let z = preprocessing::transform_standardize(x, &standardizer)?;
        let minmax = preprocessing::fit_minmax(z.view())?;
        Ok(FittedScaler { standardizer, minmax })
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, PipelineError> {
        let z = preprocessing::transform_standardize(x, &self.standardizer)?;
        Ok(preprocessing::transform_minmax(z.view(), &self.minmax)?)
    }

    pub fn n_features(&self) -> usize {
        self.standardizer.len()
    }
}

/// A classifier together with the scaler and feature mask it was trained
/// behind. Inputs to [`FittedPipeline::positive_proba`] are raw encodings
/// laid out in mask order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub mask: Vec<String>,
    pub scaler: FittedScaler,
    pub classifier: TrainedClassifier,
}

impl FittedPipeline {
    /// Fits on raw encodings whose columns already follow `mask`.
    pub fn fit_matrix(
        spec: &ClassifierSpec,
        mask: Vec<String>,
        x: ArrayView2<f64>,
        kinds: &[FeatureKind],
        y: &[u8],
        scaling: &ScalingConfig,
    ) -> Result<Self, PipelineError> {
        let scaler = FittedScaler::fit(x, kinds, scaling)?;
        let scaled = scaler.transform(x)?;
        let classifier = classifiers::fit(spec, scaled.view(), y)?;
        Ok(FittedPipeline { mask, scaler, classifier })
    }

    /// Restricts `data` to `mask` and fits.
    pub fn fit(spec: &ClassifierSpec, data: &Dataset, mask: &[String], scaling: &ScalingConfig) -> Result<Self, PipelineError> {
        let masked = data.select_features(mask)?;
        Self::fit_matrix(spec, mask.to_vec(), masked.x(), &masked.schema().kinds(), masked.y(), scaling)
    }

    pub fn positive_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>, PipelineError> {
        if x.nrows() == 0 {
            return Ok(Vec::new());
        }
        let scaled = self.scaler.transform(x)?;
        Ok(self.classifier.positive_proba(scaled.view())?)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<u8>, PipelineError> {
        Ok(self.positive_proba(x)?.into_iter().map(classifiers::label_from_proba).collect())
    }

    /// Picks the mask columns out of a full dataset, then predicts.
    pub fn positive_proba_dataset(&self, data: &Dataset) -> Result<Vec<f64>, PipelineError> {
        let masked = data.select_features(&self.mask)?;
        self.positive_proba(masked.x())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Family;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use ndarray::array;

    #[test]
    fn numeric_only_scope_leaves_binary_columns_to_minmax() {
        let x = array![[10.0, 0.0], [20.0, 1.0], [30.0, 1.0]];
        let kinds = [FeatureKind::Numeric, FeatureKind::Binary];
        let all = FittedScaler::fit(x.view(), &kinds, &ScalingConfig::default()).unwrap();
        let numeric = FittedScaler::fit(x.view(), &kinds, &ScalingConfig { standardize: StandardizeScope::NumericOnly }).unwrap();
        assert_eq!(numeric.standardizer.mean[1], 0.0);
        assert_eq!(numeric.standardizer.std[1], 1.0);
        assert_ne!(all.standardizer.mean[1], 0.0);
        // Both scopes end on the same [0, 1] encoding.
        let (a, b) = (all.transform(x.view()).unwrap(), numeric.transform(x.view()).unwrap());
        for (p, q) in a.iter().zip(b.iter()) {
            assert!((p - q).abs() < 1e-12);
        }
        assert_eq!(a.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn pipeline_predicts_from_a_full_dataset() {
        let d = generate_synthetic(&SyntheticSpec::new(80, 6, 3.0, 3)).unwrap();
        let mask: Vec<String> = d.schema().codes()[..3].to_vec();
        let spec = ClassifierSpec::defaults(Family::Lda, 0);
        let model = FittedPipeline::fit(&spec, &d, &mask, &ScalingConfig::default()).unwrap();
        let full = model.positive_proba_dataset(&d).unwrap();
        let masked = d.select_features(&mask).unwrap();
        assert_eq!(full, model.positive_proba(masked.x()).unwrap());
        assert!(model.positive_proba(Array2::zeros((0, 3)).view()).unwrap().is_empty());
        assert!(model.positive_proba(Array2::zeros((1, 4)).view()).is_err());
    }
}
