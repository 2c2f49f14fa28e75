//! Dataset schema, ingestion, encoding, synthetic generation and splitting.
//!
//! Labels are coded ASD = 1 and TD = 0; `Gender` is coded male = 1 and
//! female = 0. Rows with any missing cell are rejected at ingestion.

mod ingest;
mod schema;
mod split;
mod synthetic;

pub use ingest::{decode_responses, encode_responses, load_csv, read_csv, write_csv, DROPPED_COLUMNS, ID_COLUMN, TARGET_COLUMN};
pub use schema::{AnswerOption, DomainGroup, FeatureKind, FeatureSpec, Schema};
pub use split::stratified_split;
pub use synthetic::{generate_synthetic, synthetic_ami, SyntheticSpec};

use ndarray::{Array2, ArrayView2, Axis};
use thiserror::Error;

pub const ASD: u8 = 1;
pub const TD: u8 = 0;

pub fn label_name(label: u8) -> &'static str {
    if label == ASD {
        "ASD"
    } else {
        "TD"
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("missing target column `{0}`")]
    MissingTarget(String),
    #[error("unknown columns not in schema: {0:?}")]
    UnknownColumns(Vec<String>),
    #[error("schema columns missing from file: {0:?}")]
    MissingColumns(Vec<String>),
    #[error("row {row}: missing value in column `{column}`")]
    MissingCell { row: usize, column: String },
    #[error("row {row}, column `{column}`: {message}")]
    Parse { row: usize, column: String, message: String },
    #[error("row {row}: unrecognised diagnosis `{value}` (expected ASD or TD)")]
    BadLabel { row: usize, value: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("cannot stratify: class {class} has {count} row(s), need at least {needed}")]
    Stratification { class: u8, count: usize, needed: usize },
}

/// Feature matrix, labels and schema. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    x: Array2<f64>,
    y: Vec<u8>,
    ids: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(schema: Schema, x: Array2<f64>, y: Vec<u8>, ids: Option<Vec<String>>) -> Result<Self, DataError> {
        if x.nrows() != y.len() {
            return Err(DataError::Invalid(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        if x.ncols() != schema.len() {
            return Err(DataError::Invalid(format!("{} columns but schema has {}", x.ncols(), schema.len())));
        }
        if let Some(bad) = y.iter().find(|&&l| l > 1) {
            return Err(DataError::Invalid(format!("label {bad} is not 0 or 1")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite feature value".into()));
        }
        if let Some(ids) = &ids {
            if ids.len() != y.len() {
                return Err(DataError::Invalid(format!("{} ids for {} rows", ids.len(), y.len())));
            }
        }
        Ok(Dataset { schema, x, y, ids })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    /// `[TD count, ASD count]`
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.y.iter().filter(|&&l| l == ASD).count();
        [self.y.len() - pos, pos]
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            x: self.x.select(Axis(0), rows),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            ids: self.ids.as_ref().map(|ids| rows.iter().map(|&r| ids[r].clone()).collect()),
        }
    }

    /// Restricts to `codes`, keeping schema order.
    pub fn select_features(&self, codes: &[String]) -> Result<Dataset, DataError> {
        let schema = self.schema.subset(codes)?;
        let cols: Vec<usize> = schema.features.iter().map(|f| self.schema.index_of(&f.code).unwrap()).collect();
        Ok(Dataset {
            schema,
            x: self.x.select(Axis(1), &cols),
            y: self.y.clone(),
            ids: self.ids.clone(),
        })
    }

    pub fn into_parts(self) -> (Schema, Array2<f64>, Vec<u8>, Option<Vec<String>>) {
        (self.schema, self.x, self.y, self.ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny() -> Dataset {
        let schema = Schema::new(
            "t",
            1,
            vec![FeatureSpec::yes_no("a", DomainGroup::Other), FeatureSpec::numeric("b", DomainGroup::Other)],
        )
        .unwrap();
        Dataset::new(schema, array![[1.0, 2.0], [0.0, 3.0], [1.0, 4.0]], vec![1, 0, 1], None).unwrap()
    }

    #[test]
    fn invariants_enforced() {
        let d = tiny();
        assert!(Dataset::new(d.schema().clone(), d.x().to_owned(), vec![1, 0], None).is_err());
        assert!(Dataset::new(d.schema().clone(), d.x().to_owned(), vec![1, 0, 2], None).is_err());
        assert_eq!(d.class_counts(), [1, 2]);
    }

    #[test]
    fn row_and_feature_selection() {
        let d = tiny();
        let r = d.select_rows(&[2, 0]);
        assert_eq!(r.y(), &[1, 1]);
        assert_eq!(r.x()[[0, 1]], 4.0);
        let f = d.select_features(&["b".to_string()]).unwrap();
        assert_eq!(f.n_features(), 1);
        assert_eq!(f.x()[[1, 0]], 3.0);
        assert!(d.select_features(&["zzz".to_string()]).is_err());
    }
}
