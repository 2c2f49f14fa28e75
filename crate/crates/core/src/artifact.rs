//! Versioned model file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "AMISCRN1"  magic, 8 bytes
//! u32         format version
//! sections, each: [u8; 4] tag, u64 payload length, payload
//!   HEAD  JSON header: schema identity, classifier spec, training metadata
//!   SCAL  bincode: standardizer and min-max parameters
//!   MASK  JSON array of feature codes, in model column order
//!   MODL  bincode: learned classifier parameters
//! ```
//!
//! Sections may appear in any order; unknown tags are skipped so later
//! versions can add sections without breaking older readers. Serialization
//! is deterministic: equal models give byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{ClassifierSpec, Model, TrainedClassifier};
use crate::data::Schema;
use crate::model_selection::Metric;
use crate::pipeline::{FittedPipeline, FittedScaler, ScalingConfig};

pub const MAGIC: &[u8; 8] = b"AMISCRN1";
pub const FORMAT_VERSION: u32 = 1;

const HEAD: [u8; 4] = *b"HEAD";
const SCAL: [u8; 4] = *b"SCAL";
const MASK: [u8; 4] = *b"MASK";
const MODL: [u8; 4] = *b"MODL";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("not a model artifact (bad magic bytes)")]
    BadMagic,
    #[error("artifact format version {found} is not supported (this build reads {supported})")]
    Version { found: u32, supported: u32 },
    #[error("artifact is truncated")]
    Truncated,
    #[error("artifact has no {0} section")]
    MissingSection(String),
    #[error("artifact {section} section is corrupt: {detail}")]
    Corrupt { section: String, detail: String },
    #[error("schema hash mismatch: artifact expects {expected}, data has {actual}")]
    SchemaMismatch { expected: String, actual: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// How the model was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    /// Held-out share of the stratified split; 0 when trained on every row.
    pub test_fraction: f64,
    pub n_train_rows: usize,
    pub scaling: ScalingConfig,
    /// Name of the tuning grid, `None` when trained without search.
    pub grid_preset: Option<String>,
    pub cv_metric: Option<Metric>,
    pub cv_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub format_version: u32,
    pub schema_name: String,
    pub schema_version: u32,
    pub schema_hash: String,
    pub spec: ClassifierSpec,
    pub n_features: usize,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub header: ArtifactHeader,
    pub pipeline: FittedPipeline,
}

fn corrupt(section: [u8; 4], detail: impl ToString) -> ArtifactError {
    ArtifactError::Corrupt { section: String::from_utf8_lossy(&section).into_owned(), detail: detail.to_string() }
}

fn push_section(out: &mut Vec<u8>, tag: [u8; 4], payload: &[u8]) {
    out.extend_from_slice(&tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
}

impl ModelArtifact {
    /// Bundles a fitted pipeline with the schema of the data it was trained on.
    pub fn new(pipeline: FittedPipeline, schema: &Schema, metadata: TrainingMetadata) -> Self {
        let header = ArtifactHeader {
            format_version: FORMAT_VERSION,
            schema_name: schema.name.clone(),
            schema_version: schema.version,
            schema_hash: schema.content_hash(),
            spec: pipeline.classifier.spec.clone(),
            n_features: pipeline.classifier.n_features,
            metadata,
        };
        ModelArtifact { header, pipeline }
    }

    pub fn mask(&self) -> &[String] {
        &self.pipeline.mask
    }

    /// Fails unless `schema` is the one the model was trained against.
    pub fn check_schema(&self, schema: &Schema) -> Result<(), ArtifactError> {
        let actual = schema.content_hash();
        if actual == self.header.schema_hash {
            Ok(())
        } else {
            Err(ArtifactError::SchemaMismatch { expected: self.header.schema_hash.clone(), actual })
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        push_section(&mut out, HEAD, &serde_json::to_vec(&self.header).expect("header serializes"));
        push_section(&mut out, SCAL, &bincode::serialize(&self.pipeline.scaler).expect("scaler serializes"));
        push_section(&mut out, MASK, &serde_json::to_vec(&self.pipeline.mask).expect("mask serializes"));
        push_section(&mut out, MODL, &bincode::serialize(&self.pipeline.classifier.model).expect("model serializes"));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ArtifactError> {
        if bytes.len() < 12 {
            return Err(if bytes.starts_with(&MAGIC[..bytes.len().min(8)]) { ArtifactError::Truncated } else { ArtifactError::BadMagic });
        }
        if &bytes[..8] != MAGIC {
            return Err(ArtifactError::BadMagic);
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(ArtifactError::Version { found: version, supported: FORMAT_VERSION });
        }
        let (mut head, mut scal, mut mask, mut modl) = (None, None, None, None);
        let mut pos = 12;
        while pos < bytes.len() {
            if bytes.len() - pos < 12 {
                return Err(ArtifactError::Truncated);
            }
            let tag: [u8; 4] = bytes[pos..pos + 4].try_into().expect("4 bytes");
            let len = u64::from_le_bytes(bytes[pos + 4..pos + 12].try_into().expect("8 bytes"));
            let start = pos + 12;
            let end = usize::try_from(len).ok().and_then(|l| start.checked_add(l)).filter(|&e| e <= bytes.len()).ok_or(ArtifactError::Truncated)?;
            let payload = &bytes[start..end];
            match tag {
                HEAD => head = Some(payload),
                SCAL => scal = Some(payload),
                MASK => mask = Some(payload),
                MODL => modl = Some(payload),
                _ => {}
            }
            pos = end;
        }
        fn need(s: Option<&[u8]>, tag: [u8; 4]) -> Result<&[u8], ArtifactError> {
            s.ok_or_else(|| ArtifactError::MissingSection(String::from_utf8_lossy(&tag).into_owned()))
        }
        let header: ArtifactHeader = serde_json::from_slice(need(head, HEAD)?).map_err(|e| corrupt(HEAD, e))?;
        let scaler: FittedScaler = bincode::deserialize(need(scal, SCAL)?).map_err(|e| corrupt(SCAL, e))?;
        let mask: Vec<String> = serde_json::from_slice(need(mask, MASK)?).map_err(|e| corrupt(MASK, e))?;
        let model: Model = bincode::deserialize(need(modl, MODL)?).map_err(|e| corrupt(MODL, e))?;
        if mask.len() != header.n_features || scaler.n_features() != header.n_features {
            return Err(corrupt(MASK, format!("{} mask codes and {} scaler columns for a {}-feature model", mask.len(), scaler.n_features(), header.n_features)));
        }
        let classifier = TrainedClassifier { spec: header.spec.clone(), n_features: header.n_features, model };
        Ok(ModelArtifact { header, pipeline: FittedPipeline { mask, scaler, classifier } })
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        fs::write(path, self.to_bytes()).map_err(|source| ArtifactError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        let bytes = fs::read(path).map_err(|source| ArtifactError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Family;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use ndarray::Array2;
    use rand::Rng;

    fn artifact(family: Family) -> (ModelArtifact, crate::data::Dataset) {
        let d = generate_synthetic(&SyntheticSpec::new(80, 5, 2.0, 11)).unwrap();
        let mask = d.schema().codes()[1..4].to_vec();
        let spec = ClassifierSpec::production_default(family, 3);
        let pipeline = FittedPipeline::fit(&spec, &d, &mask, &ScalingConfig::default()).unwrap();
        let meta = TrainingMetadata {
            seed: 3,
            test_fraction: 0.0,
            n_train_rows: d.n_rows(),
            scaling: ScalingConfig::default(),
            grid_preset: None,
            cv_metric: None,
            cv_score: None,
        };
        (ModelArtifact::new(pipeline, d.schema(), meta), d)
    }

    #[test]
    fn round_trip_preserves_predictions_for_every_family() {
        let mut r = crate::rng::rng_from(5);
        let probe = Array2::from_shape_fn((200, 3), |_| r.random::<f64>() * 4.0 - 2.0);
        for family in Family::ALL {
            let (a, _) = artifact(family);
            let bytes = a.to_bytes();
            let back = ModelArtifact::from_bytes(&bytes).unwrap();
            assert_eq!(back, a, "{family}");
            let p: Vec<u64> = a.pipeline.positive_proba(probe.view()).unwrap().iter().map(|v| v.to_bits()).collect();
            let q: Vec<u64> = back.pipeline.positive_proba(probe.view()).unwrap().iter().map(|v| v.to_bits()).collect();
            assert_eq!(p, q, "{family}");
            assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn rejects_damaged_files() {
        let (a, d) = artifact(Family::Lda);
        let bytes = a.to_bytes();
        assert!(matches!(ModelArtifact::from_bytes(b"NOTAMODEL..."), Err(ArtifactError::BadMagic)));
        assert!(matches!(ModelArtifact::from_bytes(&bytes[..bytes.len() - 3]), Err(ArtifactError::Truncated)));
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(ModelArtifact::from_bytes(&v2), Err(ArtifactError::Version { found: 2, .. })));
        a.check_schema(d.schema()).unwrap();
        assert!(matches!(a.check_schema(&Schema::ami()), Err(ArtifactError::SchemaMismatch { .. })));
    }

    #[test]
    fn unknown_sections_are_skipped() {
        let (a, _) = artifact(Family::Gnb);
        let mut bytes = a.to_bytes();
        push_section(&mut bytes, *b"XTRA", b"future");
        assert_eq!(ModelArtifact::from_bytes(&bytes).unwrap(), a);
    }

    #[test]
    fn file_round_trip() {
        let (a, _) = artifact(Family::Svm);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.amiscrn");
        a.save(&path).unwrap();
        assert_eq!(ModelArtifact::load(&path).unwrap(), a);
        assert_eq!(&std::fs::read(&path).unwrap()[..8], MAGIC);
    }
}
