use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DataError, Dataset, DomainGroup, FeatureSpec, Schema};
use crate::rng::{child_rng, stream};
use crate::selection::DEFAULT_FEATURE_MASK;

/// Parameters of the two-cloud generator.
///
/// Each informative column draws a latent `N(±separation/2, 1)` value whose
/// sign of the mean follows the label; noise columns draw `N(0, 1)`.
/// Binary columns threshold the latent value at zero. The informative
/// columns are the last `n_informative` ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub separation: f64,
    pub seed: u64,
    pub label_balance: f64,
    pub binary: bool,
}

impl SyntheticSpec {
    pub fn new(n_rows: usize, n_features: usize, separation: f64, seed: u64) -> Self {
        SyntheticSpec {
            n_rows,
            n_features,
            n_informative: n_features,
            separation,
            seed,
            label_balance: 0.5,
            binary: true,
        }
    }

    pub fn informative_columns(&self) -> Vec<usize> {
        (self.n_features - self.n_informative.min(self.n_features)..self.n_features).collect()
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.n_rows < 2 || self.n_features < 1 {
            return Err(DataError::Invalid("synthetic data needs n_rows >= 2 and n_features >= 1".into()));
        }
        if !(self.label_balance > 0.0 && self.label_balance < 1.0) {
            return Err(DataError::Invalid("label_balance must lie in (0, 1)".into()));
        }
        if !(self.separation >= 0.0) {
            return Err(DataError::Invalid("separation must be >= 0".into()));
        }
        Ok(())
    }
}

/// Labels with exactly `round(n * balance)` positives in shuffled positions.
fn shuffled_labels(n: usize, balance: f64, rng: &mut impl Rng) -> Vec<u8> {
    let n_pos = ((n as f64) * balance).round() as usize;
    let mut y: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    y.shuffle(rng);
    y
}

fn latent(rng: &mut impl Rng, label: u8, shift: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    if label == 1 {
        z + shift / 2.0
    } else {
        z - shift / 2.0
    }
}

/// Deterministic for a fixed seed: labels are drawn first, then cells in
/// row-major order, all from one ChaCha8 stream.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset, DataError> {
    spec.validate()?;
    let mut rng = child_rng(spec.seed, stream::SYNTHETIC);
    let y = shuffled_labels(spec.n_rows, spec.label_balance, &mut rng);
    let informative = spec.informative_columns();
    let width = spec.n_features.to_string().len().max(2);
    let features = (0..spec.n_features)
        .map(|j| {
            let code = format!("f{j:0width$}");
            if spec.binary {
                FeatureSpec::yes_no(code, DomainGroup::Other)
            } else {
                FeatureSpec::numeric(code, DomainGroup::Other)
            }
        })
        .collect();
    let schema = Schema::new("synthetic", 1, features)?;
    let mut x = Array2::zeros((spec.n_rows, spec.n_features));
    for (i, &label) in y.iter().enumerate() {
        for j in 0..spec.n_features {
            let shift = if informative.contains(&j) { spec.separation } else { 0.0 };
            let z = latent(&mut rng, label, shift);
            x[[i, j]] = if spec.binary { f64::from(u8::from(z > 0.0)) } else { z };
        }
    }
    Dataset::new(schema, x, y, None)
}

/// AMI-shaped synthetic cohort: the shipped schema, 128/225 ASD prevalence,
/// ages around 47 months, label-independent gender, informative answers on
/// the 20 default-mask items and pure noise on the other eight.
pub fn synthetic_ami(n_rows: usize, separation: f64, seed: u64) -> Dataset {
    let schema = Schema::ami();
    let mut rng = child_rng(seed, stream::SYNTHETIC);
    let y = shuffled_labels(n_rows, 128.0 / 225.0, &mut rng);
    let mut x = Array2::zeros((n_rows, schema.len()));
    for (i, &label) in y.iter().enumerate() {
        let age: f64 = 47.0 + 12.0 * rng.sample::<f64, _>(StandardNormal);
        x[[i, 0]] = age.round().clamp(18.0, 108.0);
        x[[i, 1]] = f64::from(u8::from(rng.random_bool(159.0 / 225.0)));
        for (j, f) in schema.features.iter().enumerate().skip(2) {
            let shift = if DEFAULT_FEATURE_MASK.contains(&f.code.as_str()) { separation } else { 0.0 };
            x[[i, j]] = f64::from(u8::from(latent(&mut rng, label, shift) > 0.0));
        }
    }
    let ids = (1..=n_rows).map(|i| format!("S{i:04}")).collect();
    Dataset::new(schema, x, y, Some(ids)).expect("generator respects dataset invariants")
}
