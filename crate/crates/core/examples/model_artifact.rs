//! Save a fitted pipeline as a versioned artifact, load it back and check
//! that predictions are unchanged.

use ami_screen::artifact::{ModelArtifact, TrainingMetadata};
use ami_screen::classifiers::{ClassifierSpec, Family};
use ami_screen::data::synthetic_ami;
use ami_screen::pipeline::{FittedPipeline, ScalingConfig};
use ami_screen::selection::DEFAULT_FEATURE_MASK;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synthetic_ami(225, 1.5, 42);
    let mask: Vec<String> = DEFAULT_FEATURE_MASK.iter().map(|s| s.to_string()).collect();
    let spec = ClassifierSpec::production_default(Family::Rf, 42);
    let pipeline = FittedPipeline::fit(&spec, &data, &mask, &ScalingConfig::default())?;
    let metadata = TrainingMetadata {
        seed: 42,
        test_fraction: 0.0,
        n_train_rows: data.n_rows(),
        scaling: ScalingConfig::default(),
        grid_preset: None,
        cv_metric: None,
        cv_score: None,
    };
    let artifact = ModelArtifact::new(pipeline, data.schema(), metadata);

    let dir = std::env::temp_dir().join("ami-screen-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.amiscrn");
    artifact.save(&path)?;
    println!("wrote {} ({} bytes), schema hash {}", path.display(), std::fs::metadata(&path)?.len(), artifact.header.schema_hash);

    let loaded = ModelArtifact::load(&path)?;
    loaded.check_schema(data.schema())?;
    let before = artifact.pipeline.positive_proba_dataset(&data)?;
    let after = loaded.pipeline.positive_proba_dataset(&data)?;
    assert!(before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits()));
    println!("{} predictions identical after reload; first p(ASD) = {:.4}", after.len(), after[0]);
    Ok(())
}
