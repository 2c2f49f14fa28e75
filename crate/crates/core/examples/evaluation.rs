//! Metrics, ROC curve and the report table for a trained pipeline.

use ami_screen::classifiers::{ClassifierSpec, Family};
use ami_screen::data::{generate_synthetic, stratified_split, SyntheticSpec};
use ami_screen::evaluation::{self, ConfusionMatrix, Phase};
use ami_screen::pipeline::{FittedPipeline, ScalingConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Confusion arithmetic for a 45-row test split with two errors.
    let cm = ConfusionMatrix::new(26, 17, 1, 1);
    println!("accuracy {:.4} recall {:.4} precision {:.4} f1 {:.4}", cm.accuracy(), cm.recall(), cm.precision(), cm.f1());

    let data = generate_synthetic(&SyntheticSpec::new(300, 6, 0.8, 21))?;
    let (train, test) = stratified_split(&data, 0.2, 21)?;
    let mask = data.schema().codes();
    let model = FittedPipeline::fit(&ClassifierSpec::production_default(Family::Lr, 21), &train, &mask, &ScalingConfig::default())?;

    let train_report = evaluation::evaluate(&model, train.x(), train.y(), Phase::Train)?;
    let test_report = evaluation::evaluate(&model, test.x(), test.y(), Phase::Test)?;
    print!("{}", evaluation::render_table(&[("LR".into(), &train_report), ("LR".into(), &test_report)]));

    println!("test ROC has {} points", test_report.roc_points.len());
    evaluation::write_roc_csv(std::io::stdout(), &test_report.roc_points[..4.min(test_report.roc_points.len())])?;
    Ok(())
}
