//! Fit every classifier family on the same split and compare test accuracy.

use ami_screen::classifiers::{fit, ClassifierSpec, Family};
use ami_screen::data::{generate_synthetic, stratified_split, SyntheticSpec};
use ami_screen::evaluation::confusion;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticSpec { binary: false, ..SyntheticSpec::new(200, 6, 1.5, 3) };
    let data = generate_synthetic(&spec)?;
    let (train, test) = stratified_split(&data, 0.2, 3)?;

    println!("{:<5} {:<50} {:>8}", "code", "hyperparameters", "test acc");
    for family in Family::ALL {
        let spec = ClassifierSpec::production_default(family, 3);
        let model = fit(&spec, train.x(), train.y())?;
        let cm = confusion(test.y(), &model.predict(test.x())?)?;
        let params = spec.describe();
        let params = if params.len() > 50 { format!("{}...", &params[..47]) } else { params };
        println!("{:<5} {:<50} {:>8.3}", family.code(), params, cm.accuracy());
    }

    // Hyperparameters are checked against each family's vocabulary.
    let bad = ClassifierSpec::defaults(Family::Knn, 0).with_param("depth", 3i64);
    println!("invalid spec: {}", bad.validate().unwrap_err());
    Ok(())
}
