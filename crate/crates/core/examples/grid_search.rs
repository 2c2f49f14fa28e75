//! Stratified 5-fold grid search over the shipped SVM and KNN grids,
//! then a refit on the whole training part.

use ami_screen::classifiers::Family;
use ami_screen::data::{generate_synthetic, SyntheticSpec};
use ami_screen::model_selection::{fold_class_counts, grid_search, make_folds, Metric, ParamGrid};
use ami_screen::pipeline::ScalingConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic(&SyntheticSpec::new(180, 8, 1.2, 9))?;
    let plan = make_folds(data.y(), 5, 9)?;
    println!("fold class counts [TD, ASD]: {:?}", fold_class_counts(&plan, data.y()));

    for family in [Family::Svm, Family::Knn] {
        let grid = ParamGrid::preset(family);
        let (result, model) = grid_search(&grid, &data, &plan, Metric::Accuracy, &ScalingConfig::default(), 9)?;
        println!("{family}: {} candidates, best #{} {} = {:.4}", grid.size(), result.best_index, result.best_spec.describe(), result.best_mean_score);
        let worst = result.candidates.iter().map(|c| c.mean_score).fold(f64::INFINITY, f64::min);
        println!("  worst candidate mean {worst:.4}, refit on {} features", model.mask.len());
    }
    Ok(())
}
