//! K sweep with the three selectors and their unanimous vote on an
//! AMI-shaped synthetic cohort.

use std::collections::BTreeSet;

use ami_screen::data::synthetic_ami;
use ami_screen::pipeline::{FittedScaler, ScalingConfig};
use ami_screen::selection::{self, majority_vote, SelectionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synthetic_ami(225, 1.5, 42);
    let schema = data.schema();
    let scaler = FittedScaler::fit(data.x(), &schema.kinds(), &ScalingConfig::default())?;
    let scaled = scaler.transform(data.x())?;

    let report = selection::sweep_k(data.x(), scaled.view(), data.y(), schema, &SelectionConfig::default())?;
    for (k, sel) in &report.per_k {
        println!("K={k:<2} voted {:>2}: {}", sel.voted.len(), sel.voted.join(" "));
    }

    // A 2-of-3 vote is looser than unanimity.
    let k25 = &report.per_k[&25];
    let sets: Vec<BTreeSet<usize>> = [&k25.chs, &k25.rfe, &k25.pca].iter().map(|fs| fs.iter().map(|f| f.index).collect()).collect();
    let two_of_three = majority_vote(&sets, 2)?;
    println!("K=25 with 2 of 3 votes: {} features", two_of_three.selected.len());

    let top_chi2: Vec<String> = k25.chs.iter().take(5).map(|f| format!("{} ({:.2})", f.feature, f.score)).collect();
    println!("top chi-squared scores: {}", top_chi2.join(", "));
    Ok(())
}
