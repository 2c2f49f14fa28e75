//! Writes an AMI-shaped synthetic cohort as CSV.
//!
//! ```text
//! cargo run --example synthetic_cohort -- cohort.csv [rows] [separation] [seed]
//! ```
//!
//! The file uses the same header and answer vocabulary as a real export, so
//! it can be fed straight into `ami-screen select/train/evaluate`.

use std::fs::File;
use std::io::BufWriter;

use ami_screen::data::{self, synthetic_ami};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().map(String::as_str).unwrap_or("cohort.csv");
    let rows: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(225);
    let separation: f64 = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(1.5);
    let seed: u64 = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(42);

    let cohort = synthetic_ami(rows, separation, seed);
    data::write_csv(BufWriter::new(File::create(path)?), &cohort)?;
    let [td, asd] = cohort.class_counts();
    println!("wrote {path}: {rows} rows ({asd} ASD, {td} TD), {} predictors", cohort.n_features());

    // Reading it back goes through the same validation as real data.
    let back = data::load_csv(path.as_ref(), cohort.schema())?;
    assert_eq!(back.y(), cohort.y());
    Ok(())
}
