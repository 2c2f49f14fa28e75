use rand::seq::SliceRandom;

use super::{DataError, Dataset};
use crate::rng::{child_rng, stream};

/// Stratified train/test split.
///
/// Each class contributes `round(n_c * test_fraction)` rows to the test part,
/// clamped so both parts keep at least one row of every class. Both parts
/// keep the original row order.
pub fn stratified_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::Invalid(format!("test_fraction {test_fraction} must lie in (0, 1)")));
    }
    let mut rng = child_rng(seed, stream::SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..d.n_rows()).filter(|&i| d.y()[i] == class).collect();
        if rows.len() < 2 {
            return Err(DataError::Stratification { class, count: rows.len(), needed: 2 });
        }
        rows.shuffle(&mut rng);
        let n_test = ((rows.len() as f64) * test_fraction).round() as usize;
        let n_test = n_test.clamp(1, rows.len() - 1);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((d.select_rows(&train), d.select_rows(&test)))
}
