//! Standardize then min-max scale a small matrix, and apply the fitted
//! parameters to unseen rows.

use ami_screen::preprocessing::{fit_minmax, fit_standardizer, transform_minmax, transform_standardize};
use ndarray::array;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train = array![[30.0, 1.0, 0.0], [42.0, 0.0, 1.0], [55.0, 1.0, 1.0], [61.0, 0.0, 0.0]];
    let std_params = fit_standardizer(train.view())?;
    println!("means {:?}", std_params.mean);
    println!("stds  {:?}", std_params.std);

    let z = transform_standardize(train.view(), &std_params)?;
    let mm_params = fit_minmax(z.view())?;
    let scaled = transform_minmax(z.view(), &mm_params)?;
    println!("scaled training rows:\n{scaled:.3}");

    // New rows reuse the training parameters and may fall outside [0, 1].
    let unseen = array![[72.0, 1.0, 0.0]];
    let out = transform_minmax(transform_standardize(unseen.view(), &std_params)?.view(), &mm_params)?;
    println!("unseen row: {out:.3}");
    Ok(())
}
