use crate::error::{Error, Result};

/// Fraction of positions where two label vectors agree.
pub fn accuracy(estimated: &[i8], truth: &[i8]) -> Result<f64> {
    if estimated.len() != truth.len() {
        return Err(Error::shape(format!(
            "accuracy: {} estimated labels vs {} truth labels",
            estimated.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::shape("accuracy of empty label vectors"));
    }
    let hits = estimated.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Sample mean and (n - 1) standard deviation. `sd` is 0 for fewer than two values.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
