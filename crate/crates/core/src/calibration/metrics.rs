use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("prediction and truth lengths differ ({pred} vs {truth})")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("truth is constant; R² is undefined")]
    ConstantTruth,
}

fn check<T>(pred: &[T], truth: &[T], needed: usize) -> Result<(), MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.len() < needed {
        return Err(MetricError::TooFew {
            needed,
            got: pred.len(),
        });
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse<T: Real>(pred: &[T], truth: &[T]) -> Result<T, MetricError> {
    check(pred, truth, 1)?;
    let sum = pred
        .iter()
        .zip(truth)
        .fold(T::zero(), |acc, (&p, &t)| acc + (p - t) * (p - t));
    Ok((sum / T::lit(pred.len() as f64)).sqrt())
}

/// Coefficient of determination, `1 − SS_res / SS_tot`.
pub fn r_squared<T: Real>(pred: &[T], truth: &[T]) -> Result<T, MetricError> {
    check(pred, truth, 2)?;
    let n = T::lit(truth.len() as f64);
    let mean = truth.iter().fold(T::zero(), |a, &t| a + t) / n;
    let ss_tot = truth.iter().fold(T::zero(), |a, &t| a + (t - mean) * (t - mean));
    if ss_tot == T::zero() {
        return Err(MetricError::ConstantTruth);
    }
    let ss_res = pred
        .iter()
        .zip(truth)
        .fold(T::zero(), |a, (&p, &t)| a + (p - t) * (p - t));
    Ok(T::one() - ss_res / ss_tot)
}

pub fn max_abs_error<T: Real>(pred: &[T], truth: &[T]) -> Result<T, MetricError> {
    check(pred, truth, 1)?;
    Ok(pred
        .iter()
        .zip(truth)
        .fold(T::zero(), |m, (&p, &t)| m.max((p - t).abs())))
}
