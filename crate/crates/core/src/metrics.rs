//! Error metrics over experiment replications.

use crate::error::{Error, Result};

fn check(est: &[f64], truth: &[f64]) -> Result<()> {
    if est.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} estimates vs {} true values",
            est.len(),
            truth.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::InvalidArgument("no values".into()));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(est: &[f64], truth: &[f64]) -> Result<f64> {
    check(est, truth)?;
    Ok(est.iter().zip(truth).map(|(e, t)| (e - t).abs()).sum::<f64>() / est.len() as f64)
}

/// Symmetric mean absolute percentage error in `[0, 100]`. A term where both
/// values are zero counts as 0.
pub fn smape(est: &[f64], truth: &[f64]) -> Result<f64> {
    check(est, truth)?;
    let total: f64 = est
        .iter()
        .zip(truth)
        .map(|(e, t)| {
            let denom = e.abs() + t.abs();
            if denom == 0.0 {
                0.0
            } else {
                (e - t).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * total / est.len() as f64)
}

/// Sample standard deviation (`n - 1` denominator); 0 for a single value.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

/// Error summary of one parameter under one method.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary {
    pub mae: f64,
    pub smape: f64,
    /// Standard deviation of the absolute errors.
    pub std: f64,
    pub l_count: usize,
}

pub fn summarize(est: &[f64], truth: &[f64]) -> Result<ErrorSummary> {
    let abs: Vec<f64> = est.iter().zip(truth).map(|(e, t)| (e - t).abs()).collect();
    Ok(ErrorSummary {
        mae: mae(est, truth)?,
        smape: smape(est, truth)?,
        std: std_dev(&abs),
        l_count: est.len(),
    })
}
