//! Convergence records and log-log rate fits.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One row of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub value: f64,
    pub reference: f64,
    pub abs_error: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theoretical_bound: Option<f64>,
}

impl ConvergenceRecord {
    pub fn new(n: usize, value: f64, reference: f64, theoretical_bound: Option<f64>) -> Self {
        Self {
            n,
            value,
            reference,
            abs_error: (value - reference).abs(),
            theoretical_bound,
        }
    }
}

/// Least-squares line `log(err) ≈ slope·log(2N+1) + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub points: usize,
}

/// Errors at or below this are treated as exact convergence.
pub const ERROR_FLOOR: f64 = 1e-300;

pub fn fit_rate(records: &[ConvergenceRecord]) -> Result<RateFit> {
    if records.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "rate fit needs at least 3 records, got {}",
            records.len()
        )));
    }
    if let Some(r) = records
        .iter()
        .find(|r| !(r.abs_error > ERROR_FLOOR) || !r.abs_error.is_finite())
    {
        return Err(Error::DegenerateFit(format!(
            "error {} at N = {} is not positive and finite (slope reported as -inf)",
            r.abs_error, r.n
        )));
    }
    let xs: Vec<f64> = records
        .iter()
        .map(|r| ((2 * r.n + 1) as f64).ln())
        .collect();
    let ys: Vec<f64> = records.iter().map(|r| r.abs_error.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all records share the same N".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        slope,
        intercept,
        max_residual,
        points: records.len(),
    })
}
