//! Log-log least-squares fits of power laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Minimum sample count accepted by [`fit_exponent`].
pub const MIN_SAMPLES: usize = 5;
/// Minimum `log10(max x / min x)` accepted by [`fit_exponent`].
pub const MIN_SPAN_DECADES: f64 = 0.5;

/// Slope of `log(values)` against `log(abscissa)`, requiring at least five
/// samples over half a decade.
pub fn fit_exponent(abscissa: &[f64], values: &[f64]) -> Result<PowerFit> {
    fit_power_law(abscissa, values, MIN_SAMPLES, MIN_SPAN_DECADES)
}

/// Same fit with caller-chosen acceptance limits.
pub fn fit_power_law(
    abscissa: &[f64],
    values: &[f64],
    min_samples: usize,
    min_span_decades: f64,
) -> Result<PowerFit> {
    if abscissa.len() != values.len() {
        return Err(Error::Fit(format!(
            "{} abscissae but {} values",
            abscissa.len(),
            values.len()
        )));
    }
    if abscissa.len() < min_samples.max(2) {
        return Err(Error::Fit(format!(
            "{} samples, need at least {}",
            abscissa.len(),
            min_samples.max(2)
        )));
    }
    if let Some(bad) = abscissa
        .iter()
        .chain(values)
        .find(|v| !(v.is_finite() && **v > 0.0))
    {
        return Err(Error::Fit(format!("non-positive or non-finite sample {bad}")));
    }
    let lo = abscissa.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = abscissa.iter().cloned().fold(0.0, f64::max);
    let span = (hi / lo).log10();
    if !(span >= min_span_decades) || span == 0.0 {
        return Err(Error::Fit(format!(
            "abscissa spans {span:.3} decades, need {min_span_decades}"
        )));
    }

    let x: Vec<f64> = abscissa.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    // A constant series is fitted perfectly by a flat line.
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(PowerFit {
        slope,
        intercept,
        r2,
    })
}
