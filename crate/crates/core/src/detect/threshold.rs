use serde::{Deserialize, Serialize};

use super::calibration::CalibrationCurve;
use super::isotonic::isotonic_non_increasing;
use super::DetectError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    /// Linear interpolation on an isotonic (non-increasing) fit.
    IsotonicInterpolated,
}

/// Which end the target fell off, when the fitted curve never crosses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    /// Even the cheapest calibrated bin stays below the target.
    Low,
    /// Every calibrated bin is at or above the target.
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedPoint {
    /// Bin midpoint, USD/MWh.
    pub price: f64,
    pub frequency: f64,
    pub fitted: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub target_likelihood: f64,
    pub threshold_price: f64,
    pub method: ThresholdMethod,
    pub saturation: Option<Saturation>,
    pub amount_level: f64,
    /// The monotone fit, one point per calibrated bin in ascending price.
    pub fitted: Vec<FittedPoint>,
}

/// Highest price at which the fitted curtailment likelihood still reaches
/// `target`.
///
/// The calibrated bins are fitted with a sample-weighted non-increasing
/// isotonic regression against bin midpoints. The threshold is where the fit
/// first drops from at-or-above `target` to below it, interpolated linearly
/// between the two midpoints. Curves that never cross saturate at the
/// highest (all above) or lowest (all below) midpoint.
pub fn extract_threshold(curve: &CalibrationCurve, target: f64) -> Result<ThresholdResult, DetectError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(DetectError::InvalidTarget(target));
    }
    let points: Vec<_> = curve.calibrated().collect();
    if points.len() < 2 {
        return Err(DetectError::TooFewBins { found: points.len() });
    }
    let freq: Vec<f64> = points.iter().map(|b| b.frequency.unwrap_or_default()).collect();
    let weights: Vec<f64> = points.iter().map(|b| b.sample_count as f64).collect();
    let fit = isotonic_non_increasing(&freq, &weights);
    let fitted: Vec<FittedPoint> = points
        .iter()
        .zip(&freq)
        .zip(&fit)
        .map(|((b, &f), &y)| FittedPoint {
            price: b.midpoint(),
            frequency: f,
            fitted: y,
            sample_count: b.sample_count,
        })
        .collect();

    let first = fitted[0];
    let last = fitted[fitted.len() - 1];
    let (threshold_price, saturation) = if first.fitted < target {
        (first.price, Some(Saturation::Low))
    } else if last.fitted >= target {
        (last.price, Some(Saturation::High))
    } else {
        let i = fitted
            .windows(2)
            .position(|w| w[0].fitted >= target && w[1].fitted < target)
            .expect("a non-increasing fit that starts above and ends below the target crosses it");
        let (a, b) = (fitted[i], fitted[i + 1]);
        let t = (a.fitted - target) / (a.fitted - b.fitted);
        (a.price + t * (b.price - a.price), None)
    };

    Ok(ThresholdResult {
        target_likelihood: target,
        threshold_price,
        method: ThresholdMethod::IsotonicInterpolated,
        saturation,
        amount_level: curve.amount_level,
        fitted,
    })
}
