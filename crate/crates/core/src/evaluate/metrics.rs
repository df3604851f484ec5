use serde::{Deserialize, Serialize};

use crate::detect::same_axis;
use crate::timeseries::{Series, Unit};

use super::EvaluateError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    /// Pairs where both sides are present.
    pub n: usize,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Ratios are `None` where their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub confusion: Confusion,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn comparable(forecast: Unit, actual: Unit) -> bool {
    forecast == actual || matches!((forecast, actual), (Unit::Fraction, Unit::Boolean01))
}

fn pairs<'a>(forecast: &'a Series, actual: &'a Series) -> Result<impl Iterator<Item = (f64, f64)> + 'a, EvaluateError> {
    if !same_axis(forecast, actual) {
        return Err(EvaluateError::GridMismatch);
    }
    Ok(forecast
        .values()
        .iter()
        .zip(actual.values())
        .filter_map(|(f, a)| Some(((*f)?, (*a)?))))
}

/// MAE and RMSE over steps where both series are present. A fractional
/// forecast may be scored against a boolean actual.
pub fn regression_metrics(forecast: &Series, actual: &Series) -> Result<RegressionMetrics, EvaluateError> {
    if !comparable(forecast.unit(), actual.unit()) {
        return Err(EvaluateError::UnitMismatch {
            forecast: forecast.unit(),
            actual: actual.unit(),
        });
    }
    let (mut n, mut abs, mut sq) = (0usize, 0.0, 0.0);
    for (f, a) in pairs(forecast, actual)? {
        let e = f - a;
        n += 1;
        abs += e.abs();
        sq += e * e;
    }
    if n == 0 {
        return Err(EvaluateError::NoOverlap);
    }
    Ok(RegressionMetrics {
        n,
        mae: abs / n as f64,
        rmse: (sq / n as f64).sqrt(),
    })
}

pub fn classification_metrics(forecast: &Series, actual: &Series) -> Result<ClassificationMetrics, EvaluateError> {
    for s in [forecast, actual] {
        if s.unit() != Unit::Boolean01 {
            return Err(EvaluateError::UnitMismatch {
                forecast: forecast.unit(),
                actual: actual.unit(),
            });
        }
    }
    let mut c = Confusion::default();
    for (f, a) in pairs(forecast, actual)? {
        match (f >= 1.0, a >= 1.0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    if c.total() == 0 {
        return Err(EvaluateError::NoOverlap);
    }
    Ok(ClassificationMetrics {
        confusion: c,
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
    })
}
