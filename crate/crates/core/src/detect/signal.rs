use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::timeseries::{Series, SeriesSet, Unit};

use super::calibration::check_edges;
use super::DetectError;

/// How a signal was derived from its source series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SignalRule {
    /// 1 where the value is at or below the threshold.
    AtOrBelow { threshold: f64 },
    /// 1 where the value is at or above the threshold.
    AtOrAbove { threshold: f64 },
    /// Index of the left-closed bin containing the value.
    Bins { edges: Vec<f64> },
}

impl SignalRule {
    /// Applies the rule to every present value; gaps stay gaps.
    pub fn apply(&self, series: &Series) -> Result<Series, DetectError> {
        let values = series.values();
        let (unit, out): (Unit, Vec<Option<f64>>) = match self {
            SignalRule::AtOrBelow { threshold } => (
                Unit::Boolean01,
                values
                    .iter()
                    .map(|v| v.map(|v| f64::from(u8::from(v <= *threshold))))
                    .collect(),
            ),
            SignalRule::AtOrAbove { threshold } => (
                Unit::Boolean01,
                values
                    .iter()
                    .map(|v| v.map(|v| f64::from(u8::from(v >= *threshold))))
                    .collect(),
            ),
            SignalRule::Bins { edges } => {
                check_edges(edges, 1)?;
                (
                    Unit::BinIndex,
                    values.iter().map(|v| v.map(|v| bin_index(edges, v) as f64)).collect(),
                )
            }
        };
        Ok(Series::new(*series.grid(), out, unit)?)
    }
}

/// Number of edges at or below `v`, so bins are `[edge[i-1], edge[i])`.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|e| *e <= v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSignal {
    pub node_id: String,
    pub series: Series,
    pub rule: SignalRule,
}

fn require_price(series: &Series) -> Result<(), DetectError> {
    if series.unit() != Unit::UsdPerMwh {
        return Err(DetectError::UnitMismatch {
            expected: "USD_per_MWh",
            found: series.unit(),
        });
    }
    Ok(())
}

/// 1 where the nodal price is at or below `threshold`, 0 above, gap where
/// the price is missing.
pub fn detect(node_id: &str, series: &Series, threshold: f64) -> Result<DetectionSignal, DetectError> {
    require_price(series)?;
    if threshold.is_nan() {
        return Err(DetectError::InvalidThreshold(threshold));
    }
    let rule = SignalRule::AtOrBelow { threshold };
    Ok(DetectionSignal {
        node_id: node_id.to_string(),
        series: rule.apply(series)?,
        rule,
    })
}

/// Discretizes prices into the bins delimited by `edges` (ascending).
/// Values below the first edge get 0; values at or above the last get
/// `edges.len()`.
pub fn bin_signal(node_id: &str, series: &Series, edges: &[f64]) -> Result<DetectionSignal, DetectError> {
    require_price(series)?;
    let rule = SignalRule::Bins { edges: edges.to_vec() };
    Ok(DetectionSignal {
        node_id: node_id.to_string(),
        series: rule.apply(series)?,
        rule,
    })
}

/// [`detect`] for every node, in parallel, in node order.
pub fn detect_all(nodal: &SeriesSet, threshold: f64) -> Result<Vec<DetectionSignal>, DetectError> {
    let nodes: Vec<(&String, &Series)> = nodal.iter().collect();
    nodes.par_iter().map(|(id, s)| detect(id, s, threshold)).collect()
}
