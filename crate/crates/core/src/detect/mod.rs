//! Curtailment detection from nodal prices.
//!
//! The system-wide minimum nodal price is compared against reported
//! curtailment to build a [`CalibrationCurve`]. A monotone fit of that curve
//! gives the price at which curtailment becomes likely
//! ([`extract_threshold`]), and [`detect`] flags each node's steps at or
//! below that price.

mod calibration;
mod heatmap;
mod isotonic;
mod share;
mod signal;
mod threshold;

use thiserror::Error;

use crate::timeseries::{Series, TimeSeriesError, Unit};

pub use calibration::{
    calibration_curve, calibration_curve_with, default_bin_edges, uniform_edges, write_curve_csv, CalibrationBin,
    CalibrationCurve, CalibrationOptions, Conditioning, DEFAULT_MIN_COUNT,
};
pub use heatmap::{below_threshold_heatmap, write_heatmap_csv, HeatCell, HeatmapStats, NodeHeatmap};
pub use isotonic::isotonic_non_increasing;
pub use share::{curtailment_share, system_curtailment, CurtailmentShare};
pub use signal::{bin_index, bin_signal, detect, detect_all, DetectionSignal, SignalRule};
pub use threshold::{extract_threshold, FittedPoint, Saturation, ThresholdMethod, ThresholdResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("series are not on the same grid")]
    GridMismatch,
    #[error("no series supplied")]
    EmptySet,
    #[error("expected a {expected} series, got {found}")]
    UnitMismatch { expected: &'static str, found: Unit },
    #[error("no bin reached the minimum of {min_count} samples")]
    EmptyBins { min_count: usize },
    #[error("threshold extraction needs at least two calibrated bins, found {found}")]
    TooFewBins { found: usize },
    #[error("bad bin edges: {0}")]
    BadEdges(String),
    #[error("target likelihood must lie strictly between 0 and 1, got {0}")]
    InvalidTarget(f64),
    #[error("curtailment amount level must be a non-negative number of MW, got {0}")]
    InvalidAmountLevel(f64),
    #[error("threshold must be a number, got {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
}

/// Same start, length and resolution. Zones are display metadata and may
/// differ.
pub(crate) fn same_axis(a: &Series, b: &Series) -> bool {
    let (a, b) = (a.grid(), b.grid());
    a.start_epoch() == b.start_epoch() && a.len() == b.len() && a.resolution() == b.resolution()
}

/// Per-step minimum across nodes, ignoring gaps. A step is a gap only when
/// every node is missing there.
pub fn min_lmp_series<'a>(nodes: impl IntoIterator<Item = &'a Series>) -> Result<Series, DetectError> {
    let mut it = nodes.into_iter();
    let first = it.next().ok_or(DetectError::EmptySet)?;
    let check = |s: &Series| -> Result<(), DetectError> {
        if s.unit() != Unit::UsdPerMwh {
            return Err(DetectError::UnitMismatch {
                expected: "USD_per_MWh",
                found: s.unit(),
            });
        }
        Ok(())
    };
    check(first)?;
    let mut out: Vec<Option<f64>> = first.values().to_vec();
    for s in it {
        check(s)?;
        if !same_axis(first, s) {
            return Err(DetectError::GridMismatch);
        }
        for (o, v) in out.iter_mut().zip(s.values()) {
            *o = match (*o, *v) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
    }
    Ok(Series::new(*first.grid(), out, Unit::UsdPerMwh)?)
}
