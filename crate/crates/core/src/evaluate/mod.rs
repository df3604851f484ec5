//! Scoring forecasts by what a flexible load would have gained from them.
//!
//! A load needing `c` of energy inside a window of length `w` picks the `k =
//! c / resolution` steps its forecast rates best. [`load_shift_impact`]
//! reports the mean actual curtailment over those steps next to running
//! immediately, running at a random time, and the best and worst choices
//! in hindsight.

mod impact;
mod metrics;
mod sweep;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::timeseries::{TimeSeriesError, Unit};

pub use impact::{load_shift_impact, select_extremal, Direction, ImpactReport, LoadShiftSpec};
pub use metrics::{classification_metrics, regression_metrics, ClassificationMetrics, Confusion, RegressionMetrics};
pub use sweep::{sweep, write_report_csv, GroupSummary, ImpactMeans, SweepReport, SweepSpec, WindowSkip};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error("window [{start}, +{w_seconds}s) is not covered by both series")]
    WindowNotCovered { start: DateTime<Utc>, w_seconds: i64 },
    #[error("actual series has {count} gap(s) inside the window starting {start}")]
    ActualGaps { start: DateTime<Utc>, count: usize },
    #[error("c of {c_seconds}s does not fit in a window of {w_seconds}s")]
    CTooLarge { c_seconds: i64, w_seconds: i64 },
    #[error("forecast has {available} usable step(s) in the window but {needed} are needed")]
    TooFewForecastValues { available: usize, needed: usize },
    #[error("load-shift spec: {0}")]
    InvalidSpec(String),
    #[error("series are not on the same grid")]
    GridMismatch,
    #[error("cannot compare {forecast} with {actual}")]
    UnitMismatch { forecast: Unit, actual: Unit },
    #[error("no step has both a forecast and an actual value")]
    NoOverlap,
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
}
