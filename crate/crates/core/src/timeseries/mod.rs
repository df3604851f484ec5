//! Uniform time grids and the series that live on them.
//!
//! Instants are UTC throughout. Local zones enter only through
//! [`time_of_day_profile`], which buckets by wall-clock time.

mod grid;
mod ops;
mod profile;
mod series;

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use grid::{Resolution, TimeGrid};
pub use ops::{align, resample, resample_with_tolerance, window, window_by_index, Aggregation};
pub use profile::{quantile_sorted, time_of_day_profile, BucketStats, Quartiles, TimeOfDayProfile};
pub use series::{Series, SeriesSet, Unit};

pub use grid::local_seconds_of_day;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeSeriesError {
    #[error("resolution of {0}s does not divide a day (or is not an accepted settlement period)")]
    BadResolution(u32),
    #[error("timestamp {epoch_seconds} is not aligned to a {resolution}s grid")]
    Misaligned { epoch_seconds: i64, resolution: u32 },
    #[error("grids must contain at least one step")]
    EmptyGrid,
    #[error("duration of {seconds}s is not a positive multiple of {resolution}s")]
    NotAMultiple { seconds: i64, resolution: u32 },
    #[error("grid has {grid} steps but {values} values were supplied")]
    LengthMismatch { grid: usize, values: usize },
    #[error("value {value} at step {index} is outside the domain of unit {unit}")]
    ValueOutOfDomain { unit: Unit, index: usize, value: f64 },
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("cannot resample {from}s to {to}s: ratio is not an integer")]
    NonIntegerRatio { from: u32, to: u32 },
    #[error("cannot resample {from}s to finer {to}s")]
    UpsampleRequested { from: u32, to: u32 },
    #[error("resolutions differ ({left}s vs {right}s)")]
    ResolutionMismatch { left: u32, right: u32 },
    #[error("grids are offset by a fraction of a step")]
    PhaseMismatch,
    #[error("series do not overlap")]
    EmptyOverlap,
    #[error("{0} is not on the series grid")]
    OffGrid(DateTime<Utc>),
    #[error("window [{start}, {end}) is outside the series")]
    OutOfRange { start: DateTime<Utc>, end: DateTime<Utc> },
    #[error("bucket width {bucket}s must be a multiple of the series resolution {resolution}s")]
    BadBucket { bucket: u32, resolution: u32 },
}
