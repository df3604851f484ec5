use chrono::{DateTime, Utc};

use crate::timeseries::{Resolution, TimeGrid, TimeSeriesError, Unit};

use super::Series;

/// Observations strictly before `issued_at`, borrowed from a longer series.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    grid: TimeGrid,
    values: &'a [Option<f64>],
    unit: Unit,
    issued_at: DateTime<Utc>,
}

impl<'a> History<'a> {
    /// `issued_at` must fall on the series' step phase; it may lie before or
    /// after the series.
    pub fn new(series: &'a Series, issued_at: DateTime<Utc>) -> Result<Self, TimeSeriesError> {
        let grid = series.grid();
        let t = issued_at.timestamp();
        if !grid.is_on_phase(t) {
            return Err(TimeSeriesError::OffGrid(issued_at));
        }
        let end = if t <= grid.start_epoch() {
            0
        } else {
            (((t - grid.start_epoch()) / i64::from(grid.resolution().seconds())) as usize).min(grid.len())
        };
        Ok(History {
            grid: *grid,
            values: &series.values()[..end],
            unit: series.unit(),
            issued_at,
        })
    }

    pub fn issued_at(&self) -> DateTime<Utc> {
        self.issued_at
    }

    pub fn values(&self) -> &'a [Option<f64>] {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn resolution(&self) -> Resolution {
        self.grid.resolution()
    }

    pub fn zone(&self) -> chrono_tz::Tz {
        self.grid.zone()
    }

    pub fn start_epoch(&self) -> i64 {
        self.grid.start_epoch()
    }

    pub fn epoch_at(&self, index: usize) -> i64 {
        self.grid.epoch_at(index)
    }

    /// The observed part as an owned series, or `None` when empty.
    pub fn to_series(&self) -> Option<Series> {
        if self.values.is_empty() {
            return None;
        }
        let grid = TimeGrid::from_epoch(
            self.grid.start_epoch(),
            self.values.len(),
            self.grid.resolution(),
            self.grid.zone(),
        )
        .expect("prefix of a valid grid");
        Some(Series::from_parts_unchecked(grid, self.values.to_vec(), self.unit))
    }
}
