use chrono::{DateTime, Utc};
use chrono_tz::Tz;

use crate::timeseries::{time_of_day_profile, Resolution, Series, TimeGrid, TimeOfDayProfile, Unit};

use super::{Fitted, ForecastError, ForecastSeries, Forecaster, History, Horizon, SignalType};

/// Everything a fitted baseline needs to lay out its output.
#[derive(Debug, Clone, Copy)]
struct Frame {
    cutoff: DateTime<Utc>,
    resolution: Resolution,
    zone: Tz,
    unit: Unit,
}

impl Frame {
    fn of(history: &History<'_>) -> Self {
        Frame {
            cutoff: history.issued_at(),
            resolution: history.resolution(),
            zone: history.zone(),
            unit: history.unit(),
        }
    }

    /// Target grid for a forecast issued at `issued_at`.
    fn target(&self, issued_at: DateTime<Utc>, horizon: &Horizon) -> Result<TimeGrid, ForecastError> {
        if issued_at < self.cutoff {
            return Err(ForecastError::IssuedBeforeCutoff {
                issued_at,
                fitted_until: self.cutoff,
            });
        }
        let (lead, len) = horizon.steps(self.resolution)?;
        let res = i64::from(self.resolution.seconds());
        let start = issued_at.timestamp() + lead as i64 * res;
        if (start - self.cutoff.timestamp()).rem_euclid(res) != 0 {
            return Err(crate::timeseries::TimeSeriesError::OffGrid(issued_at).into());
        }
        Ok(TimeGrid::from_epoch(start, len, self.resolution, self.zone)?)
    }

    fn finish(
        &self,
        issued_at: DateTime<Utc>,
        horizon: &Horizon,
        grid: TimeGrid,
        values: Vec<Option<f64>>,
        unit: Unit,
    ) -> Result<ForecastSeries, ForecastError> {
        let series = Series::new(grid, values, unit)?;
        Ok(ForecastSeries {
            issued_at,
            horizon: *horizon,
            signal_type: SignalType::of_unit(unit),
            series,
        })
    }
}

/// Repeats the last observed value.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

struct PersistenceFit {
    frame: Frame,
    last: f64,
}

impl Forecaster for Persistence {
    fn name(&self) -> &str {
        "persistence"
    }

    fn fit(&self, history: &History<'_>, _seed: u64) -> Result<Box<dyn Fitted>, ForecastError> {
        let last = history
            .values()
            .iter()
            .rev()
            .find_map(|v| *v)
            .ok_or(ForecastError::NoHistory(history.issued_at()))?;
        Ok(Box::new(PersistenceFit {
            frame: Frame::of(history),
            last,
        }))
    }
}

impl Fitted for PersistenceFit {
    fn predict(&self, issued_at: DateTime<Utc>, horizon: &Horizon) -> Result<ForecastSeries, ForecastError> {
        let grid = self.frame.target(issued_at, horizon)?;
        let values = vec![Some(self.last); grid.len()];
        self.frame.finish(issued_at, horizon, grid, values, self.frame.unit)
    }
}

/// Predicts each step with the observation at the same wall time on the most
/// recent fully observed day: `t - 24h` for a next-day horizon, `t - k*24h`
/// further out. Gaps in that day carry into the forecast.
#[derive(Debug, Clone, Copy, Default)]
pub struct DayAheadPersistence;

struct DayAheadFit {
    frame: Frame,
    /// Observations over `[cutoff - 24h, cutoff)`.
    last_day: Vec<Option<f64>>,
}

impl Forecaster for DayAheadPersistence {
    fn name(&self) -> &str {
        "day_ahead_persistence"
    }

    fn fit(&self, history: &History<'_>, _seed: u64) -> Result<Box<dyn Fitted>, ForecastError> {
        let per_day = history.resolution().steps_per_day();
        let day_start = history.issued_at().timestamp() - 86_400;
        if history.len() < per_day || history.start_epoch() > day_start {
            return Err(ForecastError::InsufficientHistory(history.issued_at()));
        }
        let values = history.values();
        Ok(Box::new(DayAheadFit {
            frame: Frame::of(history),
            last_day: values[values.len() - per_day..].to_vec(),
        }))
    }
}

impl Fitted for DayAheadFit {
    fn predict(&self, issued_at: DateTime<Utc>, horizon: &Horizon) -> Result<ForecastSeries, ForecastError> {
        let grid = self.frame.target(issued_at, horizon)?;
        let res = i64::from(self.frame.resolution.seconds());
        let day_start = self.frame.cutoff.timestamp() - 86_400;
        let per_day = self.last_day.len() as i64;
        let values = (0..grid.len())
            .map(|i| {
                let slot = ((grid.epoch_at(i) - day_start) / res).rem_euclid(per_day);
                self.last_day[slot as usize]
            })
            .collect();
        self.frame.finish(issued_at, horizon, grid, values, self.frame.unit)
    }
}

/// Median of the training history in each local time-of-day bucket.
///
/// Boolean histories yield fractions (the median of a bucket with equal
/// counts of 0 and 1 is 0.5).
#[derive(Debug, Clone, Copy)]
pub struct Climatology {
    pub bucket: Resolution,
    /// Zone for bucketing; `None` uses the series' own zone.
    pub zone: Option<Tz>,
}

impl Climatology {
    pub fn new(bucket: Resolution, zone: Option<Tz>) -> Self {
        Climatology { bucket, zone }
    }
}

impl Default for Climatology {
    fn default() -> Self {
        Climatology::new(Resolution::HOURLY, None)
    }
}

struct ClimatologyFit {
    frame: Frame,
    profile: TimeOfDayProfile,
    unit: Unit,
}

impl Forecaster for Climatology {
    fn name(&self) -> &str {
        "climatology"
    }

    fn fit(&self, history: &History<'_>, _seed: u64) -> Result<Box<dyn Fitted>, ForecastError> {
        let unit = match history.unit() {
            Unit::BinIndex => return Err(ForecastError::UnsupportedUnit(Unit::BinIndex)),
            Unit::Boolean01 => Unit::Fraction,
            u => u,
        };
        let observed = history
            .to_series()
            .filter(|s| s.present().next().is_some())
            .ok_or(ForecastError::NoHistory(history.issued_at()))?;
        let zone = self.zone.unwrap_or(history.zone());
        let profile = time_of_day_profile(&observed, self.bucket, zone)?;
        Ok(Box::new(ClimatologyFit {
            frame: Frame::of(history),
            profile,
            unit,
        }))
    }
}

impl Fitted for ClimatologyFit {
    fn predict(&self, issued_at: DateTime<Utc>, horizon: &Horizon) -> Result<ForecastSeries, ForecastError> {
        let grid = self.frame.target(issued_at, horizon)?;
        let values = (0..grid.len())
            .map(|i| self.profile.median_at_epoch(grid.epoch_at(i)))
            .collect();
        self.frame.finish(issued_at, horizon, grid, values, self.unit)
    }
}
