use std::io::Write;

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use crate::ingest::format_timestamp;
use crate::timeseries::{window_by_index, Series, TimeSeriesError};

use super::{ForecastError, ForecastSeries, Forecaster, History, Horizon};

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestEntry {
    pub forecast: ForecastSeries,
    /// Observations over the forecast's target window.
    pub actual: Series,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedIssue {
    pub issued_at: DateTime<Utc>,
    pub reason: ForecastError,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BacktestResult {
    pub entries: Vec<BacktestEntry>,
    /// Issue times with too little history to fit.
    pub skipped: Vec<SkippedIssue>,
}

/// Rolling-origin evaluation: at each issue time the forecaster is fitted on
/// the observations before it and its forecast is paired with what actually
/// happened.
///
/// Issue times must be strictly ascending, on the series grid, and leave the
/// whole target window inside the series. Issues whose fit fails for lack of
/// data are skipped and listed in [`BacktestResult::skipped`].
pub fn backtest(
    forecaster: &dyn Forecaster,
    series: &Series,
    schedule: &[DateTime<Utc>],
    horizon: &Horizon,
    seed: u64,
) -> Result<BacktestResult, ForecastError> {
    let grid = series.grid();
    let (lead, len) = horizon.steps(grid.resolution())?;
    let mut offsets = Vec::with_capacity(schedule.len());
    for (i, t) in schedule.iter().enumerate() {
        if i > 0 && schedule[i - 1] >= *t {
            return Err(ForecastError::UnsortedSchedule(*t));
        }
        if !grid.is_on_phase(t.timestamp()) {
            return Err(TimeSeriesError::OffGrid(*t).into());
        }
        let offset = grid.index_of(*t).ok_or(ForecastError::ScheduleOutOfRange(*t))?;
        if offset + lead + len > grid.len() {
            return Err(ForecastError::ScheduleOutOfRange(*t));
        }
        offsets.push(offset);
    }

    let outcomes: Vec<Result<BacktestEntry, ForecastError>> = schedule
        .par_iter()
        .zip(offsets.par_iter())
        .map(|(t, &offset)| {
            let history = History::new(series, *t)?;
            let forecast = forecaster.forecast(&history, horizon, seed)?;
            let actual = window_by_index(series, offset + lead, len)?;
            Ok(BacktestEntry { forecast, actual })
        })
        .collect();

    let mut result = BacktestResult::default();
    for (t, outcome) in schedule.iter().zip(outcomes) {
        match outcome {
            Ok(entry) => result.entries.push(entry),
            Err(e) if e.is_data_shortfall() => result.skipped.push(SkippedIssue {
                issued_at: *t,
                reason: e,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(result)
}

/// Writes `issued_at,target_time,value,signal_type`, one row per forecast
/// step; gaps leave `value` empty.
pub fn write_forecast_csv<'a, W: Write>(
    mut out: W,
    forecasts: impl IntoIterator<Item = &'a ForecastSeries>,
) -> std::io::Result<()> {
    writeln!(out, "issued_at,target_time,value,signal_type")?;
    for f in forecasts {
        let issued = format_timestamp(f.issued_at);
        let grid = f.series.grid();
        for (i, v) in f.series.values().iter().enumerate() {
            let value = v.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{issued},{},{value},{}",
                format_timestamp(grid.timestamp_at(i)),
                f.signal_type
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::{Climatology, DayAheadPersistence, Persistence};
    use crate::timeseries::{Resolution, TimeGrid, Unit};
    use chrono::TimeDelta;
    use chrono_tz::Tz;

    fn at(h: i64) -> DateTime<Utc> {
        DateTime::from_timestamp(h * 3600, 0).unwrap()
    }

    fn one_step() -> Horizon {
        Horizon::new(TimeDelta::zero(), TimeDelta::hours(1)).unwrap()
    }

    fn series(v: &[f64]) -> Series {
        let g = TimeGrid::from_epoch(0, v.len(), Resolution::HOURLY, Tz::UTC).unwrap();
        Series::dense(g, v.to_vec(), Unit::Mw).unwrap()
    }

    #[test]
    fn persistence_hand_enumeration() {
        let s = series(&[1.0, 2.0, 3.0, 4.0]);
        let r = backtest(&Persistence, &s, &[at(2), at(3)], &one_step(), 0).unwrap();
        let pred: Vec<f64> = r.entries.iter().flat_map(|e| e.forecast.series.present()).collect();
        let act: Vec<f64> = r.entries.iter().flat_map(|e| e.actual.present()).collect();
        assert_eq!(pred, vec![2.0, 3.0]);
        assert_eq!(act, vec![3.0, 4.0]);
    }

    #[test]
    fn issue_at_start_is_skipped() {
        let s = series(&[1.0, 2.0]);
        let r = backtest(&Persistence, &s, &[at(0), at(1)], &one_step(), 0).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.skipped.len(), 1);
        assert!(matches!(r.skipped[0].reason, ForecastError::NoHistory(_)));
    }

    #[test]
    fn empty_schedule() {
        let s = series(&[1.0]);
        let r = backtest(&Persistence, &s, &[], &one_step(), 0).unwrap();
        assert!(r.entries.is_empty() && r.skipped.is_empty());
    }

    #[test]
    fn schedule_validation() {
        let s = series(&[1.0, 2.0, 3.0]);
        let h = one_step();
        assert!(matches!(
            backtest(&Persistence, &s, &[at(3)], &h, 0),
            Err(ForecastError::ScheduleOutOfRange(_))
        ));
        assert!(matches!(
            backtest(&Persistence, &s, &[at(-1)], &h, 0),
            Err(ForecastError::ScheduleOutOfRange(_))
        ));
        assert!(matches!(
            backtest(&Persistence, &s, &[at(2), at(1)], &h, 0),
            Err(ForecastError::UnsortedSchedule(_))
        ));
        let off = DateTime::from_timestamp(90, 0).unwrap();
        assert!(matches!(
            backtest(&Persistence, &s, &[off], &h, 0),
            Err(ForecastError::TimeSeries(_))
        ));
    }

    #[test]
    fn corrupting_the_future_changes_nothing() {
        let v: Vec<f64> = (0..96).map(|i| f64::from(i % 24) + f64::from(i / 24)).collect();
        let clean = series(&v);
        for model in [
            &Persistence as &dyn Forecaster,
            &DayAheadPersistence,
            &Climatology::default(),
        ] {
            for issue in [24usize, 40, 72] {
                let mut noisy = v.clone();
                for x in &mut noisy[issue..] {
                    *x = -1e6;
                }
                let noisy = series(&noisy);
                let a = model.forecast(&History::new(&clean, at(issue as i64)).unwrap(), &Horizon::default(), 7);
                let b = model.forecast(&History::new(&noisy, at(issue as i64)).unwrap(), &Horizon::default(), 7);
                assert_eq!(a.unwrap(), b.unwrap(), "{}", model.name());
            }
        }
    }

    #[test]
    fn dump_format() {
        let s = series(&[1.0, 2.0, 3.0]);
        let h = Horizon::new(TimeDelta::zero(), TimeDelta::hours(2)).unwrap();
        let r = backtest(&Persistence, &s, &[at(1)], &h, 0).unwrap();
        let mut buf = Vec::new();
        write_forecast_csv(&mut buf, r.entries.iter().map(|e| &e.forecast)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "issued_at,target_time,value,signal_type\n\
             1970-01-01T01:00:00Z,1970-01-01T01:00:00Z,1,regression\n\
             1970-01-01T01:00:00Z,1970-01-01T02:00:00Z,1,regression\n"
        );
    }
}
