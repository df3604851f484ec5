//! Baseline forecasters and rolling-origin backtesting.
//!
//! Forecasters only ever see a [`History`], a read-only view of the
//! observations strictly before the issue time. That is the whole no-lookahead
//! guarantee: there is nothing later to look at.

mod backtest;
mod baselines;
mod history;
mod horizon;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{DetectError, SignalRule};
use crate::timeseries::{Series, TimeSeriesError, Unit};

pub use backtest::{backtest, write_forecast_csv, BacktestEntry, BacktestResult, SkippedIssue};
pub use baselines::{Climatology, DayAheadPersistence, Persistence};
pub use history::History;
pub use horizon::{Horizon, WindowPreset};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("no observation before {0}")]
    NoHistory(DateTime<Utc>),
    #[error("history must cover the 24 hours before {0}")]
    InsufficientHistory(DateTime<Utc>),
    #[error("forecast is already a {0} signal")]
    AlreadyDiscrete(SignalType),
    #[error("issue time {0} is outside the series or its target window runs past the end")]
    ScheduleOutOfRange(DateTime<Utc>),
    #[error("issue times must be strictly ascending ({0} repeats or goes backwards)")]
    UnsortedSchedule(DateTime<Utc>),
    #[error("cannot issue at {issued_at}: the model was fitted on data up to {fitted_until}")]
    IssuedBeforeCutoff {
        issued_at: DateTime<Utc>,
        fitted_until: DateTime<Utc>,
    },
    #[error("horizon needs lead >= 0 and length > 0 (got {lead_seconds}s, {length_seconds}s)")]
    InvalidHorizon { lead_seconds: i64, length_seconds: i64 },
    #[error("{0} series cannot be forecast by this model")]
    UnsupportedUnit(Unit),
    #[error(transparent)]
    Signal(#[from] DetectError),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
}

impl ForecastError {
    /// Errors that mean "not enough data yet" rather than a broken request.
    pub fn is_data_shortfall(&self) -> bool {
        matches!(
            self,
            ForecastError::NoHistory(_) | ForecastError::InsufficientHistory(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalType {
    Regression,
    Binary,
    Binned,
}

impl SignalType {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalType::Regression => "regression",
            SignalType::Binary => "binary",
            SignalType::Binned => "binned",
        }
    }

    pub fn of_unit(unit: Unit) -> Self {
        match unit {
            Unit::Boolean01 => SignalType::Binary,
            Unit::BinIndex => SignalType::Binned,
            _ => SignalType::Regression,
        }
    }
}

impl std::fmt::Display for SignalType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSeries {
    pub issued_at: DateTime<Utc>,
    pub horizon: Horizon,
    /// Starts at `issued_at + horizon.lead`.
    pub series: Series,
    pub signal_type: SignalType,
}

/// A forecasting method. Fitting sees only the truncated history.
pub trait Forecaster: Send + Sync {
    fn name(&self) -> &str;

    fn fit(&self, history: &History<'_>, seed: u64) -> Result<Box<dyn Fitted>, ForecastError>;

    /// Fit on `history` and predict from its cut-off.
    fn forecast(&self, history: &History<'_>, horizon: &Horizon, seed: u64) -> Result<ForecastSeries, ForecastError> {
        self.fit(history, seed)?.predict(history.issued_at(), horizon)
    }
}

/// Immutable fitted state.
pub trait Fitted: Send + Sync {
    /// `issued_at` must not precede the fitted history's cut-off.
    fn predict(&self, issued_at: DateTime<Utc>, horizon: &Horizon) -> Result<ForecastSeries, ForecastError>;
}

/// Converts a regression forecast into a binary or binned signal.
pub fn to_signal(forecast: &ForecastSeries, rule: &SignalRule) -> Result<ForecastSeries, ForecastError> {
    if forecast.signal_type != SignalType::Regression {
        return Err(ForecastError::AlreadyDiscrete(forecast.signal_type));
    }
    let series = rule.apply(&forecast.series)?;
    Ok(ForecastSeries {
        issued_at: forecast.issued_at,
        horizon: forecast.horizon,
        signal_type: SignalType::of_unit(series.unit()),
        series,
    })
}
