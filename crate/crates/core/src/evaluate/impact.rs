use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::timeseries::{Series, Unit};

use super::EvaluateError;

/// Which forecast values mark the best steps to run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Highest forecast first, for forecasts of curtailment itself.
    SelectMaxValue,
    /// Lowest forecast first, for price forecasts.
    SelectMinValue,
}

impl Direction {
    /// Prices select low, everything else selects high.
    pub fn for_unit(unit: Unit) -> Self {
        if unit == Unit::UsdPerMwh {
            Direction::SelectMinValue
        } else {
            Direction::SelectMaxValue
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadShiftSpec {
    /// Window start.
    pub t: DateTime<Utc>,
    /// Window length.
    #[serde(with = "minutes")]
    pub w: TimeDelta,
    /// Energy duration the load needs inside the window.
    #[serde(with = "minutes")]
    pub c: TimeDelta,
    /// `None` infers from the forecast unit.
    pub direction: Option<Direction>,
    /// Require the selected steps to form one uninterrupted block.
    #[serde(default)]
    pub contiguous: bool,
}

pub(crate) mod minutes {
    use chrono::TimeDelta;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &TimeDelta, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i64(d.num_minutes())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TimeDelta, D::Error> {
        Ok(TimeDelta::minutes(i64::deserialize(d)?))
    }
}

impl LoadShiftSpec {
    pub fn new(t: DateTime<Utc>, w: TimeDelta, c: TimeDelta) -> Self {
        LoadShiftSpec {
            t,
            w,
            c,
            direction: None,
            contiguous: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub window_start: DateTime<Utc>,
    #[serde(with = "minutes")]
    pub w: TimeDelta,
    #[serde(with = "minutes")]
    pub c: TimeDelta,
    pub direction: Direction,
    pub contiguous: bool,
    /// Mean actual over the forecast-selected steps.
    pub forecast_impact: f64,
    /// Mean actual over the first `k` steps.
    pub immediate_baseline: f64,
    /// Mean actual over the whole window.
    pub random_baseline: f64,
    /// Highest achievable mean over any `k` steps.
    pub oracle_impact: f64,
    /// Lowest achievable mean over any `k` steps.
    pub anti_oracle_impact: f64,
    /// Offsets into the window, ascending.
    pub selected_steps: Vec<usize>,
    /// Forecast gaps inside the window, which were never selected.
    pub forecast_gaps: usize,
}

/// Picks `k` steps from `values` (gaps never chosen), best first per
/// `direction`, ties to the earlier step. Returns ascending offsets, or
/// `None` when fewer than `k` values are usable.
///
/// In contiguous mode the block with the best sum wins, again preferring
/// the earliest on ties; blocks containing a gap are not eligible.
pub fn select_extremal(values: &[Option<f64>], k: usize, direction: Direction, contiguous: bool) -> Option<Vec<usize>> {
    let better = |a: f64, b: f64| match direction {
        Direction::SelectMaxValue => a > b,
        Direction::SelectMinValue => a < b,
    };
    if k == 0 || k > values.len() {
        return None;
    }
    if contiguous {
        let mut best: Option<(usize, f64)> = None;
        for s in 0..=values.len() - k {
            let Some(sum) = values[s..s + k].iter().try_fold(0.0, |acc, v| v.map(|v| acc + v)) else {
                continue;
            };
            if best.is_none_or(|(_, b)| better(sum, b)) {
                best = Some((s, sum));
            }
        }
        return best.map(|(s, _)| (s..s + k).collect());
    }
    let mut present: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    if present.len() < k {
        return None;
    }
    present.sort_by(|a, b| {
        let by_value = match direction {
            Direction::SelectMaxValue => b.1.total_cmp(&a.1),
            Direction::SelectMinValue => a.1.total_cmp(&b.1),
        };
        by_value.then(a.0.cmp(&b.0))
    });
    let mut chosen: Vec<usize> = present[..k].iter().map(|(i, _)| *i).collect();
    chosen.sort_unstable();
    Some(chosen)
}

/// Mean of `values` at `steps`, summed in the order given.
fn mean_at(values: &[f64], steps: impl IntoIterator<Item = usize>) -> f64 {
    let mut n = 0usize;
    let mut sum = 0.0;
    for i in steps {
        sum += values[i];
        n += 1;
    }
    sum / n as f64
}

/// Load-shifting impact of `forecast` over one window of `actual`.
///
/// Boolean actuals give flag fractions (share of selected steps flagged)
/// in place of MW means. The oracle and anti-oracle always select on the
/// actual values without the contiguity constraint, so they bound every
/// possible selection.
pub fn load_shift_impact(
    forecast: &Series,
    actual: &Series,
    spec: &LoadShiftSpec,
) -> Result<ImpactReport, EvaluateError> {
    let res = actual.grid().resolution();
    if forecast.grid().resolution() != res || !forecast.grid().is_on_phase(actual.grid().start_epoch()) {
        return Err(EvaluateError::GridMismatch);
    }
    if spec.c <= TimeDelta::zero() || spec.w <= TimeDelta::zero() {
        return Err(EvaluateError::InvalidSpec("w and c must be positive".into()));
    }
    if spec.c > spec.w {
        return Err(EvaluateError::CTooLarge {
            c_seconds: spec.c.num_seconds(),
            w_seconds: spec.w.num_seconds(),
        });
    }
    let n = res.steps_in(spec.w)?;
    let k = res.steps_in(spec.c)?;

    let not_covered = || EvaluateError::WindowNotCovered {
        start: spec.t,
        w_seconds: spec.w.num_seconds(),
    };
    let a0 = actual.grid().index_of(spec.t).ok_or_else(not_covered)?;
    let f0 = forecast.grid().index_of(spec.t).ok_or_else(not_covered)?;
    if a0 + n > actual.len() || f0 + n > forecast.len() {
        return Err(not_covered());
    }

    let act_window = &actual.values()[a0..a0 + n];
    let gaps = act_window.iter().filter(|v| v.is_none()).count();
    if gaps > 0 {
        return Err(EvaluateError::ActualGaps {
            start: spec.t,
            count: gaps,
        });
    }
    let act: Vec<f64> = act_window.iter().map(|v| v.unwrap_or_default()).collect();
    let fc = &forecast.values()[f0..f0 + n];
    let forecast_gaps = fc.iter().filter(|v| v.is_none()).count();

    let direction = spec.direction.unwrap_or(Direction::for_unit(forecast.unit()));
    let selected = select_extremal(fc, k, direction, spec.contiguous).ok_or(EvaluateError::TooFewForecastValues {
        available: n - forecast_gaps,
        needed: k,
    })?;
    let act_opt: Vec<Option<f64>> = act.iter().copied().map(Some).collect();
    let oracle = select_extremal(&act_opt, k, Direction::SelectMaxValue, false).expect("k <= n, no gaps");
    let anti = select_extremal(&act_opt, k, Direction::SelectMinValue, false).expect("k <= n, no gaps");

    Ok(ImpactReport {
        window_start: spec.t,
        w: spec.w,
        c: spec.c,
        direction,
        contiguous: spec.contiguous,
        forecast_impact: mean_at(&act, selected.iter().copied()),
        immediate_baseline: mean_at(&act, 0..k),
        random_baseline: mean_at(&act, 0..n),
        oracle_impact: mean_at(&act, oracle),
        anti_oracle_impact: mean_at(&act, anti),
        selected_steps: selected,
        forecast_gaps,
    })
}
