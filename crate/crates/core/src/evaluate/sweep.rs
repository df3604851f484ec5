use std::io::Write;

use chrono::{DateTime, TimeDelta, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forecast::BacktestEntry;
use crate::ingest::format_timestamp;

use super::impact::minutes;
use super::{load_shift_impact, Direction, EvaluateError, ImpactReport, LoadShiftSpec};

/// A `(w, c)` pair applied to every window that fits in each forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(with = "minutes")]
    pub w: TimeDelta,
    #[serde(with = "minutes")]
    pub c: TimeDelta,
    #[serde(default)]
    pub direction: Option<Direction>,
    #[serde(default)]
    pub contiguous: bool,
}

impl SweepSpec {
    pub fn new(w: TimeDelta, c: TimeDelta) -> Self {
        SweepSpec {
            w,
            c,
            direction: None,
            contiguous: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpactMeans {
    pub forecast_impact: f64,
    pub immediate_baseline: f64,
    pub random_baseline: f64,
    pub oracle_impact: f64,
    pub anti_oracle_impact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    /// `None` for the overall summary.
    #[serde(with = "opt_minutes")]
    pub w: Option<TimeDelta>,
    #[serde(with = "opt_minutes")]
    pub c: Option<TimeDelta>,
    pub windows: usize,
    pub means: ImpactMeans,
    /// Mean forecast impact over mean random baseline.
    pub uplift_vs_random: Option<f64>,
    /// Mean forecast impact over mean immediate baseline.
    pub uplift_vs_immediate: Option<f64>,
}

mod opt_minutes {
    use chrono::TimeDelta;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<TimeDelta>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.num_minutes()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<TimeDelta>, D::Error> {
        Ok(Option::<i64>::deserialize(d)?.map(TimeDelta::minutes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSkip {
    pub window_start: DateTime<Utc>,
    #[serde(with = "minutes")]
    pub w: TimeDelta,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<ImpactReport>,
    pub groups: Vec<GroupSummary>,
    pub overall: GroupSummary,
    /// Windows with actual gaps or too few forecast values.
    pub skipped: Vec<WindowSkip>,
}

fn summarize(w: Option<TimeDelta>, c: Option<TimeDelta>, rows: &[&ImpactReport]) -> GroupSummary {
    let n = rows.len();
    let mean = |f: fn(&ImpactReport) -> f64| {
        if n == 0 {
            f64::NAN
        } else {
            rows.iter().map(|r| f(r)).sum::<f64>() / n as f64
        }
    };
    let means = ImpactMeans {
        forecast_impact: mean(|r| r.forecast_impact),
        immediate_baseline: mean(|r| r.immediate_baseline),
        random_baseline: mean(|r| r.random_baseline),
        oracle_impact: mean(|r| r.oracle_impact),
        anti_oracle_impact: mean(|r| r.anti_oracle_impact),
    };
    let uplift = |den: f64| (n > 0 && den != 0.0).then(|| means.forecast_impact / den);
    GroupSummary {
        w,
        c,
        windows: n,
        uplift_vs_random: uplift(means.random_baseline),
        uplift_vs_immediate: uplift(means.immediate_baseline),
        means,
    }
}

/// Scores every backtest forecast under every spec.
///
/// Each forecast's target window is tiled with consecutive windows of length
/// `w`, starting at the first target step; a trailing partial window is
/// dropped. Rows come out grouped by entry, then spec, then window start.
pub fn sweep(entries: &[BacktestEntry], specs: &[SweepSpec]) -> Result<SweepReport, EvaluateError> {
    if entries.is_empty() || specs.is_empty() {
        return Err(EvaluateError::EmptyInput);
    }
    type Outcome = Result<(Vec<(usize, ImpactReport)>, Vec<WindowSkip>), EvaluateError>;
    let per_entry: Vec<Outcome> = entries
        .par_iter()
        .map(|entry| {
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            let grid = entry.forecast.series.grid();
            for (idx, spec) in specs.iter().enumerate() {
                let mut t = grid.start();
                while t + spec.w <= grid.end() {
                    let ls = LoadShiftSpec {
                        t,
                        w: spec.w,
                        c: spec.c,
                        direction: spec.direction,
                        contiguous: spec.contiguous,
                    };
                    match load_shift_impact(&entry.forecast.series, &entry.actual, &ls) {
                        Ok(r) => rows.push((idx, r)),
                        Err(e @ (EvaluateError::ActualGaps { .. } | EvaluateError::TooFewForecastValues { .. })) => {
                            skipped.push(WindowSkip {
                                window_start: t,
                                w: spec.w,
                                reason: e.to_string(),
                            })
                        }
                        Err(e) => return Err(e),
                    }
                    t += spec.w;
                }
            }
            Ok((rows, skipped))
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for outcome in per_entry {
        let (r, s) = outcome?;
        rows.extend(r);
        skipped.extend(s);
    }
    let groups = specs
        .iter()
        .enumerate()
        .map(|(idx, s)| {
            let members: Vec<&ImpactReport> = rows.iter().filter(|(i, _)| *i == idx).map(|(_, r)| r).collect();
            summarize(Some(s.w), Some(s.c), &members)
        })
        .collect();
    let rows: Vec<ImpactReport> = rows.into_iter().map(|(_, r)| r).collect();
    let all: Vec<&ImpactReport> = rows.iter().collect();
    let overall = summarize(None, None, &all);
    Ok(SweepReport {
        rows,
        groups,
        overall,
        skipped,
    })
}

/// Writes `window_start,w,c,forecast_impact,immediate,random,oracle,anti_oracle`
/// with `w` and `c` in minutes.
pub fn write_report_csv<W: Write>(mut out: W, rows: &[ImpactReport]) -> std::io::Result<()> {
    writeln!(
        out,
        "window_start,w,c,forecast_impact,immediate,random,oracle,anti_oracle"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_timestamp(r.window_start),
            r.w.num_minutes(),
            r.c.num_minutes(),
            r.forecast_impact,
            r.immediate_baseline,
            r.random_baseline,
            r.oracle_impact,
            r.anti_oracle_impact
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::{backtest, Horizon, Persistence};
    use crate::timeseries::{Resolution, Series, TimeGrid, Unit};
    use chrono_tz::Tz;

    fn entries(v: &[f64], issues: &[i64], len_h: i64) -> Vec<BacktestEntry> {
        let g = TimeGrid::from_epoch(0, v.len(), Resolution::HOURLY, Tz::UTC).unwrap();
        let s = Series::dense(g, v.to_vec(), Unit::Mw).unwrap();
        let sched: Vec<_> = issues
            .iter()
            .map(|h| DateTime::from_timestamp(h * 3600, 0).unwrap())
            .collect();
        let h = Horizon::new(TimeDelta::zero(), TimeDelta::hours(len_h)).unwrap();
        backtest(&Persistence, &s, &sched, &h, 0).unwrap().entries
    }

    #[test]
    fn single_window_is_its_own_mean() {
        let e = entries(&[5.0, 0.0, 10.0, 20.0, 30.0], &[1], 4);
        let r = sweep(&e, &[SweepSpec::new(TimeDelta::hours(4), TimeDelta::hours(2))]).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.overall.means.forecast_impact, r.rows[0].forecast_impact);
        assert_eq!(r.groups[0].windows, 1);
        assert_eq!(r.overall.uplift_vs_random, Some(r.rows[0].forecast_impact / 15.0));
    }

    #[test]
    fn means_and_tiling() {
        // one 4h forecast tiled into two 2h windows with actual [10,10] then [20,20]
        let e = entries(&[0.0, 10.0, 10.0, 20.0, 20.0], &[1], 4);
        let r = sweep(&e, &[SweepSpec::new(TimeDelta::hours(2), TimeDelta::hours(1))]).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.overall.means.forecast_impact, 15.0);
    }

    #[test]
    fn empty_inputs() {
        let e = entries(&[1.0, 2.0, 3.0], &[1], 1);
        assert!(matches!(sweep(&e, &[]), Err(EvaluateError::EmptyInput)));
        assert!(matches!(
            sweep(&[], &[SweepSpec::new(TimeDelta::hours(1), TimeDelta::hours(1))]),
            Err(EvaluateError::EmptyInput)
        ));
    }

    #[test]
    fn csv_layout() {
        let e = entries(&[0.0, 10.0, 20.0], &[1], 2);
        let r = sweep(&e, &[SweepSpec::new(TimeDelta::hours(2), TimeDelta::hours(1))]).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &r.rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "1970-01-01T01:00:00Z,120,60,10,10,15,20,10"
        );
    }
}
