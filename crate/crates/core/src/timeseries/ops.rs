use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use super::{Resolution, Series, TimeGrid, TimeSeriesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Sum,
    Min,
    Max,
}

/// Downsample to `target` with strict gap handling: any missing input makes
/// the output step a gap.
pub fn resample(series: &Series, target: Resolution, mode: Aggregation) -> Result<Series, TimeSeriesError> {
    resample_with_tolerance(series, target, mode, 0.0)
}

/// Downsample to `target`.
///
/// Output steps are aligned to multiples of `target` in UTC. Inputs that fall
/// outside the source grid count as gaps, so a partially covered first or last
/// output step obeys the same tolerance rule as interior steps. An output step
/// is a gap when the fraction of missing inputs exceeds `gap_tolerance`, or
/// when no input is present at all.
pub fn resample_with_tolerance(
    series: &Series,
    target: Resolution,
    mode: Aggregation,
    gap_tolerance: f64,
) -> Result<Series, TimeSeriesError> {
    let src = series.grid().resolution();
    if target.seconds() < src.seconds() {
        return Err(TimeSeriesError::UpsampleRequested {
            from: src.seconds(),
            to: target.seconds(),
        });
    }
    if target.seconds() % src.seconds() != 0 {
        return Err(TimeSeriesError::NonIntegerRatio {
            from: src.seconds(),
            to: target.seconds(),
        });
    }
    if target == src {
        return Ok(series.clone());
    }

    let ratio = (target.seconds() / src.seconds()) as usize;
    let tsec = i64::from(target.seconds());
    let grid = series.grid();
    let out_start = grid.start_epoch().div_euclid(tsec) * tsec;
    let lead = ((grid.start_epoch() - out_start) / i64::from(src.seconds())) as usize;
    let out_len = (lead + grid.len()).div_ceil(ratio);
    let values = series.values();

    let mut out = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let lo = (k * ratio).saturating_sub(lead);
        let hi = ((k + 1) * ratio).saturating_sub(lead).min(values.len());
        let chunk = &values[lo.min(hi)..hi];

        let mut present = 0usize;
        let (mut sum, mut min, mut max) = (0.0_f64, f64::INFINITY, f64::NEG_INFINITY);
        for v in chunk.iter().flatten() {
            present += 1;
            sum += v;
            min = min.min(*v);
            max = max.max(*v);
        }
        let missing = ratio - present;
        if present == 0 || missing as f64 > gap_tolerance * ratio as f64 {
            out.push(None);
            continue;
        }
        out.push(Some(match mode {
            Aggregation::Mean => sum / present as f64,
            Aggregation::Sum => sum,
            Aggregation::Min => min,
            Aggregation::Max => max,
        }));
    }

    let out_grid = TimeGrid::from_epoch(out_start, out_len, target, grid.zone())?;
    // Means, minima, and maxima stay inside the unit's domain, but sums of
    // boolean or fractional values do not.
    Series::new(out_grid, out, series.unit())
}

/// Restricts two series to their common time span.
pub fn align(a: &Series, b: &Series) -> Result<(Series, Series), TimeSeriesError> {
    let (ga, gb) = (a.grid(), b.grid());
    if ga.resolution() != gb.resolution() {
        return Err(TimeSeriesError::ResolutionMismatch {
            left: ga.resolution().seconds(),
            right: gb.resolution().seconds(),
        });
    }
    if ga.start_epoch() == gb.start_epoch() && ga.len() == gb.len() {
        return Ok((a.clone(), b.clone()));
    }
    if !ga.is_on_phase(gb.start_epoch()) {
        return Err(TimeSeriesError::PhaseMismatch);
    }
    let start = ga.start_epoch().max(gb.start_epoch());
    let end = ga.end_epoch().min(gb.end_epoch());
    if end <= start {
        return Err(TimeSeriesError::EmptyOverlap);
    }
    let n = ((end - start) / i64::from(ga.resolution().seconds())) as usize;
    let slice = |s: &Series| -> Series {
        let offset = s
            .grid()
            .index_of_epoch(start)
            .expect("overlap start lies on both grids");
        let grid = TimeGrid::from_epoch(start, n, s.grid().resolution(), s.grid().zone())
            .expect("overlap grid is aligned and non-empty");
        Series::from_parts_unchecked(grid, s.values()[offset..offset + n].to_vec(), s.unit())
    };
    Ok((slice(a), slice(b)))
}

/// The `w / resolution` steps starting at `t`.
pub fn window(series: &Series, t: DateTime<Utc>, w: TimeDelta) -> Result<Series, TimeSeriesError> {
    let grid = series.grid();
    let steps = grid.resolution().steps_in(w)?;
    if t.timestamp_subsec_nanos() != 0 || !grid.is_on_phase(t.timestamp()) {
        return Err(TimeSeriesError::OffGrid(t));
    }
    let offset = grid
        .index_of(t)
        .filter(|&i| i + steps <= grid.len())
        .ok_or(TimeSeriesError::OutOfRange { start: t, end: t + w })?;
    window_by_index(series, offset, steps)
}

/// Positional variant of [`window`].
pub fn window_by_index(series: &Series, offset: usize, steps: usize) -> Result<Series, TimeSeriesError> {
    let grid = series.grid();
    if steps == 0 || offset + steps > grid.len() {
        return Err(TimeSeriesError::OutOfRange {
            start: grid.timestamp_at(offset),
            end: grid.timestamp_at(offset + steps),
        });
    }
    let sub = TimeGrid::from_epoch(grid.epoch_at(offset), steps, grid.resolution(), grid.zone())?;
    Ok(Series::from_parts_unchecked(
        sub,
        series.values()[offset..offset + steps].to_vec(),
        series.unit(),
    ))
}
