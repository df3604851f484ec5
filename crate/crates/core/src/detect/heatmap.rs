use std::io::Write;

use chrono_tz::Tz;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::timeseries::{local_seconds_of_day, Resolution, Series, SeriesSet, TimeSeriesError, Unit};

use super::{same_axis, DetectError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    /// Seconds after local midnight.
    pub bucket_start: u32,
    pub count: usize,
    pub below: usize,
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeHeatmap {
    pub node_id: String,
    pub cells: Vec<HeatCell>,
    pub count: usize,
    pub below: usize,
    pub fraction: Option<f64>,
}

/// Share of steps at or below a price threshold, per node and local
/// time-of-day bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapStats {
    pub threshold: f64,
    pub bucket: Resolution,
    pub zone: String,
    pub nodes: Vec<NodeHeatmap>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn node_heatmap(node_id: &str, series: &Series, threshold: f64, bucket: Resolution, zone: Tz) -> NodeHeatmap {
    let n_buckets = bucket.steps_per_day();
    let width = bucket.seconds();
    let mut count = vec![0usize; n_buckets];
    let mut below = vec![0usize; n_buckets];
    let grid = series.grid();
    for (i, v) in series.values().iter().enumerate() {
        let Some(v) = v else { continue };
        let b = (local_seconds_of_day(grid.epoch_at(i), zone) / width) as usize;
        count[b] += 1;
        below[b] += usize::from(*v <= threshold);
    }
    let cells = (0..n_buckets)
        .map(|b| HeatCell {
            bucket_start: b as u32 * width,
            count: count[b],
            below: below[b],
            fraction: ratio(below[b], count[b]),
        })
        .collect();
    let (c, k) = (count.iter().sum(), below.iter().sum());
    NodeHeatmap {
        node_id: node_id.to_string(),
        cells,
        count: c,
        below: k,
        fraction: ratio(k, c),
    }
}

pub fn below_threshold_heatmap(
    nodal: &SeriesSet,
    threshold: f64,
    bucket: Resolution,
    zone: Tz,
) -> Result<HeatmapStats, DetectError> {
    let first = nodal.values().next().ok_or(DetectError::EmptySet)?;
    let res = first.grid().resolution();
    if bucket.seconds() % res.seconds() != 0 {
        return Err(TimeSeriesError::BadBucket {
            bucket: bucket.seconds(),
            resolution: res.seconds(),
        }
        .into());
    }
    for s in nodal.values() {
        if s.unit() != Unit::UsdPerMwh {
            return Err(DetectError::UnitMismatch {
                expected: "USD_per_MWh",
                found: s.unit(),
            });
        }
        if !same_axis(first, s) {
            return Err(DetectError::GridMismatch);
        }
    }
    let nodes: Vec<(&String, &Series)> = nodal.iter().collect();
    let nodes = nodes
        .par_iter()
        .map(|(id, s)| node_heatmap(id, s, threshold, bucket, zone))
        .collect();
    Ok(HeatmapStats {
        threshold,
        bucket,
        zone: zone.name().to_string(),
        nodes,
    })
}

/// Writes `node_id,bucket_start_local,fraction,count`, with the bucket start
/// as local `HH:MM` and an empty fraction for empty buckets.
pub fn write_heatmap_csv<W: Write>(mut out: W, stats: &HeatmapStats) -> std::io::Result<()> {
    writeln!(out, "node_id,bucket_start_local,fraction,count")?;
    for node in &stats.nodes {
        for c in &node.cells {
            let fraction = c.fraction.map(|f| f.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{:02}:{:02},{},{}",
                node.node_id,
                c.bucket_start / 3600,
                c.bucket_start % 3600 / 60,
                fraction,
                c.count
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::TimeGrid;

    #[test]
    fn fractions_per_local_hour() {
        // 48 hourly steps from 07:00 UTC = 00:00 PDT on 2022-06-01.
        let g = TimeGrid::from_epoch(1_654_066_800, 48, Resolution::HOURLY, Tz::UTC).unwrap();
        let v: Vec<f64> = (0..48).map(|i| if i % 24 < 6 { -1.0 } else { 20.0 }).collect();
        let mut set = SeriesSet::new();
        set.insert("N".into(), Series::dense(g, v, Unit::UsdPerMwh).unwrap());
        let h = below_threshold_heatmap(&set, 0.0, Resolution::HOURLY, chrono_tz::America::Los_Angeles).unwrap();
        let n = &h.nodes[0];
        assert_eq!(n.cells.len(), 24);
        assert_eq!(n.cells[0].fraction, Some(1.0));
        assert_eq!(n.cells[6].fraction, Some(0.0));
        assert_eq!(n.fraction, Some(0.25));
        let mut buf = Vec::new();
        write_heatmap_csv(&mut buf, &h).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("N,00:00,1,2"));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = TimeGrid::from_epoch(0, 4, Resolution::HOURLY, Tz::UTC).unwrap();
        let b = TimeGrid::from_epoch(3600, 4, Resolution::HOURLY, Tz::UTC).unwrap();
        let mut set = SeriesSet::new();
        set.insert("a".into(), Series::dense(a, vec![0.0; 4], Unit::UsdPerMwh).unwrap());
        set.insert("b".into(), Series::dense(b, vec![0.0; 4], Unit::UsdPerMwh).unwrap());
        assert!(matches!(
            below_threshold_heatmap(&set, 0.0, Resolution::HOURLY, Tz::UTC),
            Err(DetectError::GridMismatch)
        ));
        let bad = below_threshold_heatmap(&set, 0.0, Resolution::FIVE_MINUTES, Tz::UTC);
        assert!(matches!(
            bad,
            Err(DetectError::TimeSeries(TimeSeriesError::BadBucket { .. }))
        ));
    }
}
