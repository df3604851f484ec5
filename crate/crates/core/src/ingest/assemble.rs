use std::collections::HashMap;

use chrono::{DateTime, Utc};

use crate::timeseries::{Series, SeriesSet, TimeGrid, Unit};

use super::records::{derive_curtailment_with, CurtailmentRecord, LmpRecord, DEFAULT_PERCENT_THRESHOLD};
use super::IngestError;

type Point<'a> = (&'a str, DateTime<Utc>, f64);

/// Places `(id, timestamp, value)` points onto `grid`, one series per id.
///
/// Every timestamp must be a step of the grid; steps with no point become gaps.
pub fn to_series<K, I>(points: I, grid: &TimeGrid, unit: Unit) -> Result<SeriesSet, IngestError>
where
    K: AsRef<str>,
    I: IntoIterator<Item = (K, DateTime<Utc>, f64)>,
{
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    // Rows arrive grouped by id in practice; skip the hash lookup when they do.
    let mut last: Option<usize> = None;

    for (key, ts, value) in points {
        let key = key.as_ref();
        let col = match last.filter(|&c| ids[c] == key) {
            Some(c) => c,
            None => {
                let c = match index.get(key) {
                    Some(&c) => c,
                    None => {
                        let c = columns.len();
                        ids.push(key.to_string());
                        index.insert(key.to_string(), c);
                        columns.push(vec![None; grid.len()]);
                        c
                    }
                };
                last = Some(c);
                c
            }
        };
        let step = grid.index_of(ts).ok_or_else(|| IngestError::OffGridTimestamp {
            id: key.to_string(),
            timestamp: ts,
        })?;
        let slot = &mut columns[col][step];
        if slot.is_some() {
            return Err(IngestError::Duplicate {
                id: key.to_string(),
                timestamp: ts,
            });
        }
        *slot = Some(value);
    }

    ids.into_iter()
        .zip(columns)
        .map(|(id, values)| Ok((id, Series::new(*grid, values, unit)?)))
        .collect()
}

/// One USD/MWh series per pricing node.
pub fn lmp_to_series<'a, I>(records: I, grid: &TimeGrid) -> Result<SeriesSet, IngestError>
where
    I: IntoIterator<Item = &'a LmpRecord>,
{
    to_series(
        records.into_iter().map(|r| (r.node_id.as_str(), r.timestamp, r.price)),
        grid,
        Unit::UsdPerMwh,
    )
}

/// One series per region, in MW or as a 0/1 proxy depending on what the
/// records carry.
pub fn curtailment_to_series<'a, I>(records: I, grid: &TimeGrid) -> Result<SeriesSet, IngestError>
where
    I: IntoIterator<Item = &'a CurtailmentRecord>,
{
    curtailment_to_series_with(records, grid, DEFAULT_PERCENT_THRESHOLD)
}

pub fn curtailment_to_series_with<'a, I>(
    records: I,
    grid: &TimeGrid,
    percent_threshold: f64,
) -> Result<SeriesSet, IngestError>
where
    I: IntoIterator<Item = &'a CurtailmentRecord>,
{
    let mut units: HashMap<&str, Unit> = HashMap::new();
    let mut points = Vec::new();
    for r in records {
        let d = derive_curtailment_with(r, percent_threshold);
        let unit = *units.entry(r.region_id.as_str()).or_insert(d.unit);
        if unit != d.unit {
            return Err(IngestError::MixedUnits(r.region_id.clone()));
        }
        points.push((r.region_id.as_str(), r.timestamp, d.value));
    }
    let mut by_unit: HashMap<Unit, Vec<Point<'_>>> = HashMap::new();
    for p in points {
        by_unit.entry(units[p.0]).or_default().push(p);
    }
    let mut out = SeriesSet::new();
    for (unit, pts) in by_unit {
        out.extend(to_series(pts, grid, unit)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::records::CurtailmentPayload;
    use crate::timeseries::Resolution;
    use chrono_tz::Tz;

    fn grid3() -> TimeGrid {
        TimeGrid::new(
            "2022-06-01T07:00:00Z".parse().unwrap(),
            3,
            Resolution::FIVE_MINUTES,
            Tz::UTC,
        )
        .unwrap()
    }

    fn lmp(node: &str, ts: &str, price: f64) -> LmpRecord {
        LmpRecord {
            node_id: node.into(),
            timestamp: ts.parse().unwrap(),
            price,
        }
    }

    #[test]
    fn full_and_partial_coverage() {
        let full = [
            lmp("NODE_A", "2022-06-01T07:00:00Z", 1.0),
            lmp("NODE_A", "2022-06-01T07:05:00Z", 2.0),
            lmp("NODE_A", "2022-06-01T07:10:00Z", 3.0),
        ];
        let set = lmp_to_series(&full, &grid3()).unwrap();
        assert_eq!(set["NODE_A"].gap_count(), 0);

        let set = lmp_to_series(&full[..2], &grid3()).unwrap();
        assert_eq!(set["NODE_A"].values(), &[Some(1.0), Some(2.0), None]);
    }

    #[test]
    fn duplicates_and_off_grid_rows_fail() {
        let dup = [
            lmp("A", "2022-06-01T07:00:00Z", 1.0),
            lmp("A", "2022-06-01T07:00:00Z", 2.0),
        ];
        assert!(matches!(
            lmp_to_series(&dup, &grid3()),
            Err(IngestError::Duplicate { .. })
        ));
        let outside = [lmp("A", "2022-06-01T08:00:00Z", 1.0)];
        assert!(matches!(
            lmp_to_series(&outside, &grid3()),
            Err(IngestError::OffGridTimestamp { .. })
        ));
    }

    #[test]
    fn interleaved_nodes() {
        let recs = [
            lmp("A", "2022-06-01T07:00:00Z", 1.0),
            lmp("B", "2022-06-01T07:00:00Z", 5.0),
            lmp("A", "2022-06-01T07:05:00Z", 2.0),
        ];
        let set = lmp_to_series(&recs, &grid3()).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set["A"].values(), &[Some(1.0), Some(2.0), None]);
        assert_eq!(set["B"].values(), &[Some(5.0), None, None]);
    }

    #[test]
    fn curtailment_units_follow_payload() {
        let ts = "2022-06-01T07:00:00Z".parse().unwrap();
        let recs = [
            CurtailmentRecord {
                region_id: "W".into(),
                timestamp: ts,
                payload: CurtailmentPayload::CapabilityOutput {
                    capability_mw: 10.0,
                    output_mw: 4.0,
                },
            },
            CurtailmentRecord {
                region_id: "F".into(),
                timestamp: ts,
                payload: CurtailmentPayload::Flag(true),
            },
        ];
        let set = curtailment_to_series(&recs, &grid3()).unwrap();
        assert_eq!(set["W"].unit(), Unit::Mw);
        assert_eq!(set["W"].get(0), Some(6.0));
        assert_eq!(set["F"].unit(), Unit::Boolean01);
    }
}
