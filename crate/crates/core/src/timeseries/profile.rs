use chrono_tz::Tz;
use serde::Serialize;

use super::grid::local_seconds_of_day;
use super::{Resolution, Series, TimeSeriesError};

/// Lower quartile, median, and upper quartile of one bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BucketStats {
    /// Local seconds since midnight at which the bucket opens.
    pub start_seconds: u32,
    pub count: usize,
    /// Absent when the bucket received no values.
    pub quartiles: Option<Quartiles>,
}

/// Distribution of a series by local time of day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeOfDayProfile {
    pub bucket_width: Resolution,
    #[serde(serialize_with = "serialize_tz")]
    pub zone: Tz,
    pub buckets: Vec<BucketStats>,
}

fn serialize_tz<S: serde::Serializer>(tz: &Tz, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(tz.name())
}

impl TimeOfDayProfile {
    /// Bucket index for a local seconds-of-day value.
    pub fn bucket_of(&self, local_seconds: u32) -> usize {
        (local_seconds / self.bucket_width.seconds()) as usize
    }

    pub fn median_at_epoch(&self, epoch_seconds: i64) -> Option<f64> {
        let b = self.bucket_of(local_seconds_of_day(epoch_seconds, self.zone));
        self.buckets[b].quartiles.map(|q| q.median)
    }
}

/// Linear-interpolation quantile between order statistics (Hyndman-Fan type 7).
///
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Groups present values by local wall-clock bucket and summarises each.
///
/// Steps are stamped with their local time in `zone`: during the autumn
/// transition the repeated hour lands in its bucket twice, and the skipped
/// spring hour contributes nothing.
pub fn time_of_day_profile(series: &Series, bucket: Resolution, zone: Tz) -> Result<TimeOfDayProfile, TimeSeriesError> {
    let res = series.grid().resolution().seconds();
    if bucket.seconds() < res || bucket.seconds() % res != 0 {
        return Err(TimeSeriesError::BadBucket {
            bucket: bucket.seconds(),
            resolution: res,
        });
    }
    let n_buckets = bucket.steps_per_day();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); n_buckets];
    let grid = series.grid();
    for (i, v) in series.values().iter().enumerate() {
        if let Some(v) = v {
            let sod = local_seconds_of_day(grid.epoch_at(i), zone);
            groups[(sod / bucket.seconds()) as usize].push(*v);
        }
    }

    let buckets = groups
        .into_iter()
        .enumerate()
        .map(|(b, mut vals)| {
            vals.sort_by(f64::total_cmp);
            BucketStats {
                start_seconds: b as u32 * bucket.seconds(),
                count: vals.len(),
                quartiles: (!vals.is_empty()).then(|| Quartiles {
                    q25: quantile_sorted(&vals, 0.25),
                    median: quantile_sorted(&vals, 0.5),
                    q75: quantile_sorted(&vals, 0.75),
                }),
            }
        })
        .collect();

    Ok(TimeOfDayProfile {
        bucket_width: bucket,
        zone,
        buckets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{TimeGrid, Unit};
    use chrono::{DateTime, Utc};

    fn hourly(start: &str, values: Vec<Option<f64>>) -> Series {
        let start: DateTime<Utc> = start.parse().unwrap();
        let g = TimeGrid::new(start, values.len(), Resolution::HOURLY, Tz::UTC).unwrap();
        Series::new(g, values, Unit::Mw).unwrap()
    }

    #[test]
    fn two_sample_bucket_interpolates() {
        let mut v = vec![Some(0.0); 48];
        v[0] = Some(2.0);
        v[24] = Some(4.0);
        let p = time_of_day_profile(&hourly("2022-06-01T00:00:00Z", v), Resolution::HOURLY, Tz::UTC).unwrap();
        let q = p.buckets[0].quartiles.unwrap();
        assert_eq!((q.median, q.q25, q.q75), (3.0, 2.5, 3.5));
        assert_eq!(p.buckets[0].count, 2);
        assert_eq!(p.buckets.len(), 24);
    }

    #[test]
    fn constant_and_single_day() {
        let p = time_of_day_profile(
            &hourly("2022-06-01T00:00:00Z", vec![Some(7.5); 72]),
            Resolution::HOURLY,
            Tz::UTC,
        )
        .unwrap();
        assert!(p.buckets.iter().all(|b| {
            let q = b.quartiles.unwrap();
            q.median == 7.5 && q.q25 == 7.5 && q.q75 == 7.5
        }));

        let day: Vec<_> = (0..24).map(|h| Some(f64::from(h) * 1.5)).collect();
        let p = time_of_day_profile(&hourly("2022-06-01T00:00:00Z", day), Resolution::HOURLY, Tz::UTC).unwrap();
        for (h, b) in p.buckets.iter().enumerate() {
            assert_eq!(b.count, 1);
            let q = b.quartiles.unwrap();
            assert_eq!(
                (q.q25, q.median, q.q75),
                (h as f64 * 1.5, h as f64 * 1.5, h as f64 * 1.5)
            );
        }
    }

    #[test]
    fn gaps_are_excluded() {
        let mut v = vec![Some(1.0); 24];
        v[5] = None;
        let p = time_of_day_profile(&hourly("2022-06-01T00:00:00Z", v), Resolution::HOURLY, Tz::UTC).unwrap();
        assert_eq!(p.buckets[5].count, 0);
        assert!(p.buckets[5].quartiles.is_none());
    }

    #[test]
    fn bucket_must_be_coarser_multiple() {
        let s = hourly("2022-06-01T00:00:00Z", vec![Some(1.0); 4]);
        assert!(matches!(
            time_of_day_profile(&s, Resolution::FIVE_MINUTES, Tz::UTC),
            Err(TimeSeriesError::BadBucket { .. })
        ));
    }

    #[test]
    fn dst_fall_back_counts_repeated_hour_twice() {
        // 2022-11-06 in New York: 01:00 local occurs at 05:00Z and again at 06:00Z.
        let s = hourly("2022-11-06T04:00:00Z", vec![Some(1.0); 4]);
        let p = time_of_day_profile(&s, Resolution::HOURLY, chrono_tz::America::New_York).unwrap();
        assert_eq!(p.buckets[0].count, 1);
        assert_eq!(p.buckets[1].count, 2);
        assert_eq!(p.buckets[2].count, 1);
    }

    #[test]
    fn dst_spring_forward_skips_an_hour() {
        // 2022-03-13 in New York: 02:00 local does not exist.
        let s = hourly("2022-03-13T05:00:00Z", vec![Some(1.0); 24]);
        let p = time_of_day_profile(&s, Resolution::HOURLY, chrono_tz::America::New_York).unwrap();
        assert_eq!(p.buckets[2].count, 0);
        assert_eq!(p.buckets.iter().map(|b| b.count).sum::<usize>(), 24);
    }
}
