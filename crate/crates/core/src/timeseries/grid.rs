use chrono::{DateTime, TimeDelta, TimeZone, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::TimeSeriesError;

const SECONDS_PER_DAY: u32 = 86_400;

/// Sampling step of a uniform grid, in seconds.
///
/// Any divisor of one day is representable; [`Resolution::declared`] restricts
/// to the two settlement granularities that market feeds publish (5-minute and
/// hourly).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Resolution(u32);

impl Resolution {
    pub const FIVE_MINUTES: Resolution = Resolution(300);
    pub const HOURLY: Resolution = Resolution(3_600);

    pub fn new(seconds: u32) -> Result<Self, TimeSeriesError> {
        if seconds == 0 || SECONDS_PER_DAY % seconds != 0 {
            return Err(TimeSeriesError::BadResolution(seconds));
        }
        Ok(Resolution(seconds))
    }

    /// Only the resolutions market operators actually settle on.
    pub fn declared(seconds: u32) -> Result<Self, TimeSeriesError> {
        match seconds {
            300 | 3_600 => Ok(Resolution(seconds)),
            other => Err(TimeSeriesError::BadResolution(other)),
        }
    }

    pub fn seconds(self) -> u32 {
        self.0
    }

    pub fn as_duration(self) -> TimeDelta {
        TimeDelta::seconds(i64::from(self.0))
    }

    pub fn steps_per_day(self) -> usize {
        (SECONDS_PER_DAY / self.0) as usize
    }

    /// Number of steps in `duration`, which must be a positive whole multiple.
    pub fn steps_in(self, duration: TimeDelta) -> Result<usize, TimeSeriesError> {
        let secs = duration.num_seconds();
        if secs <= 0 || duration.subsec_nanos() != 0 || secs % i64::from(self.0) != 0 {
            return Err(TimeSeriesError::NotAMultiple {
                seconds: secs,
                resolution: self.0,
            });
        }
        Ok((secs / i64::from(self.0)) as usize)
    }

    pub(crate) fn is_aligned(self, epoch_seconds: i64) -> bool {
        epoch_seconds.rem_euclid(i64::from(self.0)) == 0
    }
}

impl TryFrom<u32> for Resolution {
    type Error = TimeSeriesError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Resolution::new(value)
    }
}

impl From<Resolution> for u32 {
    fn from(r: Resolution) -> u32 {
        r.0
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            s if s % 3_600 == 0 => write!(f, "{}h", s / 3_600),
            s if s % 60 == 0 => write!(f, "{}min", s / 60),
            s => write!(f, "{s}s"),
        }
    }
}

/// A uniform UTC time axis.
///
/// Timestamps are stored as epoch seconds. The zone is carried only so that
/// time-of-day statistics can be computed in local wall-clock time; it never
/// affects which instant a step refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    start: i64,
    len: usize,
    resolution: Resolution,
    zone: Tz,
}

impl TimeGrid {
    pub fn new(start: DateTime<Utc>, len: usize, resolution: Resolution, zone: Tz) -> Result<Self, TimeSeriesError> {
        if start.timestamp_subsec_nanos() != 0 {
            return Err(TimeSeriesError::Misaligned {
                epoch_seconds: start.timestamp(),
                resolution: resolution.seconds(),
            });
        }
        Self::from_epoch(start.timestamp(), len, resolution, zone)
    }

    pub fn from_epoch(start: i64, len: usize, resolution: Resolution, zone: Tz) -> Result<Self, TimeSeriesError> {
        if !resolution.is_aligned(start) {
            return Err(TimeSeriesError::Misaligned {
                epoch_seconds: start,
                resolution: resolution.seconds(),
            });
        }
        if len == 0 {
            return Err(TimeSeriesError::EmptyGrid);
        }
        Ok(TimeGrid {
            start,
            len,
            resolution,
            zone,
        })
    }

    /// Grid covering `[start, end)`.
    pub fn spanning(
        start: DateTime<Utc>,
        end: DateTime<Utc>,
        resolution: Resolution,
        zone: Tz,
    ) -> Result<Self, TimeSeriesError> {
        let steps = resolution.steps_in(end - start)?;
        Self::new(start, steps, resolution, zone)
    }

    pub fn start(&self) -> DateTime<Utc> {
        epoch_to_utc(self.start)
    }

    pub fn start_epoch(&self) -> i64 {
        self.start
    }

    /// Exclusive end instant.
    pub fn end(&self) -> DateTime<Utc> {
        epoch_to_utc(self.end_epoch())
    }

    pub fn end_epoch(&self) -> i64 {
        self.start + self.len as i64 * i64::from(self.resolution.seconds())
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn zone(&self) -> Tz {
        self.zone
    }

    pub fn with_zone(mut self, zone: Tz) -> Self {
        self.zone = zone;
        self
    }

    pub fn epoch_at(&self, index: usize) -> i64 {
        self.start + index as i64 * i64::from(self.resolution.seconds())
    }

    pub fn timestamp_at(&self, index: usize) -> DateTime<Utc> {
        epoch_to_utc(self.epoch_at(index))
    }

    pub fn timestamps(&self) -> impl Iterator<Item = DateTime<Utc>> + '_ {
        (0..self.len).map(|i| self.timestamp_at(i))
    }

    /// Index of the step starting exactly at `epoch_seconds`, if any.
    pub fn index_of_epoch(&self, epoch_seconds: i64) -> Option<usize> {
        let offset = epoch_seconds - self.start;
        let res = i64::from(self.resolution.seconds());
        if offset < 0 || offset % res != 0 {
            return None;
        }
        let idx = (offset / res) as usize;
        (idx < self.len).then_some(idx)
    }

    pub fn index_of(&self, t: DateTime<Utc>) -> Option<usize> {
        if t.timestamp_subsec_nanos() != 0 {
            return None;
        }
        self.index_of_epoch(t.timestamp())
    }

    /// True when `epoch_seconds` falls on this grid's phase (in range or not).
    pub fn is_on_phase(&self, epoch_seconds: i64) -> bool {
        (epoch_seconds - self.start).rem_euclid(i64::from(self.resolution.seconds())) == 0
    }

    /// Seconds since local midnight for step `index`, in the grid's zone.
    pub fn local_seconds_of_day(&self, index: usize, zone: Tz) -> u32 {
        local_seconds_of_day(self.epoch_at(index), zone)
    }
}

pub(crate) fn epoch_to_utc(epoch_seconds: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(epoch_seconds, 0).expect("epoch seconds within chrono range")
}

/// Seconds since local midnight in `zone` at the given instant.
pub fn local_seconds_of_day(epoch_seconds: i64, zone: Tz) -> u32 {
    use chrono::Timelike;
    let utc = epoch_to_utc(epoch_seconds).naive_utc();
    zone.from_utc_datetime(&utc).time().num_seconds_from_midnight()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utc(s: &str) -> DateTime<Utc> {
        s.parse().unwrap()
    }

    #[test]
    fn resolution_must_divide_a_day() {
        assert!(Resolution::new(300).is_ok());
        assert!(Resolution::new(900).is_ok());
        assert!(Resolution::new(7).is_err());
        assert!(Resolution::new(0).is_err());
        assert!(Resolution::declared(900).is_err());
        assert_eq!(Resolution::HOURLY.steps_per_day(), 24);
    }

    #[test]
    fn steps_in_requires_whole_multiple() {
        let r = Resolution::FIVE_MINUTES;
        assert_eq!(r.steps_in(TimeDelta::hours(1)).unwrap(), 12);
        assert!(r.steps_in(TimeDelta::minutes(7)).is_err());
        assert!(r.steps_in(TimeDelta::zero()).is_err());
    }

    #[test]
    fn grid_rejects_misaligned_start() {
        let err = TimeGrid::new(utc("2022-06-01T07:03:00Z"), 3, Resolution::FIVE_MINUTES, Tz::UTC);
        assert!(matches!(err, Err(TimeSeriesError::Misaligned { .. })));
        assert!(TimeGrid::new(utc("2022-06-01T07:05:00Z"), 0, Resolution::FIVE_MINUTES, Tz::UTC).is_err());
    }

    #[test]
    fn index_lookup() {
        let g = TimeGrid::new(utc("2022-06-01T00:00:00Z"), 12, Resolution::FIVE_MINUTES, Tz::UTC).unwrap();
        assert_eq!(g.index_of(utc("2022-06-01T00:10:00Z")), Some(2));
        assert_eq!(g.index_of(utc("2022-06-01T00:11:00Z")), None);
        assert_eq!(g.index_of(utc("2022-06-01T01:00:00Z")), None);
        assert_eq!(g.end(), utc("2022-06-01T01:00:00Z"));
    }

    #[test]
    fn local_time_of_day_uses_zone() {
        // 07:00Z is midnight in Los Angeles during daylight time.
        let t = utc("2022-06-01T07:00:00Z").timestamp();
        assert_eq!(local_seconds_of_day(t, chrono_tz::America::Los_Angeles), 0);
        assert_eq!(local_seconds_of_day(t, Tz::UTC), 7 * 3600);
    }
}
