use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{TimeGrid, TimeSeriesError};

/// Physical unit carried by a [`Series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "USD_per_MWh")]
    UsdPerMwh,
    #[serde(rename = "MW")]
    Mw,
    #[serde(rename = "fraction")]
    Fraction,
    #[serde(rename = "boolean01")]
    Boolean01,
    /// Small non-negative integers produced by binning a continuous series.
    #[serde(rename = "bin_index")]
    BinIndex,
}

impl Unit {
    pub const ALL: [Unit; 5] = [
        Unit::UsdPerMwh,
        Unit::Mw,
        Unit::Fraction,
        Unit::Boolean01,
        Unit::BinIndex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::UsdPerMwh => "USD_per_MWh",
            Unit::Mw => "MW",
            Unit::Fraction => "fraction",
            Unit::Boolean01 => "boolean01",
            Unit::BinIndex => "bin_index",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Unit::UsdPerMwh => 0,
            Unit::Mw => 1,
            Unit::Fraction => 2,
            Unit::Boolean01 => 3,
            Unit::BinIndex => 4,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Unit> {
        Unit::ALL.into_iter().find(|u| u.code() == code)
    }

    fn admits(self, v: f64) -> bool {
        match self {
            Unit::Boolean01 => v == 0.0 || v == 1.0,
            Unit::Fraction => (0.0..=1.0).contains(&v),
            Unit::BinIndex => v >= 0.0 && v.fract() == 0.0,
            Unit::UsdPerMwh | Unit::Mw => true,
        }
    }
}

impl std::fmt::Display for Unit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Unit {
    type Err = TimeSeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Unit::ALL
            .into_iter()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| TimeSeriesError::UnknownUnit(s.to_string()))
    }
}

/// Values on a uniform grid. `None` marks a gap; prices of zero or below are
/// ordinary values.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    grid: TimeGrid,
    values: Vec<Option<f64>>,
    unit: Unit,
}

/// Named series, ordered by id so iteration is deterministic.
pub type SeriesSet = BTreeMap<String, Series>;

impl Series {
    pub fn new(grid: TimeGrid, values: Vec<Option<f64>>, unit: Unit) -> Result<Self, TimeSeriesError> {
        if values.len() != grid.len() {
            return Err(TimeSeriesError::LengthMismatch {
                grid: grid.len(),
                values: values.len(),
            });
        }
        if let Some((index, v)) = values
            .iter()
            .enumerate()
            .find_map(|(i, v)| v.filter(|x| !unit.admits(*x)).map(|x| (i, x)))
        {
            return Err(TimeSeriesError::ValueOutOfDomain { unit, index, value: v });
        }
        Ok(Series { grid, values, unit })
    }

    /// Gap-free series from plain values.
    pub fn dense(grid: TimeGrid, values: Vec<f64>, unit: Unit) -> Result<Self, TimeSeriesError> {
        Series::new(grid, values.into_iter().map(Some).collect(), unit)
    }

    /// Constructor for values already known to satisfy the unit's domain.
    pub(crate) fn from_parts_unchecked(grid: TimeGrid, values: Vec<Option<f64>>, unit: Unit) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Series { grid, values, unit }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied().flatten()
    }

    pub fn gap_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }

    pub fn into_values(self) -> Vec<Option<f64>> {
        self.values
    }

    /// Same values, relabelled zone. Instants are unaffected.
    pub fn with_zone(mut self, zone: chrono_tz::Tz) -> Self {
        self.grid = self.grid.with_zone(zone);
        self
    }

    /// Applies `f` to every present value, producing a series in `unit`.
    pub fn map_values(&self, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Series, TimeSeriesError> {
        Series::new(self.grid, self.values.iter().map(|v| v.map(&f)).collect(), unit)
    }

    /// Bitwise equality of grids, units, and values (distinguishes `-0.0` and NaN payloads).
    pub fn bit_eq(&self, other: &Series) -> bool {
        self.grid == other.grid
            && self.unit == other.unit
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.map(f64::to_bits) == b.map(f64::to_bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Resolution;
    use chrono_tz::Tz;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::from_epoch(0, n, Resolution::HOURLY, Tz::UTC).unwrap()
    }

    #[test]
    fn length_must_match_grid() {
        assert!(matches!(
            Series::dense(grid(3), vec![1.0, 2.0], Unit::Mw),
            Err(TimeSeriesError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn unit_domains_are_enforced() {
        assert!(Series::dense(grid(2), vec![0.0, 1.0], Unit::Boolean01).is_ok());
        assert!(Series::dense(grid(2), vec![0.0, 0.5], Unit::Boolean01).is_err());
        assert!(Series::dense(grid(2), vec![0.0, 1.5], Unit::Fraction).is_err());
        assert!(Series::dense(grid(2), vec![-3.0, 0.0], Unit::UsdPerMwh).is_ok());
        assert!(Series::new(grid(2), vec![None, Some(2.0)], Unit::BinIndex).is_ok());
        assert!(Series::new(grid(2), vec![None, Some(-1.0)], Unit::BinIndex).is_err());
    }

    #[test]
    fn unit_names_round_trip() {
        for u in Unit::ALL {
            assert_eq!(u.as_str().parse::<Unit>().unwrap(), u);
            assert_eq!(Unit::from_code(u.code()), Some(u));
        }
    }
}
