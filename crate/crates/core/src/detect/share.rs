use serde::{Deserialize, Serialize};

use crate::timeseries::{Series, SeriesSet, Unit};

use super::{same_axis, DetectError};

/// Combines regional curtailment into one system series: MW are summed,
/// boolean flags are OR-ed. A step is a gap only when every region is.
pub fn system_curtailment(regions: &SeriesSet) -> Result<Series, DetectError> {
    let mut it = regions.values();
    let first = it.next().ok_or(DetectError::EmptySet)?;
    let unit = first.unit();
    if !matches!(unit, Unit::Mw | Unit::Boolean01) {
        return Err(DetectError::UnitMismatch {
            expected: "MW or boolean01",
            found: unit,
        });
    }
    let mut out = first.values().to_vec();
    for s in it {
        if s.unit() != unit {
            return Err(DetectError::UnitMismatch {
                expected: unit.as_str(),
                found: s.unit(),
            });
        }
        if !same_axis(first, s) {
            return Err(DetectError::GridMismatch);
        }
        for (o, v) in out.iter_mut().zip(s.values()) {
            *o = match (*o, *v) {
                (Some(a), Some(b)) if unit == Unit::Mw => Some(a + b),
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
        }
    }
    Ok(Series::new(*first.grid(), out, unit)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurtailmentShare {
    /// Steps with a reported value.
    pub steps: usize,
    /// Steps with MW above zero or the flag set.
    pub curtailed: usize,
    /// `curtailed / steps` in percent; absent with no observed steps.
    pub percent: Option<f64>,
}

/// Share of observed steps with any curtailment.
pub fn curtailment_share(series: &Series) -> CurtailmentShare {
    let (mut steps, mut curtailed) = (0usize, 0usize);
    for v in series.present() {
        steps += 1;
        curtailed += usize::from(v > 0.0);
    }
    CurtailmentShare {
        steps,
        curtailed,
        percent: (steps > 0).then(|| 100.0 * curtailed as f64 / steps as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{Resolution, TimeGrid};
    use chrono_tz::Tz;

    fn s(v: Vec<Option<f64>>, unit: Unit) -> Series {
        let g = TimeGrid::from_epoch(0, v.len(), Resolution::HOURLY, Tz::UTC).unwrap();
        Series::new(g, v, unit).unwrap()
    }

    #[test]
    fn three_of_ten() {
        let v: Vec<_> = (0..10)
            .map(|i| Some(if i % 4 == 1 || i == 9 { 12.0 } else { 0.0 }))
            .collect();
        let share = curtailment_share(&s(v, Unit::Mw));
        assert_eq!((share.steps, share.curtailed), (10, 3));
        assert_eq!(share.percent, Some(30.0));
        assert_eq!(curtailment_share(&s(vec![None], Unit::Mw)).percent, None);
    }

    #[test]
    fn regions_combine() {
        let mut set = SeriesSet::new();
        set.insert("a".into(), s(vec![Some(1.0), None, None], Unit::Mw));
        set.insert("b".into(), s(vec![Some(2.0), Some(5.0), None], Unit::Mw));
        assert_eq!(
            system_curtailment(&set).unwrap().values(),
            &[Some(3.0), Some(5.0), None]
        );

        let mut flags = SeriesSet::new();
        flags.insert("a".into(), s(vec![Some(0.0), Some(1.0)], Unit::Boolean01));
        flags.insert("b".into(), s(vec![Some(0.0), Some(0.0)], Unit::Boolean01));
        assert_eq!(system_curtailment(&flags).unwrap().values(), &[Some(0.0), Some(1.0)]);

        flags.insert("c".into(), s(vec![Some(0.0), Some(0.0)], Unit::Mw));
        assert!(matches!(
            system_curtailment(&flags),
            Err(DetectError::UnitMismatch { .. })
        ));
    }
}
