use chrono::TimeDelta;
use serde::{Deserialize, Serialize};

use crate::timeseries::{Resolution, TimeSeriesError};

use super::ForecastError;

/// What a forecast covers relative to its issue time: steps in
/// `[issued_at + lead, issued_at + lead + length)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    #[serde(with = "seconds")]
    pub lead: TimeDelta,
    #[serde(with = "seconds")]
    pub length: TimeDelta,
}

mod seconds {
    use chrono::TimeDelta;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &TimeDelta, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i64(d.num_seconds())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TimeDelta, D::Error> {
        Ok(TimeDelta::seconds(i64::deserialize(d)?))
    }
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon {
            lead: TimeDelta::zero(),
            length: TimeDelta::hours(24),
        }
    }
}

impl Horizon {
    pub fn new(lead: TimeDelta, length: TimeDelta) -> Result<Self, ForecastError> {
        if lead < TimeDelta::zero() || length <= TimeDelta::zero() {
            return Err(ForecastError::InvalidHorizon {
                lead_seconds: lead.num_seconds(),
                length_seconds: length.num_seconds(),
            });
        }
        Ok(Horizon { lead, length })
    }

    /// `(lead, length)` in steps of `resolution`.
    pub fn steps(&self, resolution: Resolution) -> Result<(usize, usize), TimeSeriesError> {
        let lead = if self.lead.is_zero() {
            0
        } else {
            resolution.steps_in(self.lead)?
        };
        Ok((lead, resolution.steps_in(self.length)?))
    }
}

/// Flexible-load windows used as horizon and load-shift presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPreset {
    /// 60-minute thermostat pre-conditioning.
    Thermostat,
    /// 8-hour overnight EV charge.
    ElectricVehicle,
    /// 24-hour battery cycle.
    Battery,
    /// One-week deferrable batch job.
    Batch,
}

impl WindowPreset {
    pub const ALL: [WindowPreset; 4] = [
        WindowPreset::Thermostat,
        WindowPreset::ElectricVehicle,
        WindowPreset::Battery,
        WindowPreset::Batch,
    ];

    pub fn window(self) -> TimeDelta {
        match self {
            WindowPreset::Thermostat => TimeDelta::minutes(60),
            WindowPreset::ElectricVehicle => TimeDelta::hours(8),
            WindowPreset::Battery => TimeDelta::hours(24),
            WindowPreset::Batch => TimeDelta::weeks(1),
        }
    }

    pub fn horizon(self) -> Horizon {
        Horizon {
            lead: TimeDelta::zero(),
            length: self.window(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WindowPreset::Thermostat => "thermostat",
            WindowPreset::ElectricVehicle => "electric_vehicle",
            WindowPreset::Battery => "battery",
            WindowPreset::Batch => "batch",
        }
    }
}

impl std::str::FromStr for WindowPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WindowPreset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown preset `{s}`"))
    }
}
