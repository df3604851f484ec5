use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::timeseries::Resolution;

use super::IngestError;

/// Market operators with published curtailment history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IsoId {
    Spp,
    Caiso,
    Nyiso,
    Pjm,
    Miso,
    Isone,
    Ercot,
    Ieso,
}

/// What an operator publishes as its curtailment history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReportedKind {
    /// System-wide curtailed power in MW.
    SystemCurtailedMW,
    /// Percent of pricing nodes with a renewable unit on the margin.
    PercentNodesMarginalFuel,
    /// Per-region boolean marginal-fuel flag.
    RegionalMarginalFuelFlag,
    /// System-wide boolean marginal-fuel flag.
    SystemMarginalFuelFlag,
    /// Per-plant output capability alongside actual output.
    CapabilityAndOutput,
}

impl ReportedKind {
    /// True when the operator reports MW (directly or via capability minus output).
    pub fn has_mw(self) -> bool {
        matches!(
            self,
            ReportedKind::SystemCurtailedMW | ReportedKind::CapabilityAndOutput
        )
    }

    /// Tag used in the `kind` column of the canonical curtailment CSV.
    pub fn csv_kind(self) -> &'static str {
        match self {
            ReportedKind::SystemCurtailedMW => "mw",
            ReportedKind::PercentNodesMarginalFuel => "pct",
            ReportedKind::RegionalMarginalFuelFlag | ReportedKind::SystemMarginalFuelFlag => "flag",
            ReportedKind::CapabilityAndOutput => "cap_out",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            ReportedKind::SystemCurtailedMW => "System wide curtailed power",
            ReportedKind::PercentNodesMarginalFuel => "Percent of nodes with marginal fuel",
            ReportedKind::RegionalMarginalFuelFlag => "Regional marginal fuel flag",
            ReportedKind::SystemMarginalFuelFlag => "System wide marginal fuel flag",
            ReportedKind::CapabilityAndOutput => "Plant output capability and actual output",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsoDescriptor {
    pub iso_id: IsoId,
    pub granularity: Resolution,
    pub reported_kind: ReportedKind,
    pub zone: Tz,
}

impl IsoDescriptor {
    /// Negative prices in this market are often import-driven rather than
    /// curtailment-driven; results should carry a caveat.
    pub fn negative_price_caveat(&self) -> bool {
        self.iso_id == IsoId::Miso
    }
}

impl IsoId {
    pub const ALL: [IsoId; 8] = [
        IsoId::Spp,
        IsoId::Caiso,
        IsoId::Nyiso,
        IsoId::Pjm,
        IsoId::Miso,
        IsoId::Isone,
        IsoId::Ercot,
        IsoId::Ieso,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IsoId::Spp => "SPP",
            IsoId::Caiso => "CAISO",
            IsoId::Nyiso => "NYISO",
            IsoId::Pjm => "PJM",
            IsoId::Miso => "MISO",
            IsoId::Isone => "ISONE",
            IsoId::Ercot => "ERCOT",
            IsoId::Ieso => "IESO",
        }
    }

    pub fn descriptor(self) -> IsoDescriptor {
        use chrono_tz::America;
        use ReportedKind::*;
        let (granularity, reported_kind, zone) = match self {
            IsoId::Spp => (Resolution::FIVE_MINUTES, SystemCurtailedMW, America::Chicago),
            IsoId::Caiso => (Resolution::FIVE_MINUTES, SystemCurtailedMW, America::Los_Angeles),
            IsoId::Nyiso => (Resolution::HOURLY, SystemCurtailedMW, America::New_York),
            IsoId::Pjm => (Resolution::HOURLY, PercentNodesMarginalFuel, America::New_York),
            IsoId::Miso => (Resolution::HOURLY, RegionalMarginalFuelFlag, America::Chicago),
            IsoId::Isone => (Resolution::HOURLY, SystemMarginalFuelFlag, America::New_York),
            IsoId::Ercot => (Resolution::FIVE_MINUTES, CapabilityAndOutput, America::Chicago),
            IsoId::Ieso => (Resolution::HOURLY, CapabilityAndOutput, America::Toronto),
        };
        IsoDescriptor {
            iso_id: self,
            granularity,
            reported_kind,
            zone,
        }
    }
}

impl std::fmt::Display for IsoId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IsoId {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '_', ' '], "");
        let norm = if norm == "ISONE" || norm == "ISONEWENGLAND" {
            "ISONE".to_string()
        } else {
            norm
        };
        IsoId::ALL
            .into_iter()
            .find(|iso| iso.as_str() == norm)
            .ok_or_else(|| IngestError::UnknownIso(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn granularities_per_operator() {
        let five_min: Vec<_> = IsoId::ALL
            .into_iter()
            .filter(|i| i.descriptor().granularity == Resolution::FIVE_MINUTES)
            .collect();
        assert_eq!(five_min, vec![IsoId::Spp, IsoId::Caiso, IsoId::Ercot]);
        for iso in [IsoId::Nyiso, IsoId::Pjm, IsoId::Miso, IsoId::Isone, IsoId::Ieso] {
            assert_eq!(iso.descriptor().granularity, Resolution::HOURLY);
        }
    }

    #[test]
    fn reported_kinds_per_operator() {
        use ReportedKind::*;
        let expected = [
            (IsoId::Spp, SystemCurtailedMW),
            (IsoId::Caiso, SystemCurtailedMW),
            (IsoId::Nyiso, SystemCurtailedMW),
            (IsoId::Pjm, PercentNodesMarginalFuel),
            (IsoId::Miso, RegionalMarginalFuelFlag),
            (IsoId::Isone, SystemMarginalFuelFlag),
            (IsoId::Ercot, CapabilityAndOutput),
            (IsoId::Ieso, CapabilityAndOutput),
        ];
        for (iso, kind) in expected {
            assert_eq!(iso.descriptor().reported_kind, kind, "{iso}");
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("caiso".parse::<IsoId>().unwrap(), IsoId::Caiso);
        assert_eq!("ISO-NE".parse::<IsoId>().unwrap(), IsoId::Isone);
        assert!("ENTSOE".parse::<IsoId>().is_err());
        assert!(IsoId::Miso.descriptor().negative_price_caveat());
        assert!(!IsoId::Spp.descriptor().negative_price_caveat());
    }
}
