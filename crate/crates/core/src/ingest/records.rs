use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::timeseries::Unit;

use super::ReportedKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmpRecord {
    pub node_id: String,
    pub timestamp: DateTime<Utc>,
    /// USD/MWh.
    pub price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurtailmentPayload {
    CurtailedMw(f64),
    Flag(bool),
    /// 0 to 100.
    PercentNodes(f64),
    CapabilityOutput {
        capability_mw: f64,
        output_mw: f64,
    },
}

impl CurtailmentPayload {
    /// Whether this payload variant is what `kind` publishes.
    pub fn matches(&self, kind: ReportedKind) -> bool {
        use ReportedKind::*;
        matches!(
            (self, kind),
            (CurtailmentPayload::CurtailedMw(_), SystemCurtailedMW)
                | (CurtailmentPayload::PercentNodes(_), PercentNodesMarginalFuel)
                | (
                    CurtailmentPayload::Flag(_),
                    RegionalMarginalFuelFlag | SystemMarginalFuelFlag
                )
                | (CurtailmentPayload::CapabilityOutput { .. }, CapabilityAndOutput)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurtailmentRecord {
    pub region_id: String,
    pub timestamp: DateTime<Utc>,
    pub payload: CurtailmentPayload,
}

/// Curtailment reduced to a single number: MW where the operator reports
/// power, otherwise a 0/1 proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCurtailment {
    pub value: f64,
    pub unit: Unit,
}

/// Default rule: any percentage above zero counts as curtailment somewhere.
pub const DEFAULT_PERCENT_THRESHOLD: f64 = 0.0;

pub fn derive_curtailment_mw(record: &CurtailmentRecord) -> DerivedCurtailment {
    derive_curtailment_with(record, DEFAULT_PERCENT_THRESHOLD)
}

/// As [`derive_curtailment_mw`], with `percent_nodes > percent_threshold`
/// deciding the flag for percent-of-nodes payloads.
pub fn derive_curtailment_with(record: &CurtailmentRecord, percent_threshold: f64) -> DerivedCurtailment {
    let flag = |b: bool| DerivedCurtailment {
        value: if b { 1.0 } else { 0.0 },
        unit: Unit::Boolean01,
    };
    match record.payload {
        CurtailmentPayload::CurtailedMw(mw) => DerivedCurtailment {
            value: mw.max(0.0),
            unit: Unit::Mw,
        },
        CurtailmentPayload::CapabilityOutput {
            capability_mw,
            output_mw,
        } => DerivedCurtailment {
            value: (capability_mw - output_mw).max(0.0),
            unit: Unit::Mw,
        },
        CurtailmentPayload::Flag(b) => flag(b),
        CurtailmentPayload::PercentNodes(p) => flag(p > percent_threshold),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(payload: CurtailmentPayload) -> CurtailmentRecord {
        CurtailmentRecord {
            region_id: "R".into(),
            timestamp: DateTime::from_timestamp(0, 0).unwrap(),
            payload,
        }
    }

    #[test]
    fn capability_minus_output_is_clamped() {
        let d = derive_curtailment_mw(&rec(CurtailmentPayload::CapabilityOutput {
            capability_mw: 100.0,
            output_mw: 80.0,
        }));
        assert_eq!(
            d,
            DerivedCurtailment {
                value: 20.0,
                unit: Unit::Mw
            }
        );
        let d = derive_curtailment_mw(&rec(CurtailmentPayload::CapabilityOutput {
            capability_mw: 80.0,
            output_mw: 100.0,
        }));
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn percent_and_flags_become_boolean() {
        let d = derive_curtailment_mw(&rec(CurtailmentPayload::PercentNodes(31.4)));
        assert_eq!(
            d,
            DerivedCurtailment {
                value: 1.0,
                unit: Unit::Boolean01
            }
        );
        assert_eq!(
            derive_curtailment_mw(&rec(CurtailmentPayload::PercentNodes(0.0))).value,
            0.0
        );
        assert_eq!(
            derive_curtailment_with(&rec(CurtailmentPayload::PercentNodes(31.4)), 50.0).value,
            0.0
        );
        assert_eq!(derive_curtailment_mw(&rec(CurtailmentPayload::Flag(true))).value, 1.0);
        assert_eq!(
            derive_curtailment_mw(&rec(CurtailmentPayload::CurtailedMw(1250.0))).value,
            1250.0
        );
    }

    #[test]
    fn payload_kind_consistency() {
        assert!(CurtailmentPayload::Flag(true).matches(ReportedKind::SystemMarginalFuelFlag));
        assert!(CurtailmentPayload::Flag(true).matches(ReportedKind::RegionalMarginalFuelFlag));
        assert!(!CurtailmentPayload::Flag(true).matches(ReportedKind::SystemCurtailedMW));
    }
}
