//! Column-mapping adapters for operator-native download formats.
//!
//! Each operator publishes its own CSV layout and changes it from time to time,
//! so raw files are converted by a small declarative config rather than a
//! bespoke parser per market:
//!
//! ```toml
//! [lmp]
//! node_column = "NODE"
//! timestamp_column = "INTERVALSTARTTIME_GMT"
//! timestamp_format = "%Y-%m-%dT%H:%M:%S%:z"
//! price_column = "LMP"
//!
//! [curtailment]
//! region = "CAISO"
//! timestamp_column = "Date"
//! timestamp_format = "%m/%d/%Y %H:%M"
//! timezone = "America/Los_Angeles"
//! value_columns = ["Wind Curtailment"]
//! ```

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, LocalResult, NaiveDateTime, TimeDelta, TimeZone, Utc};
use chrono_tz::Tz;
use csv::ByteRecord;
use serde::{Deserialize, Serialize};

use crate::timeseries::Resolution;

use super::parse::{
    check_price, decode_payload, field_str, parse_finite, parse_timestamp_utc, ParseOptions, RecordParser, RowDecoder,
};
use super::records::{CurtailmentRecord, LmpRecord};
use super::{IngestError, IsoDescriptor, ReportedKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmbiguousTime {
    /// Reject local times that occur twice (autumn DST transition).
    #[default]
    Reject,
    Earliest,
    Latest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimestampSpec {
    pub timestamp_column: String,
    /// `chrono` format string; RFC 3339 when absent.
    #[serde(default)]
    pub timestamp_format: Option<String>,
    /// Zone for formats without an offset. Defaults to UTC.
    #[serde(default)]
    pub timezone: Option<String>,
    /// Added to every parsed instant, e.g. `-5` for interval-ending stamps.
    #[serde(default)]
    pub shift_minutes: i64,
    #[serde(default)]
    pub ambiguous: AmbiguousTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmpAdapter {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub node_column: String,
    pub price_column: String,
    #[serde(flatten)]
    pub timestamp: TimestampSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurtailmentAdapter {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Column carrying the region id.
    #[serde(default)]
    pub region_column: Option<String>,
    /// Fixed region id when the file has no region column.
    #[serde(default)]
    pub region: Option<String>,
    /// One column, or two (`capability`, `output`) for capability-and-output data.
    pub value_columns: Vec<String>,
    #[serde(flatten)]
    pub timestamp: TimestampSpec,
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterConfig {
    #[serde(default)]
    pub lmp: Option<LmpAdapter>,
    #[serde(default)]
    pub curtailment: Option<CurtailmentAdapter>,
}

impl AdapterConfig {
    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::Adapter(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Timestamp parsing resolved against a concrete spec.
#[derive(Debug, Clone)]
struct TimestampParser {
    column: usize,
    format: Option<String>,
    has_offset: bool,
    zone: Tz,
    shift: TimeDelta,
    ambiguous: AmbiguousTime,
    granularity: Resolution,
}

impl TimestampParser {
    fn new(spec: &TimestampSpec, column: usize, granularity: Resolution) -> Result<Self, IngestError> {
        let zone = match &spec.timezone {
            Some(z) => z
                .parse()
                .map_err(|_| IngestError::Adapter(format!("unknown time zone `{z}`")))?,
            None => Tz::UTC,
        };
        let has_offset = spec
            .timestamp_format
            .as_deref()
            .is_some_and(|f| f.contains("%z") || f.contains("%:z") || f.contains("%#z"));
        Ok(TimestampParser {
            column,
            format: spec.timestamp_format.clone(),
            has_offset,
            zone,
            shift: TimeDelta::minutes(spec.shift_minutes),
            ambiguous: spec.ambiguous,
            granularity,
        })
    }

    fn parse(&self, row: &ByteRecord) -> Result<DateTime<Utc>, String> {
        let s = field_str(row, self.column, "timestamp")?.trim();
        let t = match &self.format {
            None => parse_timestamp_utc(s).ok_or_else(|| format!("timestamp is not RFC 3339: `{s}`"))?,
            Some(fmt) if self.has_offset => DateTime::parse_from_str(s, fmt)
                .map_err(|e| format!("timestamp `{s}` does not match `{fmt}`: {e}"))?
                .with_timezone(&Utc),
            Some(fmt) => {
                let naive = NaiveDateTime::parse_from_str(s, fmt)
                    .map_err(|e| format!("timestamp `{s}` does not match `{fmt}`: {e}"))?;
                match (self.zone.from_local_datetime(&naive), self.ambiguous) {
                    (LocalResult::Single(t), _) => t.with_timezone(&Utc),
                    (LocalResult::Ambiguous(a, _), AmbiguousTime::Earliest) => a.with_timezone(&Utc),
                    (LocalResult::Ambiguous(_, b), AmbiguousTime::Latest) => b.with_timezone(&Utc),
                    (LocalResult::Ambiguous(..), AmbiguousTime::Reject) => {
                        return Err(format!("local time `{s}` is ambiguous in {}", self.zone))
                    }
                    (LocalResult::None, _) => return Err(format!("local time `{s}` does not exist in {}", self.zone)),
                }
            }
        } + self.shift;
        if t.timestamp().rem_euclid(i64::from(self.granularity.seconds())) != 0 {
            return Err(format!(
                "timestamp {s} is not on the {} settlement grid",
                self.granularity
            ));
        }
        Ok(t)
    }
}

fn column_index(header: &ByteRecord, name: &str) -> Result<usize, IngestError> {
    header
        .iter()
        .enumerate()
        .position(|(i, h)| {
            let h = if i == 0 {
                h.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(h)
            } else {
                h
            };
            std::str::from_utf8(h).is_ok_and(|h| h.trim() == name)
        })
        .ok_or_else(|| IngestError::Schema {
            expected: format!("a column named `{name}`"),
            found: header
                .iter()
                .map(|f| String::from_utf8_lossy(f).into_owned())
                .collect::<Vec<_>>()
                .join(","),
        })
}

pub struct LmpAdapterDecoder {
    config: LmpAdapter,
    granularity: Resolution,
    price_bound: f64,
    resolved: Option<(usize, usize, TimestampParser)>,
}

impl RowDecoder for LmpAdapterDecoder {
    type Record = LmpRecord;

    fn check_header(&mut self, header: &ByteRecord) -> Result<(), IngestError> {
        let node = column_index(header, &self.config.node_column)?;
        let price = column_index(header, &self.config.price_column)?;
        let ts_col = column_index(header, &self.config.timestamp.timestamp_column)?;
        let ts = TimestampParser::new(&self.config.timestamp, ts_col, self.granularity)?;
        self.resolved = Some((node, price, ts));
        Ok(())
    }

    fn decode(&self, row: &ByteRecord) -> Result<LmpRecord, String> {
        let (node, price, ts) = self.resolved.as_ref().expect("header checked before rows");
        let node_id = field_str(row, *node, "node")?.trim();
        if node_id.is_empty() {
            return Err("empty node id".into());
        }
        let price = parse_finite(field_str(row, *price, "price")?, "price")?;
        check_price(price, self.price_bound)?;
        Ok(LmpRecord {
            node_id: node_id.to_string(),
            timestamp: ts.parse(row)?,
            price,
        })
    }
}

pub struct CurtailmentAdapterDecoder {
    config: CurtailmentAdapter,
    kind: ReportedKind,
    granularity: Resolution,
    resolved: Option<(Option<usize>, Vec<usize>, TimestampParser)>,
}

impl RowDecoder for CurtailmentAdapterDecoder {
    type Record = CurtailmentRecord;

    fn check_header(&mut self, header: &ByteRecord) -> Result<(), IngestError> {
        let needed = if self.kind == ReportedKind::CapabilityAndOutput {
            2
        } else {
            1
        };
        if self.config.value_columns.len() != needed {
            return Err(IngestError::Adapter(format!(
                "{} data needs {needed} value column(s), config lists {}",
                self.kind.describe(),
                self.config.value_columns.len()
            )));
        }
        let region = match (&self.config.region_column, &self.config.region) {
            (Some(col), _) => Some(column_index(header, col)?),
            (None, Some(_)) => None,
            (None, None) => return Err(IngestError::Adapter("set either `region_column` or `region`".into())),
        };
        let values = self
            .config
            .value_columns
            .iter()
            .map(|c| column_index(header, c))
            .collect::<Result<Vec<_>, _>>()?;
        let ts_col = column_index(header, &self.config.timestamp.timestamp_column)?;
        let ts = TimestampParser::new(&self.config.timestamp, ts_col, self.granularity)?;
        self.resolved = Some((region, values, ts));
        Ok(())
    }

    fn decode(&self, row: &ByteRecord) -> Result<CurtailmentRecord, String> {
        let (region, values, ts) = self.resolved.as_ref().expect("header checked before rows");
        let region_id = match region {
            Some(i) => field_str(row, *i, "region")?.trim().to_string(),
            None => self.config.region.clone().unwrap_or_default(),
        };
        if region_id.is_empty() {
            return Err("empty region id".into());
        }
        let v1 = field_str(row, values[0], &self.config.value_columns[0])?;
        let v2 = match values.get(1) {
            Some(&i) => Some(field_str(row, i, &self.config.value_columns[1])?),
            None => None,
        };
        Ok(CurtailmentRecord {
            region_id,
            timestamp: ts.parse(row)?,
            payload: decode_payload(self.kind, v1, v2)?,
        })
    }
}

fn delimiter_byte(c: char) -> Result<u8, IngestError> {
    u8::try_from(c).map_err(|_| IngestError::Adapter(format!("delimiter `{c}` is not a single byte")))
}

/// Streams canonical LMP records out of an operator-native file.
pub fn adapt_lmp<R: Read>(
    input: R,
    descriptor: &IsoDescriptor,
    config: &LmpAdapter,
    options: ParseOptions,
) -> Result<RecordParser<R, LmpAdapterDecoder>, IngestError> {
    let decoder = LmpAdapterDecoder {
        config: config.clone(),
        granularity: descriptor.granularity,
        price_bound: options.price_bound,
        resolved: None,
    };
    Ok(RecordParser::with_delimiter(
        input,
        decoder,
        options.budget,
        delimiter_byte(config.delimiter)?,
    ))
}

/// Streams canonical curtailment records out of an operator-native file.
pub fn adapt_curtailment<R: Read>(
    input: R,
    descriptor: &IsoDescriptor,
    config: &CurtailmentAdapter,
    options: ParseOptions,
) -> Result<RecordParser<R, CurtailmentAdapterDecoder>, IngestError> {
    let decoder = CurtailmentAdapterDecoder {
        config: config.clone(),
        kind: descriptor.reported_kind,
        granularity: descriptor.granularity,
        resolved: None,
    };
    Ok(RecordParser::with_delimiter(
        input,
        decoder,
        options.budget,
        delimiter_byte(config.delimiter)?,
    ))
}
