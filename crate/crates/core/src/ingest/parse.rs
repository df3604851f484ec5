//! Streaming parsers for the canonical CSV layouts.
//!
//! Malformed rows never stop a parse by themselves: each is recorded with its
//! line number in the [`ParseReport`], and parsing continues until the
//! [`ErrorBudget`] is exhausted.

use std::io::Read;

use chrono::{DateTime, NaiveDate, Utc};
use csv::ByteRecord;
use serde::{Deserialize, Serialize};

use crate::timeseries::Resolution;

use super::records::{CurtailmentPayload, CurtailmentRecord, LmpRecord};
use super::{IngestError, IsoDescriptor, ReportedKind};

pub const LMP_HEADER: [&str; 3] = ["node_id", "timestamp_utc", "price_usd_per_mwh"];
pub const CURTAILMENT_HEADER: [&str; 5] = ["region_id", "timestamp_utc", "kind", "v1", "v2"];

/// Maximum share of malformed rows tolerated before a parse aborts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub max_fraction: f64,
    /// Rows read before the running error rate is enforced mid-stream. The
    /// final rate is always checked at end of input.
    pub grace_rows: usize,
}

impl Default for ErrorBudget {
    fn default() -> Self {
        ErrorBudget {
            max_fraction: 0.001,
            grace_rows: 10_000,
        }
    }
}

impl ErrorBudget {
    pub fn unlimited() -> Self {
        ErrorBudget {
            max_fraction: 1.0,
            grace_rows: usize::MAX,
        }
    }

    fn exceeded(&self, errors: usize, rows: usize) -> bool {
        errors as f64 > self.max_fraction * rows as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParseOptions {
    pub budget: ErrorBudget,
    /// Prices with larger magnitude are rejected as implausible.
    pub price_bound: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            budget: ErrorBudget::default(),
            price_bound: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-based line number in the input, header included.
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParseReport {
    /// Data rows read (accepted plus rejected).
    pub rows: usize,
    pub accepted: usize,
    pub errors: Vec<RowError>,
}

/// Decodes one data row of a particular layout.
pub trait RowDecoder {
    type Record;

    fn check_header(&mut self, header: &ByteRecord) -> Result<(), IngestError>;

    fn decode(&self, row: &ByteRecord) -> Result<Self::Record, String>;
}

enum State {
    Header,
    Rows,
    Done,
}

/// Iterator over decoded records. Fatal problems (bad header, I/O, budget
/// exhaustion) are yielded once as `Err` and end the stream; row-level
/// problems accumulate in [`RecordParser::report`].
pub struct RecordParser<R, D> {
    reader: csv::Reader<R>,
    row: ByteRecord,
    decoder: D,
    budget: ErrorBudget,
    report: ParseReport,
    state: State,
}

impl<R: Read, D: RowDecoder> RecordParser<R, D> {
    pub fn new(input: R, decoder: D, budget: ErrorBudget) -> Self {
        Self::with_delimiter(input, decoder, budget, b',')
    }

    pub fn with_delimiter(input: R, decoder: D, budget: ErrorBudget, delimiter: u8) -> Self {
        let reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .delimiter(delimiter)
            .buffer_capacity(1 << 16)
            .from_reader(input);
        RecordParser {
            reader,
            row: ByteRecord::new(),
            decoder,
            budget,
            report: ParseReport::default(),
            state: State::Header,
        }
    }

    pub fn report(&self) -> &ParseReport {
        &self.report
    }

    pub fn into_report(self) -> ParseReport {
        self.report
    }

    /// Drains the stream, returning every accepted record and the report.
    pub fn collect_all(mut self) -> Result<(Vec<D::Record>, ParseReport), IngestError> {
        let mut out = Vec::new();
        for rec in &mut self {
            out.push(rec?);
        }
        Ok((out, self.report))
    }

    fn fail(&mut self, err: IngestError) -> Option<Result<D::Record, IngestError>> {
        self.state = State::Done;
        Some(Err(err))
    }
}

impl<R: Read, D: RowDecoder> Iterator for RecordParser<R, D> {
    type Item = Result<D::Record, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.state {
                State::Done => return None,
                State::Header => match self.reader.read_byte_record(&mut self.row) {
                    Ok(true) => {
                        if let Err(e) = self.decoder.check_header(&self.row) {
                            return self.fail(e);
                        }
                        self.state = State::Rows;
                    }
                    Ok(false) => {
                        return self.fail(IngestError::Schema {
                            expected: "a header row".into(),
                            found: "empty input".into(),
                        })
                    }
                    Err(e) => return self.fail(e.into()),
                },
                State::Rows => match self.reader.read_byte_record(&mut self.row) {
                    Ok(true) => {
                        if self.row.len() == 1 && self.row[0].is_empty() {
                            continue;
                        }
                        self.report.rows += 1;
                        match self.decoder.decode(&self.row) {
                            Ok(rec) => {
                                self.report.accepted += 1;
                                return Some(Ok(rec));
                            }
                            Err(message) => {
                                let line = self.row.position().map_or(0, |p| p.line());
                                self.report.errors.push(RowError { line, message });
                                let (errors, rows) = (self.report.errors.len(), self.report.rows);
                                if rows >= self.budget.grace_rows && self.budget.exceeded(errors, rows) {
                                    return self.fail(IngestError::BudgetExceeded { errors, rows });
                                }
                            }
                        }
                    }
                    Ok(false) => {
                        self.state = State::Done;
                        let (errors, rows) = (self.report.errors.len(), self.report.rows);
                        if self.budget.exceeded(errors, rows) {
                            return Some(Err(IngestError::BudgetExceeded { errors, rows }));
                        }
                        return None;
                    }
                    Err(e) => {
                        // Invalid UTF-8 is not possible with byte records; anything
                        // else from the reader is I/O.
                        return self.fail(e.into());
                    }
                },
            }
        }
    }
}

fn header_matches(header: &ByteRecord, expected: &[&str]) -> bool {
    header.len() == expected.len()
        && header.iter().zip(expected).enumerate().all(|(i, (got, want))| {
            // Tolerate a UTF-8 byte-order mark on the first column.
            let got = if i == 0 {
                got.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(got)
            } else {
                got
            };
            got == want.as_bytes()
        })
}

fn header_text(header: &ByteRecord) -> String {
    header
        .iter()
        .map(|f| String::from_utf8_lossy(f).into_owned())
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn field_str<'a>(row: &'a ByteRecord, i: usize, name: &str) -> Result<&'a str, String> {
    let raw = row.get(i).ok_or_else(|| format!("missing field `{name}`"))?;
    std::str::from_utf8(raw).map_err(|_| format!("field `{name}` is not valid UTF-8"))
}

pub(crate) fn parse_finite(s: &str, name: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("field `{name}` is not a number: `{s}`"))?;
    if !v.is_finite() {
        return Err(format!("field `{name}` is not finite: `{s}`"));
    }
    Ok(v)
}

pub(crate) fn parse_flag(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "TRUE" | "True" | "1" | "Y" | "y" | "yes" => Ok(true),
        "false" | "FALSE" | "False" | "0" | "N" | "n" | "no" => Ok(false),
        other => Err(format!("flag is not a boolean: `{other}`")),
    }
}

/// Parses an RFC 3339 timestamp into UTC, with a fast path for the canonical
/// `YYYY-MM-DDTHH:MM:SSZ` form.
pub fn parse_timestamp_utc(s: &str) -> Option<DateTime<Utc>> {
    let b = s.as_bytes();
    if b.len() == 20 && b[4] == b'-' && b[7] == b'-' && b[10] == b'T' && b[13] == b':' && b[16] == b':' && b[19] == b'Z'
    {
        let num = |r: std::ops::Range<usize>| -> Option<u32> {
            b[r].iter().try_fold(0u32, |acc, &c| {
                c.is_ascii_digit().then(|| acc * 10 + u32::from(c - b'0'))
            })
        };
        let date = NaiveDate::from_ymd_opt(num(0..4)? as i32, num(5..7)?, num(8..10)?)?;
        let dt = date.and_hms_opt(num(11..13)?, num(14..16)?, num(17..19)?)?;
        return Some(dt.and_utc());
    }
    DateTime::parse_from_rfc3339(s.trim())
        .ok()
        .map(|d| d.with_timezone(&Utc))
}

pub(crate) fn parse_aligned_timestamp(s: &str, granularity: Resolution) -> Result<DateTime<Utc>, String> {
    let t = parse_timestamp_utc(s).ok_or_else(|| format!("timestamp is not RFC 3339: `{s}`"))?;
    if t.timestamp_subsec_nanos() != 0 || t.timestamp().rem_euclid(i64::from(granularity.seconds())) != 0 {
        return Err(format!("timestamp {s} is not on the {granularity} settlement grid"));
    }
    Ok(t)
}

/// Decoder for `node_id,timestamp_utc,price_usd_per_mwh`.
#[derive(Debug, Clone)]
pub struct LmpDecoder {
    granularity: Resolution,
    price_bound: f64,
}

impl LmpDecoder {
    pub fn new(descriptor: &IsoDescriptor, options: &ParseOptions) -> Self {
        LmpDecoder {
            granularity: descriptor.granularity,
            price_bound: options.price_bound,
        }
    }
}

impl RowDecoder for LmpDecoder {
    type Record = LmpRecord;

    fn check_header(&mut self, header: &ByteRecord) -> Result<(), IngestError> {
        if header_matches(header, &LMP_HEADER) {
            Ok(())
        } else {
            Err(IngestError::Schema {
                expected: LMP_HEADER.join(","),
                found: header_text(header),
            })
        }
    }

    fn decode(&self, row: &ByteRecord) -> Result<LmpRecord, String> {
        if row.len() != 3 {
            return Err(format!("expected 3 fields, found {}", row.len()));
        }
        let node = field_str(row, 0, "node_id")?;
        if node.is_empty() {
            return Err("empty node_id".into());
        }
        let timestamp = parse_aligned_timestamp(field_str(row, 1, "timestamp_utc")?, self.granularity)?;
        let price = parse_finite(field_str(row, 2, "price_usd_per_mwh")?, "price_usd_per_mwh")?;
        check_price(price, self.price_bound)?;
        Ok(LmpRecord {
            node_id: node.to_string(),
            timestamp,
            price,
        })
    }
}

pub(crate) fn check_price(price: f64, bound: f64) -> Result<(), String> {
    if price.abs() > bound {
        return Err(format!("price {price} exceeds the sanity bound of {bound}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CurtailmentLayout {
    /// `region_id,timestamp_utc,kind,v1,v2`
    Canonical,
    /// `region_id,timestamp_utc,<value columns for the operator's kind>`
    Compact,
}

/// Decoder for curtailment files in either the canonical five-column layout
/// or the compact per-operator layout.
#[derive(Debug, Clone)]
pub struct CurtailmentDecoder {
    kind: ReportedKind,
    granularity: Resolution,
    layout: CurtailmentLayout,
}

impl CurtailmentDecoder {
    pub fn new(descriptor: &IsoDescriptor) -> Self {
        CurtailmentDecoder {
            kind: descriptor.reported_kind,
            granularity: descriptor.granularity,
            layout: CurtailmentLayout::Canonical,
        }
    }
}

/// Header of the compact layout for `kind`.
pub fn compact_curtailment_header(kind: ReportedKind) -> Vec<&'static str> {
    let mut h = vec!["region_id", "timestamp_utc"];
    h.extend(value_columns(kind));
    h
}

fn value_columns(kind: ReportedKind) -> &'static [&'static str] {
    match kind {
        ReportedKind::SystemCurtailedMW => &["curtailed_mw"],
        ReportedKind::PercentNodesMarginalFuel => &["percent_nodes"],
        ReportedKind::RegionalMarginalFuelFlag | ReportedKind::SystemMarginalFuelFlag => &["flag"],
        ReportedKind::CapabilityAndOutput => &["capability_mw", "output_mw"],
    }
}

/// Builds and validates a payload of `kind` from its value fields.
pub(crate) fn decode_payload(kind: ReportedKind, v1: &str, v2: Option<&str>) -> Result<CurtailmentPayload, String> {
    let non_negative = |s: &str, name: &str| -> Result<f64, String> {
        let v = parse_finite(s, name)?;
        if v < 0.0 {
            return Err(format!("field `{name}` is negative: {v}"));
        }
        Ok(v)
    };
    let payload = match kind {
        ReportedKind::SystemCurtailedMW => CurtailmentPayload::CurtailedMw(non_negative(v1, "curtailed_mw")?),
        ReportedKind::PercentNodesMarginalFuel => {
            let p = non_negative(v1, "percent_nodes")?;
            if p > 100.0 {
                return Err(format!("percent_nodes above 100: {p}"));
            }
            CurtailmentPayload::PercentNodes(p)
        }
        ReportedKind::RegionalMarginalFuelFlag | ReportedKind::SystemMarginalFuelFlag => {
            CurtailmentPayload::Flag(parse_flag(v1)?)
        }
        ReportedKind::CapabilityAndOutput => {
            let v2 = v2.filter(|s| !s.trim().is_empty()).ok_or("missing output_mw")?;
            CurtailmentPayload::CapabilityOutput {
                capability_mw: non_negative(v1, "capability_mw")?,
                output_mw: non_negative(v2, "output_mw")?,
            }
        }
    };
    Ok(payload)
}

impl RowDecoder for CurtailmentDecoder {
    type Record = CurtailmentRecord;

    fn check_header(&mut self, header: &ByteRecord) -> Result<(), IngestError> {
        if header_matches(header, &CURTAILMENT_HEADER) {
            self.layout = CurtailmentLayout::Canonical;
            return Ok(());
        }
        let compact = compact_curtailment_header(self.kind);
        if header_matches(header, &compact) {
            self.layout = CurtailmentLayout::Compact;
            return Ok(());
        }
        Err(IngestError::Schema {
            expected: format!("{} or {}", CURTAILMENT_HEADER.join(","), compact.join(",")),
            found: header_text(header),
        })
    }

    fn decode(&self, row: &ByteRecord) -> Result<CurtailmentRecord, String> {
        let region = field_str(row, 0, "region_id")?;
        if region.is_empty() {
            return Err("empty region_id".into());
        }
        let timestamp = parse_aligned_timestamp(field_str(row, 1, "timestamp_utc")?, self.granularity)?;
        let payload = match self.layout {
            CurtailmentLayout::Canonical => {
                if row.len() != 5 {
                    return Err(format!("expected 5 fields, found {}", row.len()));
                }
                let kind = field_str(row, 2, "kind")?;
                if kind != self.kind.csv_kind() {
                    return Err(format!(
                        "kind `{kind}` does not match the operator's reported data (`{}`)",
                        self.kind.csv_kind()
                    ));
                }
                let v2 = field_str(row, 4, "v2")?;
                if self.kind != ReportedKind::CapabilityAndOutput && !v2.is_empty() {
                    return Err("v2 is only used by cap_out rows".into());
                }
                decode_payload(self.kind, field_str(row, 3, "v1")?, Some(v2))?
            }
            CurtailmentLayout::Compact => {
                let n = 2 + value_columns(self.kind).len();
                if row.len() != n {
                    return Err(format!("expected {n} fields, found {}", row.len()));
                }
                let v2 = if n == 4 {
                    Some(field_str(row, 3, "output_mw")?)
                } else {
                    None
                };
                decode_payload(self.kind, field_str(row, 2, "value")?, v2)?
            }
        };
        Ok(CurtailmentRecord {
            region_id: region.to_string(),
            timestamp,
            payload,
        })
    }
}

pub type LmpParser<R> = RecordParser<R, LmpDecoder>;
pub type CurtailmentParser<R> = RecordParser<R, CurtailmentDecoder>;

/// Streams [`LmpRecord`]s from a canonical LMP CSV.
pub fn parse_lmp<R: Read>(input: R, descriptor: &IsoDescriptor) -> LmpParser<R> {
    parse_lmp_with(input, descriptor, ParseOptions::default())
}

pub fn parse_lmp_with<R: Read>(input: R, descriptor: &IsoDescriptor, options: ParseOptions) -> LmpParser<R> {
    RecordParser::new(input, LmpDecoder::new(descriptor, &options), options.budget)
}

/// Streams [`CurtailmentRecord`]s from a canonical or compact curtailment CSV.
pub fn parse_curtailment<R: Read>(input: R, descriptor: &IsoDescriptor) -> CurtailmentParser<R> {
    parse_curtailment_with(input, descriptor, ParseOptions::default())
}

pub fn parse_curtailment_with<R: Read>(
    input: R,
    descriptor: &IsoDescriptor,
    options: ParseOptions,
) -> CurtailmentParser<R> {
    RecordParser::new(input, CurtailmentDecoder::new(descriptor), options.budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::IsoId;

    fn lenient() -> ParseOptions {
        ParseOptions {
            budget: ErrorBudget::unlimited(),
            ..ParseOptions::default()
        }
    }

    #[test]
    fn canonical_lmp_line() {
        let input = "node_id,timestamp_utc,price_usd_per_mwh\nNODE_A,2022-06-01T07:05:00Z,-4.25\n";
        let (recs, report) = parse_lmp(input.as_bytes(), &IsoId::Caiso.descriptor())
            .collect_all()
            .unwrap();
        assert_eq!(
            recs,
            vec![LmpRecord {
                node_id: "NODE_A".into(),
                timestamp: "2022-06-01T07:05:00Z".parse().unwrap(),
                price: -4.25,
            }]
        );
        assert_eq!(report.rows, 1);
        assert!(report.errors.is_empty());
    }

    #[test]
    fn header_mismatch_is_schema_error() {
        let input = "node,time,price\nA,2022-06-01T07:05:00Z,1\n";
        let mut p = parse_lmp(input.as_bytes(), &IsoId::Caiso.descriptor());
        assert!(matches!(p.next(), Some(Err(IngestError::Schema { .. }))));
        assert!(p.next().is_none());
    }

    #[test]
    fn nan_price_is_row_error_and_stream_continues() {
        let input = "node_id,timestamp_utc,price_usd_per_mwh\n\
                     A,2022-06-01T07:00:00Z,1.0\n\
                     A,2022-06-01T07:05:00Z,NaN\n\
                     A,2022-06-01T07:10:00Z,2.0\n";
        let (recs, report) = parse_lmp_with(input.as_bytes(), &IsoId::Caiso.descriptor(), lenient())
            .collect_all()
            .unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, 3);
    }

    #[test]
    fn default_budget_rejects_high_error_rate_at_end() {
        let input = "node_id,timestamp_utc,price_usd_per_mwh\nA,2022-06-01T07:05:00Z,oops\n";
        let res = parse_lmp(input.as_bytes(), &IsoId::Caiso.descriptor()).collect_all();
        assert!(matches!(res, Err(IngestError::BudgetExceeded { errors: 1, rows: 1 })));
    }

    #[test]
    fn mid_stream_abort_after_grace() {
        let mut input = String::from("node_id,timestamp_utc,price_usd_per_mwh\n");
        for _ in 0..100 {
            input.push_str("A,bad,1\n");
        }
        let options = ParseOptions {
            budget: ErrorBudget {
                max_fraction: 0.1,
                grace_rows: 10,
            },
            ..ParseOptions::default()
        };
        let mut p = parse_lmp_with(input.as_bytes(), &IsoId::Caiso.descriptor(), options);
        assert!(matches!(
            p.next(),
            Some(Err(IngestError::BudgetExceeded { rows: 10, .. }))
        ));
        assert!(p.next().is_none());
    }

    #[test]
    fn off_settlement_and_out_of_bound_rows() {
        let input = "node_id,timestamp_utc,price_usd_per_mwh\n\
                     A,2022-06-01T07:03:00Z,1.0\n\
                     A,2022-06-01T07:05:00Z,20000\n\
                     A,2022-06-01T07:10:00+02:00,3\n\
                     A,2022-06-01T07:10:00Z\n";
        let (recs, report) = parse_lmp_with(input.as_bytes(), &IsoId::Caiso.descriptor(), lenient())
            .collect_all()
            .unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(
            recs[0].timestamp,
            "2022-06-01T05:10:00Z".parse::<DateTime<Utc>>().unwrap()
        );
        let lines: Vec<u64> = report.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 5]);
    }

    #[test]
    fn curtailment_compact_layouts() {
        let spp = "region_id,timestamp_utc,curtailed_mw\nSPP,2022-06-01T07:05:00Z,1250.0\n";
        let (recs, _) = parse_curtailment(spp.as_bytes(), &IsoId::Spp.descriptor())
            .collect_all()
            .unwrap();
        assert_eq!(recs[0].payload, CurtailmentPayload::CurtailedMw(1250.0));

        let ercot = "region_id,timestamp_utc,capability_mw,output_mw\nWIND_1,2022-06-01T07:05:00Z,100.0,80.0\n";
        let (recs, _) = parse_curtailment(ercot.as_bytes(), &IsoId::Ercot.descriptor())
            .collect_all()
            .unwrap();
        assert_eq!(
            recs[0].payload,
            CurtailmentPayload::CapabilityOutput {
                capability_mw: 100.0,
                output_mw: 80.0
            }
        );

        let isone = "region_id,timestamp_utc,flag\nISONE,2022-06-01T07:00:00Z,true\n";
        let (recs, _) = parse_curtailment(isone.as_bytes(), &IsoId::Isone.descriptor())
            .collect_all()
            .unwrap();
        assert_eq!(recs[0].payload, CurtailmentPayload::Flag(true));
    }

    #[test]
    fn curtailment_canonical_layout_checks_kind() {
        let input = "region_id,timestamp_utc,kind,v1,v2\n\
                     PJM,2022-06-01T07:00:00Z,pct,31.4,\n\
                     PJM,2022-06-01T08:00:00Z,mw,31.4,\n\
                     PJM,2022-06-01T09:00:00Z,pct,140,\n";
        let (recs, report) = parse_curtailment_with(input.as_bytes(), &IsoId::Pjm.descriptor(), lenient())
            .collect_all()
            .unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].payload, CurtailmentPayload::PercentNodes(31.4));
        assert_eq!(report.errors.iter().map(|e| e.line).collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn timestamp_fast_path_agrees_with_chrono() {
        for s in ["2022-06-01T07:05:00Z", "1999-12-31T23:55:00Z", "2024-02-29T00:00:00Z"] {
            let slow = DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc);
            assert_eq!(parse_timestamp_utc(s), Some(slow));
        }
        assert_eq!(parse_timestamp_utc("2022-02-30T00:00:00Z"), None);
        assert_eq!(parse_timestamp_utc("2022-06-01 07:05"), None);
    }
}
