//! Reading market data into canonical series.
//!
//! Raw operator files are mapped onto two canonical CSV layouts by
//! [`adapter`] configs, streamed through [`parse_lmp`] / [`parse_curtailment`]
//! with per-line error accounting, placed on grids by [`to_series`], and
//! persisted in the columnar cache by [`write_canonical`].

pub mod adapter;
mod assemble;
mod canonical;
mod catalog;
mod iso;
mod parse;
mod records;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::timeseries::TimeSeriesError;

pub use adapter::{adapt_curtailment, adapt_lmp, AdapterConfig, CurtailmentAdapter, LmpAdapter};
pub use assemble::{curtailment_to_series, curtailment_to_series_with, lmp_to_series, to_series};
pub use canonical::{
    decode_cache, read_cache, read_canonical, write_cache, write_canonical, write_curtailment_csv, write_lmp_csv,
    write_lmp_series_csv, CACHE_MAGIC, CACHE_VERSION,
};
pub use catalog::{grid_covering, Catalog, DatasetEntry, CATALOG_FILE, CURTAILMENT_CACHE, LMP_CACHE};
pub use iso::{IsoDescriptor, IsoId, ReportedKind};
pub use parse::{
    compact_curtailment_header, parse_curtailment, parse_curtailment_with, parse_lmp, parse_lmp_with,
    parse_timestamp_utc, CurtailmentDecoder, CurtailmentParser, ErrorBudget, LmpDecoder, LmpParser, ParseOptions,
    ParseReport, RecordParser, RowDecoder, RowError, CURTAILMENT_HEADER, LMP_HEADER,
};
pub use records::{
    derive_curtailment_mw, derive_curtailment_with, CurtailmentPayload, CurtailmentRecord, DerivedCurtailment,
    LmpRecord, DEFAULT_PERCENT_THRESHOLD,
};

pub(crate) use canonical::format_timestamp;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header: expected `{expected}`, found `{found}`")]
    Schema { expected: String, found: String },
    #[error("error budget exceeded: {errors} malformed rows out of {rows}")]
    BudgetExceeded { errors: usize, rows: usize },
    #[error("duplicate row for `{id}` at {timestamp}")]
    Duplicate { id: String, timestamp: DateTime<Utc> },
    #[error("`{id}` has a row at {timestamp}, which is not a step of the target grid")]
    OffGridTimestamp { id: String, timestamp: DateTime<Utc> },
    #[error("region `{0}` mixes MW and flag records")]
    MixedUnits(String),
    #[error("cache format version {found} is not supported (this build reads version {supported})")]
    Version { found: u16, supported: u16 },
    #[error("malformed cache: {0}")]
    Format(String),
    #[error("adapter config: {0}")]
    Adapter(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("unknown ISO `{0}`")]
    UnknownIso(String),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
}
