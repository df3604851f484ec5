//! Canonical on-disk formats.
//!
//! * LMP and curtailment CSV files, one record per line.
//! * The columnar cache: a compact binary container holding whole series.
//!
//! Cache layout (all integers little-endian):
//!
//! ```text
//! "CKT1"  u16 version  u32 series_count
//! per series:
//!   u32 id_len, id (UTF-8)
//!   u8  unit code
//!   u32 resolution_seconds
//!   i64 start (epoch seconds)
//!   u64 length
//!   u16 zone_len, zone name (IANA)
//!   gap bitmap, ceil(length / 8) bytes, bit i set = step i is a gap
//!   length x f64 values (gap slots hold 0.0)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use chrono_tz::Tz;

use crate::timeseries::{Resolution, Series, SeriesSet, TimeGrid, Unit};

use super::parse::{CURTAILMENT_HEADER, LMP_HEADER};
use super::records::{CurtailmentPayload, CurtailmentRecord, LmpRecord};
use super::IngestError;

pub const CACHE_MAGIC: &[u8; 4] = b"CKT1";
pub const CACHE_VERSION: u16 = 1;

pub(crate) fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn write_lmp_csv<'a, W: Write>(
    out: W,
    records: impl IntoIterator<Item = &'a LmpRecord>,
) -> Result<(), IngestError> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", LMP_HEADER.join(","))?;
    for r in records {
        writeln!(w, "{},{},{}", r.node_id, format_timestamp(r.timestamp), r.price)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a priced series set as canonical LMP rows (gaps are omitted).
pub fn write_lmp_series_csv<W: Write>(out: W, set: &SeriesSet) -> Result<(), IngestError> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", LMP_HEADER.join(","))?;
    for (id, s) in set {
        for (i, v) in s.values().iter().enumerate() {
            if let Some(v) = v {
                writeln!(w, "{},{},{}", id, format_timestamp(s.grid().timestamp_at(i)), v)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_curtailment_csv<'a, W: Write>(
    out: W,
    records: impl IntoIterator<Item = &'a CurtailmentRecord>,
) -> Result<(), IngestError> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", CURTAILMENT_HEADER.join(","))?;
    for r in records {
        let ts = format_timestamp(r.timestamp);
        match r.payload {
            CurtailmentPayload::CurtailedMw(v) => writeln!(w, "{},{},mw,{},", r.region_id, ts, v)?,
            CurtailmentPayload::Flag(b) => writeln!(w, "{},{},flag,{},", r.region_id, ts, b)?,
            CurtailmentPayload::PercentNodes(p) => writeln!(w, "{},{},pct,{},", r.region_id, ts, p)?,
            CurtailmentPayload::CapabilityOutput {
                capability_mw,
                output_mw,
            } => writeln!(w, "{},{},cap_out,{},{}", r.region_id, ts, capability_mw, output_mw)?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_cache<W: Write>(out: W, set: &SeriesSet) -> Result<(), IngestError> {
    let mut w = BufWriter::new(out);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    let count = u32::try_from(set.len()).map_err(|_| IngestError::Format("too many series".into()))?;
    w.write_all(&count.to_le_bytes())?;
    for (id, s) in set {
        let id_len = u32::try_from(id.len()).map_err(|_| IngestError::Format("series id too long".into()))?;
        w.write_all(&id_len.to_le_bytes())?;
        w.write_all(id.as_bytes())?;
        w.write_all(&[s.unit().code()])?;
        let g = s.grid();
        w.write_all(&g.resolution().seconds().to_le_bytes())?;
        w.write_all(&g.start_epoch().to_le_bytes())?;
        w.write_all(&(g.len() as u64).to_le_bytes())?;
        let zone = g.zone().name();
        w.write_all(&(zone.len() as u16).to_le_bytes())?;
        w.write_all(zone.as_bytes())?;

        let mut bitmap = vec![0u8; g.len().div_ceil(8)];
        for (i, v) in s.values().iter().enumerate() {
            if v.is_none() {
                bitmap[i / 8] |= 1 << (i % 8);
            }
        }
        w.write_all(&bitmap)?;
        let mut buf = Vec::with_capacity(g.len() * 8);
        for v in s.values() {
            buf.extend_from_slice(&v.unwrap_or(0.0).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IngestError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| IngestError::Format("truncated cache file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], IngestError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u16(&mut self) -> Result<u16, IngestError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, IngestError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, IngestError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn i64(&mut self) -> Result<i64, IngestError> {
        Ok(i64::from_le_bytes(self.array()?))
    }

    fn str(&mut self, n: usize) -> Result<&'a str, IngestError> {
        std::str::from_utf8(self.take(n)?).map_err(|_| IngestError::Format("invalid UTF-8 in cache".into()))
    }
}

pub fn read_cache<R: Read>(mut input: R) -> Result<SeriesSet, IngestError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    decode_cache(&buf)
}

pub fn decode_cache(buf: &[u8]) -> Result<SeriesSet, IngestError> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != CACHE_MAGIC {
        return Err(IngestError::Format("not a columnar cache file (bad magic)".into()));
    }
    let version = c.u16()?;
    if version != CACHE_VERSION {
        return Err(IngestError::Version {
            found: version,
            supported: CACHE_VERSION,
        });
    }
    let count = c.u32()?;
    let mut set = SeriesSet::new();
    for _ in 0..count {
        let id_len = c.u32()? as usize;
        let id = c.str(id_len)?.to_string();
        let unit_code = c.array::<1>()?[0];
        let unit =
            Unit::from_code(unit_code).ok_or_else(|| IngestError::Format(format!("unknown unit code {unit_code}")))?;
        let resolution = Resolution::new(c.u32()?)?;
        let start = c.i64()?;
        let len = usize::try_from(c.u64()?).map_err(|_| IngestError::Format("series too long".into()))?;
        let zone_len = c.u16()? as usize;
        let zone_name = c.str(zone_len)?;
        let zone: Tz = zone_name
            .parse()
            .map_err(|_| IngestError::Format(format!("unknown time zone `{zone_name}`")))?;
        let bitmap = c.take(len.div_ceil(8))?;
        let raw = c.take(
            len.checked_mul(8)
                .ok_or_else(|| IngestError::Format("series too long".into()))?,
        )?;
        let values = raw
            .chunks_exact(8)
            .enumerate()
            .map(|(i, b)| {
                let gap = bitmap[i / 8] & (1 << (i % 8)) != 0;
                (!gap).then(|| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
            })
            .collect();
        let grid = TimeGrid::from_epoch(start, len, resolution, zone)?;
        if set.insert(id.clone(), Series::new(grid, values, unit)?).is_some() {
            return Err(IngestError::Format(format!("duplicate series id `{id}`")));
        }
    }
    if c.pos != buf.len() {
        return Err(IngestError::Format("trailing bytes after last series".into()));
    }
    Ok(set)
}

/// Persists a series set as a columnar cache file.
pub fn write_canonical(path: impl AsRef<Path>, set: &SeriesSet) -> Result<(), IngestError> {
    write_cache(File::create(path)?, set)
}

pub fn read_canonical(path: impl AsRef<Path>) -> Result<SeriesSet, IngestError> {
    read_cache(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_set() -> SeriesSet {
        let g = TimeGrid::from_epoch(1_654_066_800, 10, Resolution::FIVE_MINUTES, chrono_tz::America::Chicago).unwrap();
        let mut set = SeriesSet::new();
        let mut v: Vec<Option<f64>> = (0..10).map(|i| Some(f64::from(i) - 4.5)).collect();
        v[3] = None;
        v[9] = Some(-0.0);
        set.insert("NODE_A".into(), Series::new(g, v, Unit::UsdPerMwh).unwrap());
        set.insert(
            "flag".into(),
            Series::dense(
                g,
                vec![0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
                Unit::Boolean01,
            )
            .unwrap(),
        );
        set
    }

    #[test]
    fn cache_round_trip_is_bit_exact() {
        let set = sample_set();
        let mut buf = Vec::new();
        write_cache(&mut buf, &set).unwrap();
        let back = decode_cache(&buf).unwrap();
        assert_eq!(back.len(), set.len());
        for (id, s) in &set {
            assert!(back[id].bit_eq(s), "{id}");
        }
    }

    #[test]
    fn empty_set_round_trips() {
        let mut buf = Vec::new();
        write_cache(&mut buf, &SeriesSet::new()).unwrap();
        assert_eq!(buf.len(), 10);
        assert!(decode_cache(&buf).unwrap().is_empty());
    }

    #[test]
    fn future_version_is_rejected() {
        let mut buf = Vec::new();
        write_cache(&mut buf, &sample_set()).unwrap();
        buf[4..6].copy_from_slice(&2u16.to_le_bytes());
        assert!(matches!(
            decode_cache(&buf),
            Err(IngestError::Version { found: 2, supported: 1 })
        ));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        assert!(matches!(decode_cache(b"XXXX"), Err(IngestError::Format(_))));
        let mut buf = Vec::new();
        write_cache(&mut buf, &sample_set()).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(decode_cache(&buf), Err(IngestError::Format(_))));
    }

    #[test]
    fn csv_writers_round_trip_through_parsers() {
        use crate::ingest::{parse_curtailment, parse_lmp, IsoId};
        let recs = vec![
            LmpRecord {
                node_id: "A".into(),
                timestamp: "2022-06-01T07:05:00Z".parse().unwrap(),
                price: -4.25,
            },
            LmpRecord {
                node_id: "A".into(),
                timestamp: "2022-06-01T07:10:00Z".parse().unwrap(),
                price: 0.1 + 0.2,
            },
        ];
        let mut buf = Vec::new();
        write_lmp_csv(&mut buf, &recs).unwrap();
        let (back, _) = parse_lmp(&buf[..], &IsoId::Caiso.descriptor()).collect_all().unwrap();
        assert_eq!(back, recs);

        let crecs = vec![CurtailmentRecord {
            region_id: "W".into(),
            timestamp: "2022-06-01T07:05:00Z".parse().unwrap(),
            payload: CurtailmentPayload::CapabilityOutput {
                capability_mw: 100.0,
                output_mw: 80.5,
            },
        }];
        let mut buf = Vec::new();
        write_curtailment_csv(&mut buf, &crecs).unwrap();
        let (back, _) = parse_curtailment(&buf[..], &IsoId::Ercot.descriptor())
            .collect_all()
            .unwrap();
        assert_eq!(back, crecs);
    }
}
