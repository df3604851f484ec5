//! Parse a canonical LMP CSV containing a malformed row, place it on a grid,
//! and round-trip it through the columnar cache.

use std::io::Cursor;

use curtailkit::ingest::{
    grid_covering, lmp_to_series, parse_lmp_with, read_canonical, write_canonical, ErrorBudget, IsoId, ParseOptions,
};

const CSV: &str = "\
node_id,timestamp_utc,price_usd_per_mwh
SP15,2022-06-01T00:00:00Z,31.5
SP15,2022-06-01T00:05:00Z,-4.25
SP15,2022-06-01T00:10:00Z,not-a-price
NP15,2022-06-01T00:00:00Z,28.0
NP15,2022-06-01T00:10:00Z,0.5
";

fn main() -> anyhow::Result<()> {
    let desc = IsoId::Caiso.descriptor();
    // One bad row in five breaks the default 0.1% budget.
    let strict = parse_lmp_with(Cursor::new(CSV), &desc, ParseOptions::default()).collect_all();
    println!(
        "default budget: {}",
        strict.err().map_or("accepted".into(), |e| e.to_string())
    );

    let lenient = ParseOptions {
        budget: ErrorBudget {
            max_fraction: 0.25,
            ..ErrorBudget::default()
        },
        ..ParseOptions::default()
    };
    let (records, report) = parse_lmp_with(Cursor::new(CSV), &desc, lenient).collect_all()?;
    println!(
        "rows={} accepted={} errors={}",
        report.rows,
        report.accepted,
        report.errors.len()
    );
    for e in &report.errors {
        println!("  {e}");
    }

    let grid = grid_covering(records.iter().map(|r| r.timestamp), &desc).expect("records present");
    let set = lmp_to_series(&records, &grid)?;
    for (node, s) in &set {
        println!("{node}: {:?}", s.values());
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("lmp.ckt");
    write_canonical(&path, &set)?;
    let back = read_canonical(&path)?;
    let identical = set.iter().zip(&back).all(|((a, s), (b, t))| a == b && s.bit_eq(t));
    println!("cache round trip bit-identical: {identical}");
    Ok(())
}
