//! Seeded synthetic market data for examples, tests and benchmarks.
//!
//! Prices follow a daily solar dip whose depth varies day to day, plus a
//! per-node offset and noise. Curtailment is drawn from the system-minimum
//! price with `P(event | x) = 1 / (1 + exp(-(x0 - x) / scale))`, so a
//! calibration run should recover `x0` as its 50% threshold.

use std::fs::File;
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingest::{
    curtailment_to_series, write_curtailment_csv, write_lmp_series_csv, Catalog, CurtailmentPayload, CurtailmentRecord,
    DatasetEntry, IngestError, IsoId, ReportedKind,
};
use crate::timeseries::{local_seconds_of_day, Resolution, Series, SeriesSet, TimeGrid, TimeSeriesError, Unit};

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `n` steps of uniform minimum prices on `[lo, hi)` and MW curtailment with
/// logistic event probability centred at `x0`.
pub fn logistic_calibration(
    n: usize,
    x0: f64,
    scale: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<(Series, Series), TimeSeriesError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid::from_epoch(1_640_995_200, n, Resolution::FIVE_MINUTES, chrono_tz::UTC)?;
    let mut prices = Vec::with_capacity(n);
    let mut mw = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random_range(lo..hi);
        let event = rng.random::<f64>() < logistic((x0 - x) / scale);
        prices.push(x);
        mw.push(if event { rng.random_range(50.0..1000.0) } else { 0.0 });
    }
    Ok((
        Series::dense(grid, prices, Unit::UsdPerMwh)?,
        Series::dense(grid, mw, Unit::Mw)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketSpec {
    pub iso: IsoId,
    pub start: DateTime<Utc>,
    pub days: usize,
    pub nodes: usize,
    /// Price at which curtailment becomes a coin flip.
    pub x0: f64,
    pub scale: f64,
    pub seed: u64,
}

impl MarketSpec {
    pub fn new(iso: IsoId, days: usize, nodes: usize, seed: u64) -> Self {
        MarketSpec {
            iso,
            start: DateTime::from_timestamp(1_654_041_600, 0).expect("constant"), // 2022-06-01
            days,
            nodes,
            x0: 2.0,
            scale: 1.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub lmp: SeriesSet,
    /// Records in the operator's reporting format.
    pub curtailment_records: Vec<CurtailmentRecord>,
    /// The same records as derived series.
    pub curtailment: SeriesSet,
}

pub fn synthetic_market(spec: &MarketSpec) -> Result<SyntheticMarket, IngestError> {
    let desc = spec.iso.descriptor();
    let res = desc.granularity;
    let steps = spec.days * res.steps_per_day();
    let grid = TimeGrid::new(spec.start, steps, res, desc.zone)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, 3.0).expect("valid sigma");
    let spread = Normal::new(0.0, 4.0).expect("valid sigma");

    let depth: Vec<f64> = (0..spec.days + 1).map(|_| rng.random_range(0.0..70.0)).collect();
    let solar: Vec<f64> = (0..steps)
        .map(|i| {
            let h = f64::from(local_seconds_of_day(grid.epoch_at(i), desc.zone)) / 3600.0;
            (std::f64::consts::PI * (h - 6.0) / 12.0).sin().max(0.0)
        })
        .collect();
    let day_of = |i: usize| i / res.steps_per_day();

    let mut lmp = SeriesSet::new();
    let mut min_price = vec![f64::INFINITY; steps];
    for n in 0..spec.nodes {
        let offset = spread.sample(&mut rng);
        let values: Vec<f64> = (0..steps)
            .map(|i| 35.0 - depth[day_of(i)] * solar[i] + offset + noise.sample(&mut rng))
            .collect();
        for (m, v) in min_price.iter_mut().zip(&values) {
            *m = m.min(*v);
        }
        lmp.insert(
            format!("{}_N{:03}", spec.iso, n),
            Series::dense(grid, values, Unit::UsdPerMwh)?,
        );
    }

    let regions: Vec<String> = match desc.reported_kind {
        ReportedKind::RegionalMarginalFuelFlag => vec![format!("{}-NORTH", spec.iso), format!("{}-SOUTH", spec.iso)],
        _ => vec![spec.iso.to_string()],
    };
    let mut records = Vec::with_capacity(steps * regions.len());
    for region in &regions {
        for (i, &m) in min_price.iter().enumerate() {
            let p = if spec.nodes == 0 {
                0.0
            } else {
                logistic((spec.x0 - m) / spec.scale)
            };
            let event = rng.random::<f64>() < p;
            let amount = if event { rng.random_range(50.0..1500.0) } else { 0.0 };
            let payload = match desc.reported_kind {
                ReportedKind::SystemCurtailedMW => CurtailmentPayload::CurtailedMw(amount),
                ReportedKind::CapabilityAndOutput => {
                    let output = 500.0 + 2000.0 * solar[i];
                    CurtailmentPayload::CapabilityOutput {
                        capability_mw: output + amount,
                        output_mw: output,
                    }
                }
                ReportedKind::PercentNodesMarginalFuel => {
                    CurtailmentPayload::PercentNodes(if event { rng.random_range(1.0..60.0) } else { 0.0 })
                }
                ReportedKind::RegionalMarginalFuelFlag | ReportedKind::SystemMarginalFuelFlag => {
                    CurtailmentPayload::Flag(event)
                }
            };
            records.push(CurtailmentRecord {
                region_id: region.clone(),
                timestamp: grid.timestamp_at(i),
                payload,
            });
        }
    }
    let curtailment = curtailment_to_series(&records, &grid)?;
    Ok(SyntheticMarket {
        lmp,
        curtailment_records: records,
        curtailment,
    })
}

/// Writes `<root>/<ISO>/lmp.csv` and `curtailment.csv` in canonical form and
/// registers them in the root catalog.
pub fn write_market(root: &Path, iso: IsoId, market: &SyntheticMarket) -> Result<Catalog, IngestError> {
    let mut catalog = if root.join(crate::ingest::CATALOG_FILE).is_file() {
        Catalog::open(root)?
    } else {
        Catalog::empty(root)
    };
    let dir = catalog.dataset_dir(iso);
    std::fs::create_dir_all(&dir)?;
    write_lmp_series_csv(File::create(dir.join("lmp.csv"))?, &market.lmp)?;
    write_curtailment_csv(File::create(dir.join("curtailment.csv"))?, &market.curtailment_records)?;
    let mut entry = DatasetEntry::new(iso);
    entry.lmp_files.push(Path::new(iso.as_str()).join("lmp.csv"));
    entry
        .curtailment_files
        .push(Path::new(iso.as_str()).join("curtailment.csv"));
    entry.node_roster = market.lmp.keys().cloned().collect();
    catalog.upsert(entry);
    catalog.save()?;
    Ok(catalog)
}
