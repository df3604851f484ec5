//! Loading catalog data for a command: range restriction, optional
//! downsampling, and target-series selection.

use anyhow::{bail, Context as _};
use chrono::{DateTime, Utc};

use curtailkit::detect::{min_lmp_series, system_curtailment};
use curtailkit::ingest::{Catalog, IsoId};
use curtailkit::timeseries::{align, resample, window_by_index, Aggregation, Resolution, Series, SeriesSet, Unit};

use super::Context;

pub fn open_catalog(ctx: &Context) -> anyhow::Result<Catalog> {
    let root = ctx.data_root()?;
    Ok(Catalog::open(root)?)
}

/// Operators to process: `--iso`, or every dataset in the catalog.
pub fn selected_isos(ctx: &Context, catalog: &Catalog) -> anyhow::Result<Vec<IsoId>> {
    if let Some(iso) = ctx.iso {
        if catalog.dataset(iso).is_none() {
            bail!("no {iso} dataset under {}", catalog.root().display());
        }
        return Ok(vec![iso]);
    }
    let isos: Vec<IsoId> = catalog.datasets().iter().map(|d| d.iso).collect();
    if isos.is_empty() {
        bail!("catalog at {} has no datasets", catalog.root().display());
    }
    Ok(isos)
}

/// The part of `series` inside `[from, to)`, or `None` if nothing overlaps.
pub fn restrict(series: &Series, from: Option<DateTime<Utc>>, to: Option<DateTime<Utc>>) -> Option<Series> {
    let g = series.grid();
    let res = i64::from(g.resolution().seconds());
    let index = |t: DateTime<Utc>| -> usize {
        let d = t.timestamp() - g.start_epoch();
        if d <= 0 {
            0
        } else {
            (d.div_euclid(res) + i64::from(d.rem_euclid(res) != 0)).min(g.len() as i64) as usize
        }
    };
    let i0 = from.map_or(0, index);
    let i1 = to.map_or(g.len(), index);
    if i0 >= i1 {
        return None;
    }
    window_by_index(series, i0, i1 - i0).ok()
}

fn aggregation_for(unit: Unit) -> Aggregation {
    match unit {
        Unit::Boolean01 | Unit::BinIndex => Aggregation::Max,
        _ => Aggregation::Mean,
    }
}

fn downsample(series: Series, target: Option<Resolution>, mode: Aggregation) -> anyhow::Result<Series> {
    match target {
        Some(r) if r != series.grid().resolution() => Ok(resample(&series, r, mode)?),
        _ => Ok(series),
    }
}

fn prepare(ctx: &Context, set: SeriesSet, what: &str, iso: IsoId) -> anyhow::Result<SeriesSet> {
    let res = ctx
        .config
        .resolution_minutes
        .map(|m| Resolution::new(m * 60))
        .transpose()
        .context("resolution_minutes")?;
    let mut out = SeriesSet::new();
    for (id, s) in set {
        let Some(s) = restrict(&s, ctx.from, ctx.to) else {
            continue;
        };
        let mode = aggregation_for(s.unit());
        out.insert(id, downsample(s, res, mode)?);
    }
    if out.is_empty() {
        bail!("no {iso} {what} data in the requested range");
    }
    Ok(out)
}

pub fn load_lmp(ctx: &Context, catalog: &Catalog, iso: IsoId) -> anyhow::Result<SeriesSet> {
    prepare(ctx, catalog.load_lmp(iso)?, "LMP", iso)
}

pub fn load_curtailment(ctx: &Context, catalog: &Catalog, iso: IsoId) -> anyhow::Result<SeriesSet> {
    prepare(ctx, catalog.load_curtailment(iso)?, "curtailment", iso)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Curtailment,
    MinLmp,
    Node(String),
}

impl std::str::FromStr for Target {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "curtailment" => Ok(Target::Curtailment),
            "min-lmp" => Ok(Target::MinLmp),
            _ => match s.strip_prefix("node:") {
                Some(id) if !id.is_empty() => Ok(Target::Node(id.to_string())),
                _ => bail!("unknown target `{s}` (expected curtailment, min-lmp or node:<ID>)"),
            },
        }
    }
}

pub fn target_series(ctx: &Context, catalog: &Catalog, iso: IsoId, target: &Target) -> anyhow::Result<Series> {
    match target {
        Target::Curtailment => Ok(system_curtailment(&load_curtailment(ctx, catalog, iso)?)?),
        Target::MinLmp => Ok(min_lmp_series(load_lmp(ctx, catalog, iso)?.values())?),
        Target::Node(id) => load_lmp(ctx, catalog, iso)?
            .remove(id)
            .with_context(|| format!("node `{id}` not found in {iso} LMP data")),
    }
}

/// Brings two series to the coarser of their resolutions and their common
/// span. `a_mode`/`b_mode` aggregate each side when it has to be coarsened.
pub fn co_register(a: Series, a_mode: Aggregation, b: Series, b_mode: Aggregation) -> anyhow::Result<(Series, Series)> {
    let ra = a.grid().resolution();
    let rb = b.grid().resolution();
    let coarse = if ra.seconds() >= rb.seconds() { ra } else { rb };
    let a = downsample(a, Some(coarse), a_mode)?;
    let b = downsample(b, Some(coarse), b_mode)?;
    align(&a, &b).context("series do not overlap in time")
}

/// Aggregation that keeps each unit meaningful when coarsening.
pub fn natural_aggregation(unit: Unit) -> Aggregation {
    aggregation_for(unit)
}
