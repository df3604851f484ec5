use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use chrono::{DateTime, Utc};
use clap::{Args, ValueEnum};

use curtailkit::ingest::{
    adapt_curtailment, adapt_lmp, curtailment_to_series, grid_covering, lmp_to_series, parse_curtailment_with,
    parse_lmp_with, write_canonical, write_curtailment_csv, write_lmp_csv, AdapterConfig, Catalog, DatasetEntry,
    ErrorBudget, IsoDescriptor, IsoId, ParseOptions, ParseReport, CATALOG_FILE, CURTAILMENT_CACHE, LMP_CACHE,
};
use curtailkit::synth::{synthetic_market, write_market, MarketSpec};

use super::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Lmp,
    Curtailment,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub kind: DataKind,
    /// Adapter config for operator-native layouts; omit for canonical CSV.
    #[arg(long, value_name = "PATH")]
    pub adapter: Option<PathBuf>,
    /// Largest tolerated share of malformed rows.
    #[arg(long, default_value_t = ErrorBudget::default().max_fraction)]
    pub max_error_fraction: f64,
    #[arg(required = true, value_name = "FILE")]
    pub files: Vec<PathBuf>,
}

fn in_range(t: DateTime<Utc>, ctx: &Context) -> bool {
    ctx.from.is_none_or(|f| t >= f) && ctx.to.is_none_or(|e| t < e)
}

fn print_report(path: &Path, report: &ParseReport) {
    println!(
        "{}: rows={} errors={}",
        path.display(),
        report.rows,
        report.errors.len()
    );
    for e in &report.errors {
        println!("  {e}");
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

/// Parses every input file with the canonical parser or the adapter.
fn read_all<T>(
    files: &[PathBuf],
    mut parse: impl FnMut(BufReader<File>) -> anyhow::Result<(Vec<T>, ParseReport)>,
) -> anyhow::Result<(Vec<T>, ParseReport)> {
    let mut all = Vec::new();
    let mut total = ParseReport::default();
    for path in files {
        let (records, report) = parse(open(path)?).with_context(|| format!("ingesting {}", path.display()))?;
        print_report(path, &report);
        total.rows += report.rows;
        total.accepted += report.accepted;
        total.errors.extend(report.errors);
        all.extend(records);
    }
    Ok((all, total))
}

fn catalog_at(root: &Path) -> anyhow::Result<Catalog> {
    std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    if root.join(CATALOG_FILE).is_file() || std::fs::read_dir(root)?.next().is_some() {
        Ok(Catalog::open(root)?)
    } else {
        Ok(Catalog::empty(root))
    }
}

pub fn ingest(ctx: &Context, args: &IngestArgs) -> anyhow::Result<()> {
    let iso = ctx.require_iso()?;
    let desc: IsoDescriptor = iso.descriptor();
    let root = ctx
        .data
        .as_deref()
        .context("no data directory: pass --data or set CURTAILKIT_DATA")?;
    let mut catalog = catalog_at(root)?;
    let adapter = args.adapter.as_ref().map(AdapterConfig::load).transpose()?;
    let options = ParseOptions {
        budget: ErrorBudget {
            max_fraction: args.max_error_fraction,
            ..ErrorBudget::default()
        },
        ..ParseOptions::default()
    };
    let dir = catalog.dataset_dir(iso);
    std::fs::create_dir_all(&dir)?;
    let mut entry = catalog.dataset(iso).cloned().unwrap_or_else(|| DatasetEntry::new(iso));

    let total = match args.kind {
        DataKind::Lmp => {
            let layout = adapter
                .as_ref()
                .map(|a| a.lmp.clone().context("adapter config has no [lmp] section"));
            let layout = layout.transpose()?;
            let (mut records, report) = read_all(&args.files, |r| match &layout {
                Some(cfg) => Ok(adapt_lmp(r, &desc, cfg, options)?.collect_all()?),
                None => Ok(parse_lmp_with(r, &desc, options).collect_all()?),
            })?;
            records.retain(|r| in_range(r.timestamp, ctx));
            let grid = grid_covering(records.iter().map(|r| r.timestamp), &desc).context("no LMP rows to ingest")?;
            let set = lmp_to_series(&records, &grid)?;
            write_lmp_csv(File::create(dir.join("lmp.csv"))?, &records)?;
            write_canonical(dir.join(LMP_CACHE), &set)?;
            entry.lmp_files = vec![Path::new(iso.as_str()).join("lmp.csv")];
            entry.node_roster = set.keys().cloned().collect();
            report
        }
        DataKind::Curtailment => {
            let layout = adapter.as_ref().map(|a| {
                a.curtailment
                    .clone()
                    .context("adapter config has no [curtailment] section")
            });
            let layout = layout.transpose()?;
            let (mut records, report) = read_all(&args.files, |r| match &layout {
                Some(cfg) => Ok(adapt_curtailment(r, &desc, cfg, options)?.collect_all()?),
                None => Ok(parse_curtailment_with(r, &desc, options).collect_all()?),
            })?;
            records.retain(|r| in_range(r.timestamp, ctx));
            let grid =
                grid_covering(records.iter().map(|r| r.timestamp), &desc).context("no curtailment rows to ingest")?;
            let set = curtailment_to_series(&records, &grid)?;
            write_curtailment_csv(File::create(dir.join("curtailment.csv"))?, &records)?;
            write_canonical(dir.join(CURTAILMENT_CACHE), &set)?;
            entry.curtailment_files = vec![Path::new(iso.as_str()).join("curtailment.csv")];
            report
        }
    };
    catalog.upsert(entry);
    catalog.save()?;
    println!("rows={} errors={}", total.rows, total.errors.len());
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 30)]
    pub days: usize,
    #[arg(long, default_value_t = 20)]
    pub nodes: usize,
    /// Price at which curtailment becomes a coin flip.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// First day (defaults to 2022-06-01).
    #[arg(long, value_name = "RFC3339")]
    pub start: Option<DateTime<Utc>>,
}

pub fn synth(ctx: &Context, args: &SynthArgs) -> anyhow::Result<()> {
    let root = ctx
        .data
        .as_deref()
        .context("no data directory: pass --data or set CURTAILKIT_DATA")?;
    std::fs::create_dir_all(root)?;
    let isos = match ctx.iso {
        Some(iso) => vec![iso],
        None => IsoId::ALL.to_vec(),
    };
    for iso in isos {
        let mut spec = MarketSpec::new(iso, args.days, args.nodes, ctx.seed);
        spec.x0 = args.x0;
        spec.scale = args.scale;
        if let Some(start) = args.start {
            spec.start = start;
        }
        let market = synthetic_market(&spec)?;
        let catalog = write_market(root, iso, &market)?;
        // Stale caches would shadow the new CSV files.
        for cache in [catalog.lmp_cache_path(iso), catalog.curtailment_cache_path(iso)] {
            if cache.exists() {
                std::fs::remove_file(cache)?;
            }
        }
        println!(
            "{iso}: {} nodes, {} curtailment region(s), {} days",
            market.lmp.len(),
            market.curtailment.len(),
            args.days
        );
    }
    Ok(())
}
