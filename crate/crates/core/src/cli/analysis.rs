use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context as _};
use chrono_tz::Tz;
use clap::Args;
use serde::Serialize;

use curtailkit::detect::{
    below_threshold_heatmap, bin_signal, calibration_curve_with, curtailment_share, detect_all, extract_threshold,
    min_lmp_series, system_curtailment, uniform_edges, write_curve_csv, write_heatmap_csv, CalibrationCurve,
    CalibrationOptions, Conditioning, DetectionSignal, ThresholdResult,
};
use curtailkit::ingest::{Catalog, IsoId};
use curtailkit::timeseries::{time_of_day_profile, Aggregation, Resolution, Series};

use super::data::{co_register, load_curtailment, load_lmp, open_catalog, selected_isos, target_series, Target};
use super::{Context, PlotKind};

fn timestamp(s: &Series, i: usize) -> String {
    s.grid().timestamp_at(i).format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn bucket(minutes: Option<u32>) -> anyhow::Result<Resolution> {
    Resolution::new(minutes.unwrap_or(60) * 60).context("bucket width must divide a day")
}

// ---------------------------------------------------------------- summarize

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Also write `summary.csv` to the output directory.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub iso: IsoId,
    pub granularity: String,
    pub reported_kind: String,
    pub from: String,
    pub to: String,
    pub steps: usize,
    pub curtailed: usize,
    pub pct_time: Option<f64>,
    pub nodes: usize,
}

pub fn summary_row(ctx: &Context, catalog: &Catalog, iso: IsoId) -> anyhow::Result<SummaryRow> {
    let desc = iso.descriptor();
    let system = system_curtailment(&load_curtailment(ctx, catalog, iso)?)?;
    let share = curtailment_share(&system);
    let g = system.grid();
    let fmt = |t: chrono::DateTime<chrono::Utc>| t.format("%Y-%m-%dT%H:%M:%SZ").to_string();
    Ok(SummaryRow {
        iso,
        granularity: desc.granularity.to_string(),
        reported_kind: desc.reported_kind.describe().to_string(),
        from: fmt(g.start()),
        to: fmt(g.end()),
        steps: share.steps,
        curtailed: share.curtailed,
        pct_time: share.percent,
        nodes: catalog.dataset(iso).map_or(0, |d| d.node_roster.len()),
    })
}

pub fn summarize(ctx: &Context, args: &SummarizeArgs) -> anyhow::Result<()> {
    let catalog = open_catalog(ctx)?;
    let rows: Vec<SummaryRow> = selected_isos(ctx, &catalog)?
        .into_iter()
        .map(|iso| summary_row(ctx, &catalog, iso))
        .collect::<anyhow::Result<_>>()?;
    println!(
        "{:<6} {:<5} {:<44} {:<20} {:<20} {:>9} {:>9} {:>8}",
        "iso", "res", "reported", "from", "to", "steps", "curtailed", "pct_time"
    );
    for r in &rows {
        let pct = r.pct_time.map_or("-".to_string(), |p| format!("{p:.1}"));
        println!(
            "{:<6} {:<5} {:<44} {:<20} {:<20} {:>9} {:>9} {:>8}",
            r.iso.as_str(),
            r.granularity,
            r.reported_kind,
            r.from,
            r.to,
            r.steps,
            r.curtailed,
            pct
        );
        if r.iso.descriptor().negative_price_caveat() {
            println!(
                "       note: negative {} prices can reflect imports rather than curtailment",
                r.iso
            );
        }
    }
    if args.csv {
        let path = ctx.output("summary.csv")?;
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "iso,granularity,reported_kind,from,to,steps,curtailed,pct_time")?;
        for r in &rows {
            let pct = r.pct_time.map(|p| p.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},\"{}\",{},{},{},{},{}",
                r.iso, r.granularity, r.reported_kind, r.from, r.to, r.steps, r.curtailed, pct
            )?;
        }
        w.flush()?;
    }
    Ok(())
}

// ---------------------------------------------------------------- calibrate

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Curtailment likelihood the threshold should mark.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, value_name = "USD")]
    pub bin_width: Option<f64>,
    #[arg(long, value_name = "USD", allow_hyphen_values = true)]
    pub bin_lo: Option<f64>,
    #[arg(long, value_name = "USD", allow_hyphen_values = true)]
    pub bin_hi: Option<f64>,
    /// Smallest bin population that gets a frequency.
    #[arg(long)]
    pub min_count: Option<usize>,
    /// Curtailment (MW) a step must reach to count; 0 counts any.
    #[arg(long, value_name = "MW")]
    pub amount_level: Option<f64>,
    /// Condition on prices below each bin's upper edge instead of within it.
    #[arg(long)]
    pub cumulative: bool,
    /// Also calibrate every node separately.
    #[arg(long)]
    pub per_node: bool,
}

struct CalibrationSettings {
    target: f64,
    edges: Vec<f64>,
    amount_level: f64,
    options: CalibrationOptions,
}

impl CalibrationSettings {
    fn resolve(ctx: &Context, args: Option<&CalibrateArgs>) -> anyhow::Result<Self> {
        let c = &ctx.config.threshold;
        let width = args.and_then(|a| a.bin_width).or(c.bin_width).unwrap_or(1.0);
        let lo = args.and_then(|a| a.bin_lo).or(c.bin_lo).unwrap_or(-50.0);
        let hi = args.and_then(|a| a.bin_hi).or(c.bin_hi).unwrap_or(50.0);
        let cumulative = args.is_some_and(|a| a.cumulative) || c.cumulative.unwrap_or(false);
        Ok(CalibrationSettings {
            target: args.and_then(|a| a.target).or(c.target).unwrap_or(0.5),
            edges: uniform_edges(lo, hi, width)?,
            amount_level: args.and_then(|a| a.amount_level).or(c.amount_level).unwrap_or(0.0),
            options: CalibrationOptions {
                min_count: args.and_then(|a| a.min_count).or(c.min_count).unwrap_or(30),
                conditioning: if cumulative {
                    Conditioning::Cumulative
                } else {
                    Conditioning::Binned
                },
            },
        })
    }
}

fn require_mw(iso: IsoId) -> anyhow::Result<()> {
    let kind = iso.descriptor().reported_kind;
    if !kind.has_mw() {
        bail!(
            "{iso} publishes only \"{}\", not curtailed MW, so a price calibration cannot be built for it",
            kind.describe()
        );
    }
    Ok(())
}

fn calibrate_pair(
    prices: Series,
    price_mode: Aggregation,
    curtailment: Series,
    s: &CalibrationSettings,
) -> anyhow::Result<(CalibrationCurve, ThresholdResult)> {
    let (p, c) = co_register(prices, price_mode, curtailment, Aggregation::Mean)?;
    let curve = calibration_curve_with(&p, &c, s.amount_level, &s.edges, s.options)?;
    let threshold = extract_threshold(&curve, s.target)?;
    Ok((curve, threshold))
}

fn run_calibration(
    ctx: &Context,
    catalog: &Catalog,
    iso: IsoId,
    s: &CalibrationSettings,
) -> anyhow::Result<(CalibrationCurve, ThresholdResult)> {
    require_mw(iso)?;
    let lmp = load_lmp(ctx, catalog, iso)?;
    let min = min_lmp_series(lmp.values())?;
    let curtailment = system_curtailment(&load_curtailment(ctx, catalog, iso)?)?;
    calibrate_pair(min, Aggregation::Min, curtailment, s).with_context(|| format!("calibrating {iso}"))
}

#[derive(Serialize)]
struct ThresholdFile<'a> {
    iso: IsoId,
    negative_price_caveat: bool,
    #[serde(flatten)]
    result: &'a ThresholdResult,
}

pub fn calibrate(ctx: &Context, args: &CalibrateArgs) -> anyhow::Result<()> {
    let catalog = open_catalog(ctx)?;
    let settings = CalibrationSettings::resolve(ctx, Some(args))?;
    let per_node = args.per_node || ctx.config.threshold.per_node.unwrap_or(false);
    for iso in selected_isos(ctx, &catalog)? {
        if ctx.iso.is_none() && !iso.descriptor().reported_kind.has_mw() {
            println!("{iso}: skipped (no MW curtailment data)");
            continue;
        }
        let (curve, threshold) = run_calibration(ctx, &catalog, iso, &settings)?;
        let curve_path = ctx.output(&format!("calibration_{iso}.csv"))?;
        write_curve_csv(BufWriter::new(File::create(&curve_path)?), &curve, Some(&threshold))?;
        write_json(
            &ctx.output(&format!("threshold_{iso}.json"))?,
            &ThresholdFile {
                iso,
                negative_price_caveat: iso.descriptor().negative_price_caveat(),
                result: &threshold,
            },
        )?;
        let sat = threshold
            .saturation
            .map(|s| format!(" saturated={s:?}").to_lowercase())
            .unwrap_or_default();
        println!(
            "{iso}: threshold_price={:.4} target={} calibrated_bins={}{sat}",
            threshold.threshold_price,
            threshold.target_likelihood,
            threshold.fitted.len()
        );

        if per_node {
            let curtailment = system_curtailment(&load_curtailment(ctx, &catalog, iso)?)?;
            let path = ctx.output(&format!("node_thresholds_{iso}.csv"))?;
            let mut w = BufWriter::new(File::create(&path)?);
            writeln!(w, "node_id,threshold_price,saturation,note")?;
            for (node, series) in load_lmp(ctx, &catalog, iso)? {
                match calibrate_pair(series, Aggregation::Mean, curtailment.clone(), &settings) {
                    Ok((_, t)) => {
                        let sat = t
                            .saturation
                            .map(|s| format!("{s:?}").to_lowercase())
                            .unwrap_or_default();
                        writeln!(w, "{node},{},{sat},", t.threshold_price)?;
                    }
                    Err(e) => writeln!(w, "{node},,,\"{}\"", e.to_string().replace('"', "'"))?,
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- detect

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Price threshold (USD/MWh); defaults to the config or a prior calibration.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    /// Comma-separated ascending bin edges; emits binned signals instead.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub bins: Option<Vec<f64>>,
    /// Heatmap bucket width.
    #[arg(long, value_name = "MINUTES")]
    pub bucket_minutes: Option<u32>,
    /// Heatmap zone; defaults to the operator's.
    #[arg(long)]
    pub zone: Option<Tz>,
}

fn resolve_threshold(ctx: &Context, iso: IsoId, flag: Option<f64>) -> anyhow::Result<f64> {
    if let Some(t) = flag.or(ctx.config.threshold.price) {
        return Ok(t);
    }
    let path = ctx.out.join(format!("threshold_{iso}.json"));
    if path.is_file() {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
        return v["threshold_price"]
            .as_f64()
            .with_context(|| format!("{} has no threshold_price", path.display()));
    }
    bail!("no threshold for {iso}: pass --threshold, set threshold.price, or run `calibrate` first")
}

fn write_signals(path: &std::path::Path, signals: &[DetectionSignal]) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "node_id,timestamp_utc,value")?;
    for sig in signals {
        for (i, v) in sig.series.values().iter().enumerate() {
            match v {
                Some(v) => writeln!(w, "{},{},{}", sig.node_id, timestamp(&sig.series, i), v)?,
                None => writeln!(w, "{},{},", sig.node_id, timestamp(&sig.series, i))?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn detect(ctx: &Context, args: &DetectArgs) -> anyhow::Result<()> {
    let catalog = open_catalog(ctx)?;
    for iso in selected_isos(ctx, &catalog)? {
        let lmp = load_lmp(ctx, &catalog, iso)?;
        if let Some(edges) = args.bins.clone().or_else(|| ctx.config.threshold.bins.clone()) {
            let signals: Vec<DetectionSignal> = lmp
                .iter()
                .map(|(id, s)| bin_signal(id, s, &edges))
                .collect::<Result<_, _>>()?;
            let path = ctx.output(&format!("signals_{iso}.csv"))?;
            write_signals(&path, &signals)?;
            println!(
                "{iso}: binned {} node(s) into {} bins -> {}",
                signals.len(),
                edges.len() + 1,
                path.display()
            );
            continue;
        }
        let threshold = resolve_threshold(ctx, iso, args.threshold)?;
        let signals = detect_all(&lmp, threshold)?;
        let path = ctx.output(&format!("signals_{iso}.csv"))?;
        write_signals(&path, &signals)?;

        let zone = args.zone.unwrap_or(iso.descriptor().zone);
        let stats = below_threshold_heatmap(&lmp, threshold, bucket(args.bucket_minutes)?, zone)?;
        let heat_path = ctx.output(&format!("heatmap_{iso}.csv"))?;
        write_heatmap_csv(BufWriter::new(File::create(&heat_path)?), &stats)?;

        let (below, total) = stats.nodes.iter().fold((0, 0), |(b, t), n| (b + n.below, t + n.count));
        let pct = if total > 0 {
            100.0 * below as f64 / total as f64
        } else {
            0.0
        };
        println!(
            "{iso}: threshold={threshold} nodes={} flagged={below}/{total} ({pct:.1}%) -> {}",
            signals.len(),
            path.display()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- plot

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(value_enum)]
    pub kind: PlotKind,
    /// Existing table to re-emit (calibration kind).
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Series for time-of-day and timeseries plots: curtailment, min-lmp, node:<ID>.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_name = "MINUTES")]
    pub bucket_minutes: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub zone: Option<Tz>,
}

fn kind_name(kind: PlotKind) -> &'static str {
    match kind {
        PlotKind::TimeOfDay => "time_of_day",
        PlotKind::Calibration => "calibration",
        PlotKind::Heatmap => "heatmap",
        PlotKind::Timeseries => "timeseries",
    }
}

pub fn plot(ctx: &Context, args: &PlotArgs) -> anyhow::Result<()> {
    let path = match (args.kind, &args.input) {
        (PlotKind::Calibration, Some(input)) => {
            let name = input.file_name().context("input has no file name")?.to_string_lossy();
            let path = ctx.output(&format!("plot_{name}"))?;
            let reader = BufReader::new(File::open(input).with_context(|| format!("opening {}", input.display()))?);
            let mut w = BufWriter::new(File::create(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if i == 0 && line.trim_end() != "bin_lo,bin_hi,count,freq,fitted_freq" {
                    bail!("{} is not a calibration curve table", input.display());
                }
                writeln!(w, "{}", line.trim_end_matches('\r'))?;
            }
            w.flush()?;
            path
        }
        (_, Some(_)) => bail!("--input applies only to the calibration plot"),
        (kind, None) => {
            let catalog = open_catalog(ctx)?;
            let iso = ctx.require_iso()?;
            let path = ctx.output(&format!("plot_{}_{iso}.csv", kind_name(kind)))?;
            let mut w = BufWriter::new(File::create(&path)?);
            let zone = args.zone.unwrap_or(iso.descriptor().zone);
            let target: Target = args.target.as_deref().unwrap_or("curtailment").parse()?;
            match kind {
                PlotKind::TimeOfDay => {
                    let series = target_series(ctx, &catalog, iso, &target)?;
                    let profile = time_of_day_profile(&series, bucket(args.bucket_minutes)?, zone)?;
                    writeln!(w, "bucket_start_local,count,median,q25,q75")?;
                    for b in &profile.buckets {
                        let hhmm = format!("{:02}:{:02}", b.start_seconds / 3600, b.start_seconds % 3600 / 60);
                        match b.quartiles {
                            Some(q) => writeln!(w, "{hhmm},{},{},{},{}", b.count, q.median, q.q25, q.q75)?,
                            None => writeln!(w, "{hhmm},{},,,", b.count)?,
                        }
                    }
                }
                PlotKind::Calibration => {
                    let settings = CalibrationSettings::resolve(ctx, None)?;
                    let (curve, threshold) = run_calibration(ctx, &catalog, iso, &settings)?;
                    write_curve_csv(&mut w, &curve, Some(&threshold))?;
                }
                PlotKind::Heatmap => {
                    let threshold = resolve_threshold(ctx, iso, args.threshold)?;
                    let lmp = load_lmp(ctx, &catalog, iso)?;
                    let stats = below_threshold_heatmap(&lmp, threshold, bucket(args.bucket_minutes)?, zone)?;
                    write_heatmap_csv(&mut w, &stats)?;
                }
                PlotKind::Timeseries => {
                    let series = target_series(ctx, &catalog, iso, &target)?;
                    let id = args.target.as_deref().unwrap_or("curtailment");
                    writeln!(w, "series_id,timestamp_utc,value,unit")?;
                    for (i, v) in series.values().iter().enumerate() {
                        let v = v.map(|v| v.to_string()).unwrap_or_default();
                        writeln!(w, "{id},{},{v},{}", timestamp(&series, i), series.unit())?;
                    }
                }
            }
            w.flush()?;
            path
        }
    };
    println!("{}", path.display());
    Ok(())
}
