use std::fs::File;
use std::io::BufWriter;

use anyhow::{bail, Context as _};
use chrono::{DateTime, TimeDelta, Utc};
use clap::Args;
use serde::Serialize;

use curtailkit::detect::{system_curtailment, SignalRule};
use curtailkit::evaluate::{
    classification_metrics, regression_metrics, sweep, write_report_csv, ClassificationMetrics, Direction,
    GroupSummary, RegressionMetrics, SweepSpec,
};
use curtailkit::forecast::{
    backtest as run_backtest, to_signal, write_forecast_csv, BacktestEntry, Climatology, DayAheadPersistence,
    Forecaster, History, Horizon, Persistence, WindowPreset,
};
use curtailkit::ingest::{Catalog, IsoId};
use curtailkit::timeseries::{window, Aggregation, Resolution, Series, Unit};

use super::data::{co_register, load_curtailment, natural_aggregation, open_catalog, target_series, Target};
use super::{Context, Model, ModelArgs};

/// Model, target and horizon after merging flags over the config.
struct ModelSettings {
    model: Model,
    target: Target,
    horizon: Horizon,
    bucket: Resolution,
}

impl ModelSettings {
    fn resolve(ctx: &Context, args: &ModelArgs) -> anyhow::Result<Self> {
        let c = &ctx.config.forecast;
        let preset = args.preset.or(c.preset);
        let base = preset.map_or_else(Horizon::default, WindowPreset::horizon);
        let lead = args
            .lead_minutes
            .or(c.lead_minutes)
            .map_or(base.lead, TimeDelta::minutes);
        let length = args
            .length_minutes
            .or(c.length_minutes)
            .map_or(base.length, TimeDelta::minutes);
        let bucket = args.bucket_minutes.or(c.bucket_minutes).unwrap_or(60);
        Ok(ModelSettings {
            model: args.model.or(c.model).unwrap_or(Model::DayAhead),
            target: args
                .target
                .as_deref()
                .or(c.target.as_deref())
                .unwrap_or("curtailment")
                .parse()?,
            horizon: Horizon::new(lead, length)?,
            bucket: Resolution::new(bucket * 60).context("bucket_minutes must divide a day")?,
        })
    }

    fn forecaster(&self, iso: IsoId) -> Box<dyn Forecaster> {
        match self.model {
            Model::Persistence => Box::new(Persistence),
            Model::DayAhead => Box::new(DayAheadPersistence),
            Model::Climatology => Box::new(Climatology::new(self.bucket, Some(iso.descriptor().zone))),
        }
    }
}

fn load_target(ctx: &Context, catalog: &Catalog, iso: IsoId, target: &Target) -> anyhow::Result<Series> {
    target_series(ctx, catalog, iso, target)
}

// ---------------------------------------------------------------- forecast

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Issue time (RFC 3339); defaults to the end of the data.
    #[arg(long, value_name = "RFC3339")]
    pub issued_at: Option<DateTime<Utc>>,
    /// Convert to a binary signal: prices at or below, other units at or above.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
}

pub fn forecast(ctx: &Context, args: &ForecastArgs) -> anyhow::Result<()> {
    let catalog = open_catalog(ctx)?;
    let iso = ctx.require_iso()?;
    let settings = ModelSettings::resolve(ctx, &args.model)?;
    let series = load_target(ctx, &catalog, iso, &settings.target)?;
    let issued_at = args.issued_at.unwrap_or(series.grid().end());
    let history = History::new(&series, issued_at)?;
    let mut f = settings
        .forecaster(iso)
        .forecast(&history, &settings.horizon, ctx.seed)
        .with_context(|| format!("{} forecast issued at {issued_at}", settings.model.as_str()))?;
    if let Some(threshold) = args.threshold {
        let rule = if series.unit() == Unit::UsdPerMwh {
            SignalRule::AtOrBelow { threshold }
        } else {
            SignalRule::AtOrAbove { threshold }
        };
        f = to_signal(&f, &rule)?;
    }
    let path = ctx.output(&format!("forecast_{iso}.csv"))?;
    write_forecast_csv(BufWriter::new(File::create(&path)?), [&f])?;
    println!(
        "{iso}: {} forecast issued at {} for {} steps ({}) -> {}",
        settings.model.as_str(),
        issued_at.format("%Y-%m-%dT%H:%M:%SZ"),
        f.series.len(),
        f.signal_type,
        path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- backtest

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Spacing of issue times.
    #[arg(long, value_name = "MINUTES")]
    pub every_minutes: Option<i64>,
}

/// Issue times from one day after the data start, every `every`, while the
/// whole target window still fits.
fn schedule(series: &Series, horizon: &Horizon, every: TimeDelta) -> anyhow::Result<Vec<DateTime<Utc>>> {
    if every <= TimeDelta::zero() {
        bail!("every_minutes must be positive");
    }
    let res = series.grid().resolution();
    if every.num_seconds() % i64::from(res.seconds()) != 0 {
        bail!(
            "every_minutes must be a multiple of the data resolution ({} s)",
            res.seconds()
        );
    }
    let end = series.grid().end();
    let mut t = series.grid().start() + TimeDelta::days(1);
    let mut out = Vec::new();
    while t + horizon.lead + horizon.length <= end {
        out.push(t);
        t += every;
    }
    if out.is_empty() {
        bail!("data span too short for a backtest: need more than one day plus the horizon");
    }
    Ok(out)
}

fn pooled_regression(entries: &[BacktestEntry]) -> anyhow::Result<Option<RegressionMetrics>> {
    let mut n = 0;
    let (mut abs, mut sq) = (0.0, 0.0);
    for e in entries {
        let m = regression_metrics(&e.forecast.series, &e.actual)?;
        n += m.n;
        abs += m.mae * m.n as f64;
        sq += m.rmse * m.rmse * m.n as f64;
    }
    Ok((n > 0).then(|| RegressionMetrics {
        n,
        mae: abs / n as f64,
        rmse: (sq / n as f64).sqrt(),
    }))
}

fn pooled_classification(entries: &[BacktestEntry]) -> anyhow::Result<Option<ClassificationMetrics>> {
    let binary = |s: &Series| s.unit() == Unit::Boolean01;
    if entries.is_empty() || !entries.iter().all(|e| binary(&e.forecast.series) && binary(&e.actual)) {
        return Ok(None);
    }
    let forecast: Vec<Option<f64>> = entries
        .iter()
        .flat_map(|e| e.forecast.series.values().to_vec())
        .collect();
    let actual: Vec<Option<f64>> = entries.iter().flat_map(|e| e.actual.values().to_vec()).collect();
    let grid = curtailkit::timeseries::TimeGrid::from_epoch(
        0,
        forecast.len(),
        entries[0].actual.grid().resolution(),
        chrono_tz::UTC,
    )?;
    let f = Series::new(grid, forecast, Unit::Boolean01)?;
    let a = Series::new(grid, actual, Unit::Boolean01)?;
    Ok(Some(classification_metrics(&f, &a)?))
}

#[derive(Serialize)]
struct BacktestSummary {
    iso: IsoId,
    model: &'static str,
    target: String,
    horizon: Horizon,
    issues: usize,
    skipped: usize,
    regression: Option<RegressionMetrics>,
    classification: Option<ClassificationMetrics>,
}

pub fn backtest(ctx: &Context, args: &BacktestArgs) -> anyhow::Result<()> {
    let catalog = open_catalog(ctx)?;
    let iso = ctx.require_iso()?;
    let settings = ModelSettings::resolve(ctx, &args.model)?;
    let series = load_target(ctx, &catalog, iso, &settings.target)?;
    let every = TimeDelta::minutes(args.every_minutes.or(ctx.config.forecast.every_minutes).unwrap_or(1440));
    let issues = schedule(&series, &settings.horizon, every)?;
    let result = run_backtest(
        settings.forecaster(iso).as_ref(),
        &series,
        &issues,
        &settings.horizon,
        ctx.seed,
    )?;

    let model = settings.model.as_str();
    let path = ctx.output(&format!("forecast_{iso}_{model}.csv"))?;
    write_forecast_csv(
        BufWriter::new(File::create(&path)?),
        result.entries.iter().map(|e| &e.forecast),
    )?;
    let summary = BacktestSummary {
        iso,
        model,
        target: args
            .model
            .target
            .clone()
            .or(ctx.config.forecast.target.clone())
            .unwrap_or("curtailment".into()),
        horizon: settings.horizon,
        issues: result.entries.len(),
        skipped: result.skipped.len(),
        regression: pooled_regression(&result.entries)?,
        classification: pooled_classification(&result.entries)?,
    };
    let json_path = ctx.output(&format!("backtest_{iso}_{model}.json"))?;
    std::fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    let metric = summary.regression.as_ref().map_or("no scored steps".to_string(), |m| {
        format!("mae={:.4} rmse={:.4} n={}", m.mae, m.rmse, m.n)
    });
    println!(
        "{iso}: {model} issues={} skipped={} {metric}",
        summary.issues, summary.skipped
    );
    Ok(())
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_name = "MINUTES")]
    pub every_minutes: Option<i64>,
    /// Load-shift window and shifted duration in minutes, `W:C`; repeatable.
    #[arg(long = "shift", value_name = "W:C")]
    pub shifts: Vec<String>,
    /// Shift into one contiguous block instead of any steps.
    #[arg(long)]
    pub contiguous: bool,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum DirectionArg {
    Max,
    Min,
}

fn parse_shift(s: &str) -> anyhow::Result<(i64, i64)> {
    let (w, c) = s.split_once(':').with_context(|| format!("--shift `{s}` is not W:C"))?;
    Ok((
        w.trim().parse().context("W minutes")?,
        c.trim().parse().context("C minutes")?,
    ))
}

fn sweep_specs(ctx: &Context, args: &EvaluateArgs) -> anyhow::Result<Vec<SweepSpec>> {
    let direction = args.direction.map(|d| match d {
        DirectionArg::Max => Direction::SelectMaxValue,
        DirectionArg::Min => Direction::SelectMinValue,
    });
    let from_pair = |(w, c): (i64, i64)| SweepSpec {
        w: TimeDelta::minutes(w),
        c: TimeDelta::minutes(c),
        direction,
        contiguous: args.contiguous,
    };
    if !args.shifts.is_empty() {
        return args.shifts.iter().map(|s| parse_shift(s).map(from_pair)).collect();
    }
    if !ctx.config.load_shift.is_empty() {
        return Ok(ctx
            .config
            .load_shift
            .iter()
            .map(|ls| SweepSpec {
                w: ls
                    .w_minutes
                    .map_or_else(|| ls.preset.expect("validated").window(), TimeDelta::minutes),
                c: TimeDelta::minutes(ls.c_minutes),
                direction: direction.or(ls.direction),
                contiguous: args.contiguous || ls.contiguous,
            })
            .collect());
    }
    Ok([(480, 120), (1440, 240)].into_iter().map(from_pair).collect())
}

#[derive(Serialize)]
struct EvaluateSummary<'a> {
    iso: IsoId,
    model: &'static str,
    target: String,
    issues: usize,
    skipped_issues: usize,
    windows: usize,
    skipped_windows: usize,
    groups: &'a [GroupSummary],
    overall: &'a GroupSummary,
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> anyhow::Result<()> {
    let catalog = open_catalog(ctx)?;
    let iso = ctx.require_iso()?;
    let settings = ModelSettings::resolve(ctx, &args.model)?;
    let specs = sweep_specs(ctx, args)?;

    let curtailment = system_curtailment(&load_curtailment(ctx, &catalog, iso)?)?;
    let (series, actual) = match settings.target {
        Target::Curtailment => (curtailment.clone(), curtailment),
        _ => {
            let target = load_target(ctx, &catalog, iso, &settings.target)?;
            let mode = if target.unit() == Unit::UsdPerMwh {
                Aggregation::Min
            } else {
                natural_aggregation(target.unit())
            };
            let curt_mode = natural_aggregation(curtailment.unit());
            co_register(target, mode, curtailment, curt_mode)?
        }
    };
    let every = TimeDelta::minutes(args.every_minutes.or(ctx.config.forecast.every_minutes).unwrap_or(1440));
    let issues = schedule(&series, &settings.horizon, every)?;
    let mut result = run_backtest(
        settings.forecaster(iso).as_ref(),
        &series,
        &issues,
        &settings.horizon,
        ctx.seed,
    )?;
    for e in &mut result.entries {
        e.actual = window(&actual, e.forecast.series.grid().start(), settings.horizon.length)?;
    }
    let report = sweep(&result.entries, &specs)?;

    let model = settings.model.as_str();
    let csv_path = ctx.output(&format!("report_{iso}_{model}.csv"))?;
    write_report_csv(BufWriter::new(File::create(&csv_path)?), &report.rows)?;
    let summary = EvaluateSummary {
        iso,
        model,
        target: args
            .model
            .target
            .clone()
            .or(ctx.config.forecast.target.clone())
            .unwrap_or("curtailment".into()),
        issues: result.entries.len(),
        skipped_issues: result.skipped.len(),
        windows: report.rows.len(),
        skipped_windows: report.skipped.len(),
        groups: &report.groups,
        overall: &report.overall,
    };
    let json_path = ctx.output(&format!("summary_{iso}_{model}.json"))?;
    std::fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;

    println!(
        "{iso}: {model} windows={} skipped_windows={} skipped_issues={}",
        summary.windows, summary.skipped_windows, summary.skipped_issues
    );
    println!(
        "{:>6} {:>6} {:>8} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "w_min", "c_min", "windows", "forecast", "immediate", "random", "oracle", "anti"
    );
    for g in report.groups.iter().chain([&report.overall]) {
        let m = |d: Option<TimeDelta>| d.map_or("all".to_string(), |d| d.num_minutes().to_string());
        println!(
            "{:>6} {:>6} {:>8} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            m(g.w),
            m(g.c),
            g.windows,
            g.means.forecast_impact,
            g.means.immediate_baseline,
            g.means.random_baseline,
            g.means.oracle_impact,
            g.means.anti_oracle_impact
        );
    }
    Ok(())
}
