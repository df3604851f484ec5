mod analysis;
mod config;
mod data;
mod ingest;
mod modeling;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use curtailkit::ingest::IsoId;

pub use config::{Model, RunConfig};

/// Default catalog root when neither `--data` nor the config names one.
pub const DATA_ENV: &str = "CURTAILKIT_DATA";

#[derive(Debug, Parser)]
#[command(
    name = "curtailkit",
    version,
    about = "Curtailment detection, forecasting baselines and load-shift scoring"
)]
pub struct Cli {
    /// Run configuration (TOML); flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Operator to work on.
    #[arg(long, global = true, value_name = "NAME")]
    pub iso: Option<IsoId>,
    /// Start of the analysis range (RFC 3339, inclusive).
    #[arg(long, global = true, value_name = "RFC3339")]
    pub from: Option<DateTime<Utc>>,
    /// End of the analysis range (RFC 3339, exclusive).
    #[arg(long, global = true, value_name = "RFC3339")]
    pub to: Option<DateTime<Utc>>,
    /// Catalog root [default: $CURTAILKIT_DATA, after the config's `data`].
    #[arg(long, global = true, value_name = "DIR")]
    pub data: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert raw or canonical files into the catalog (CSV plus cache).
    Ingest(ingest::IngestArgs),
    /// Coverage and share of time with curtailment per operator.
    Summarize(analysis::SummarizeArgs),
    /// Build the price/curtailment calibration curve and extract a threshold.
    Calibrate(analysis::CalibrateArgs),
    /// Flag nodal steps at or below the threshold; emit the heatmap.
    Detect(analysis::DetectArgs),
    /// Issue one forecast from the end of the data (or --issued-at).
    Forecast(modeling::ForecastArgs),
    /// Rolling-origin backtest of a baseline forecaster.
    Backtest(modeling::BacktestArgs),
    /// Backtest plus load-shift impact scoring.
    Evaluate(modeling::EvaluateArgs),
    /// Emit plot-ready CSV tables.
    Plot(analysis::PlotArgs),
    /// Write a seeded synthetic dataset into the catalog.
    Synth(ingest::SynthArgs),
}

/// Settings shared by every command after merging flags over the config.
pub struct Context {
    pub config: RunConfig,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub iso: Option<IsoId>,
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
}

impl Context {
    fn new(cli: &Cli) -> anyhow::Result<Self> {
        let config = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let from = cli.from.or(config.from);
        let to = cli.to.or(config.to);
        if let (Some(a), Some(b)) = (from, to) {
            if a >= b {
                bail!("--from must be earlier than --to");
            }
        }
        Ok(Context {
            data: cli
                .data
                .clone()
                .or_else(|| config.data.clone())
                .or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from)),
            out: cli
                .out
                .clone()
                .or_else(|| config.out.clone())
                .unwrap_or_else(|| PathBuf::from(".")),
            seed: cli.seed.or(config.seed).unwrap_or(0),
            iso: cli.iso.or(config.iso),
            from,
            to,
            config,
        })
    }

    pub fn data_root(&self) -> anyhow::Result<&Path> {
        let root = self
            .data
            .as_deref()
            .context("no data directory: pass --data, set CURTAILKIT_DATA, or set `data` in the config")?;
        if !root.is_dir() {
            bail!("data directory {} does not exist", root.display());
        }
        Ok(root)
    }

    pub fn require_iso(&self) -> anyhow::Result<IsoId> {
        self.iso.context("this command needs --iso")
    }

    /// Creates the output directory and returns `out/name`.
    pub fn output(&self, name: &str) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    TimeOfDay,
    Calibration,
    Heatmap,
    Timeseries,
}

/// Horizon and schedule flags shared by the modelling commands.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// `curtailment`, `min-lmp`, or `node:<ID>`.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_name = "MINUTES")]
    pub lead_minutes: Option<i64>,
    #[arg(long, value_name = "MINUTES")]
    pub length_minutes: Option<i64>,
    /// Horizon preset: thermostat, electric_vehicle, battery, batch.
    #[arg(long)]
    pub preset: Option<curtailkit::forecast::WindowPreset>,
    /// Climatology bucket width.
    #[arg(long, value_name = "MINUTES")]
    pub bucket_minutes: Option<u32>,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Context::new(&cli)?;
    match &cli.command {
        Command::Ingest(a) => ingest::ingest(&ctx, a),
        Command::Summarize(a) => analysis::summarize(&ctx, a),
        Command::Calibrate(a) => analysis::calibrate(&ctx, a),
        Command::Detect(a) => analysis::detect(&ctx, a),
        Command::Forecast(a) => modeling::forecast(&ctx, a),
        Command::Backtest(a) => modeling::backtest(&ctx, a),
        Command::Evaluate(a) => modeling::evaluate(&ctx, a),
        Command::Plot(a) => analysis::plot(&ctx, a),
        Command::Synth(a) => ingest::synth(&ctx, a),
    }
}
