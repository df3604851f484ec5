//! Run configuration file (TOML). Every key is optional; command-line flags
//! take precedence over the file.
//!
//! ```toml
//! data = "data"                  # catalog root, relative to this file
//! iso = "CAISO"
//! from = "2022-01-01T00:00:00Z"
//! to = "2023-01-01T00:00:00Z"
//! resolution_minutes = 60        # downsample everything before analysis
//! seed = 7
//! out = "out"
//!
//! [threshold]
//! target = 0.5
//! bin_width = 1.0
//! bin_lo = -50.0
//! bin_hi = 50.0
//! min_count = 30
//! amount_level = 0.0             # MW; 0 counts any curtailment
//! cumulative = false
//! per_node = false
//! price = 1.62                   # fixed detection threshold
//! bins = [-10.0, 0.0, 10.0]      # binned detection instead
//!
//! [forecast]
//! model = "day-ahead"            # persistence | day-ahead | climatology
//! target = "curtailment"         # curtailment | min-lmp | node:<ID>
//! lead_minutes = 0
//! length_minutes = 1440
//! every_minutes = 1440
//! bucket_minutes = 60
//! preset = "battery"             # thermostat | electric_vehicle | battery | batch
//!
//! [[load_shift]]
//! w_minutes = 480
//! c_minutes = 120
//! direction = "select_max_value" # optional
//! contiguous = false
//!
//! [[load_shift]]
//! preset = "thermostat"          # w from the preset
//! c_minutes = 60
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use chrono::{DateTime, Utc};
use serde::Deserialize;

use curtailkit::evaluate::Direction;
use curtailkit::forecast::WindowPreset;
use curtailkit::ingest::IsoId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Persistence,
    DayAhead,
    Climatology,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Persistence => "persistence",
            Model::DayAhead => "day-ahead",
            Model::Climatology => "climatology",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub target: Option<f64>,
    pub bin_width: Option<f64>,
    pub bin_lo: Option<f64>,
    pub bin_hi: Option<f64>,
    pub min_count: Option<usize>,
    pub amount_level: Option<f64>,
    pub cumulative: Option<bool>,
    pub per_node: Option<bool>,
    pub price: Option<f64>,
    pub bins: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastConfig {
    pub model: Option<Model>,
    pub target: Option<String>,
    pub lead_minutes: Option<i64>,
    pub length_minutes: Option<i64>,
    pub every_minutes: Option<i64>,
    pub bucket_minutes: Option<u32>,
    pub preset: Option<WindowPreset>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadShiftConfig {
    pub preset: Option<WindowPreset>,
    pub w_minutes: Option<i64>,
    pub c_minutes: i64,
    pub direction: Option<Direction>,
    #[serde(default)]
    pub contiguous: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub iso: Option<IsoId>,
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
    pub resolution_minutes: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threshold: ThresholdConfig,
    #[serde(default)]
    pub forecast: ForecastConfig,
    #[serde(default)]
    pub load_shift: Vec<LoadShiftConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.data, &mut config.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.validate()?;
        if let Some(d) = &config.data {
            if !d.is_dir() {
                bail!(
                    "data directory {} named in {} does not exist",
                    d.display(),
                    path.display()
                );
            }
        }
        Ok(config)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if let Some(t) = self.threshold.target {
            if !(t > 0.0 && t < 1.0) {
                bail!("threshold.target must lie strictly between 0 and 1");
            }
        }
        for ls in &self.load_shift {
            if ls.preset.is_none() && ls.w_minutes.is_none() {
                bail!("each [[load_shift]] needs w_minutes or a preset");
            }
        }
        if let (Some(a), Some(b)) = (self.from, self.to) {
            if a >= b {
                bail!("`from` must be earlier than `to`");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let doc = include_str!("config.rs");
        let example: String = doc
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start_matches(' '))
            .collect::<Vec<_>>()
            .join("\n");
        let c: RunConfig = toml::from_str(&example).unwrap();
        c.validate().unwrap();
        assert_eq!(c.iso, Some(IsoId::Caiso));
        assert_eq!(c.forecast.model, Some(Model::DayAhead));
        assert_eq!(c.load_shift.len(), 2);
        assert_eq!(c.load_shift[1].preset, Some(WindowPreset::Thermostat));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("colour = 1").is_err());
    }
}
