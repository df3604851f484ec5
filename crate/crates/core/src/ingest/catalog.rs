//! Dataset catalog: which operators have data under a root directory, and
//! where their files live.
//!
//! A catalog is described by `catalog.toml` at the root. Without one, the
//! root is scanned for `<ISO>/lmp*.csv` and `<ISO>/curtailment*.csv`.
//! Columnar caches sit next to the CSV files as `<ISO>/lmp.ckt` and
//! `<ISO>/curtailment.ckt` and take precedence when present.

use std::collections::HashSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::timeseries::{SeriesSet, TimeGrid};

use super::assemble::{curtailment_to_series, lmp_to_series};
use super::canonical::read_canonical;
use super::parse::{parse_curtailment_with, parse_lmp_with, ParseOptions};
use super::{IngestError, IsoDescriptor, IsoId};

pub const CATALOG_FILE: &str = "catalog.toml";
pub const LMP_CACHE: &str = "lmp.ckt";
pub const CURTAILMENT_CACHE: &str = "curtailment.ckt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub iso: IsoId,
    /// Canonical LMP CSV files, relative to the catalog root.
    #[serde(default)]
    pub lmp_files: Vec<PathBuf>,
    #[serde(default)]
    pub curtailment_files: Vec<PathBuf>,
    #[serde(default)]
    pub node_roster: Vec<String>,
}

impl DatasetEntry {
    pub fn new(iso: IsoId) -> Self {
        DatasetEntry {
            iso,
            lmp_files: Vec::new(),
            curtailment_files: Vec::new(),
            node_roster: Vec::new(),
        }
    }

    pub fn descriptor(&self) -> IsoDescriptor {
        self.iso.descriptor()
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CatalogFile {
    #[serde(default)]
    datasets: Vec<DatasetEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    root: PathBuf,
    datasets: Vec<DatasetEntry>,
}

impl Catalog {
    pub fn empty(root: impl Into<PathBuf>) -> Self {
        Catalog {
            root: root.into(),
            datasets: Vec::new(),
        }
    }

    /// Reads `catalog.toml` under `root`, or discovers datasets by layout.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(IngestError::Catalog(format!(
                "data root {} is not a directory",
                root.display()
            )));
        }
        let manifest = root.join(CATALOG_FILE);
        let catalog = if manifest.is_file() {
            let file: CatalogFile = toml::from_str(&std::fs::read_to_string(&manifest)?)
                .map_err(|e| IngestError::Catalog(format!("{}: {e}", manifest.display())))?;
            Catalog {
                root,
                datasets: file.datasets,
            }
        } else {
            Self::discover(root)?
        };
        catalog.validate()?;
        Ok(catalog)
    }

    fn discover(root: PathBuf) -> Result<Self, IngestError> {
        let mut datasets = Vec::new();
        for iso in IsoId::ALL {
            let dir = root.join(iso.as_str());
            if !dir.is_dir() {
                continue;
            }
            let mut entry = DatasetEntry::new(iso);
            let mut names: Vec<_> = std::fs::read_dir(&dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .collect();
            names.sort();
            for name in names {
                let rel = Path::new(iso.as_str()).join(&name);
                if name.ends_with(".csv") && name.starts_with("lmp") {
                    entry.lmp_files.push(rel);
                } else if name.ends_with(".csv") && name.starts_with("curtailment") {
                    entry.curtailment_files.push(rel);
                }
            }
            datasets.push(entry);
        }
        Ok(Catalog { root, datasets })
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen_iso = HashSet::new();
        for d in &self.datasets {
            if !seen_iso.insert(d.iso) {
                return Err(IngestError::Catalog(format!("{} is listed twice", d.iso)));
            }
            let mut seen = HashSet::new();
            if let Some(dup) = d.node_roster.iter().find(|n| !seen.insert(n.as_str())) {
                return Err(IngestError::Catalog(format!(
                    "node `{dup}` appears twice in the {} roster",
                    d.iso
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self) -> Result<(), IngestError> {
        self.validate()?;
        let text = toml::to_string_pretty(&CatalogFile {
            datasets: self.datasets.clone(),
        })
        .map_err(|e| IngestError::Catalog(e.to_string()))?;
        std::fs::create_dir_all(&self.root)?;
        std::fs::write(self.root.join(CATALOG_FILE), text)?;
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn datasets(&self) -> &[DatasetEntry] {
        &self.datasets
    }

    pub fn dataset(&self, iso: IsoId) -> Option<&DatasetEntry> {
        self.datasets.iter().find(|d| d.iso == iso)
    }

    /// Inserts or replaces the entry for `entry.iso`.
    pub fn upsert(&mut self, entry: DatasetEntry) {
        match self.datasets.iter_mut().find(|d| d.iso == entry.iso) {
            Some(slot) => *slot = entry,
            None => {
                self.datasets.push(entry);
                self.datasets.sort_by_key(|d| d.iso);
            }
        }
    }

    pub fn dataset_dir(&self, iso: IsoId) -> PathBuf {
        self.root.join(iso.as_str())
    }

    pub fn lmp_cache_path(&self, iso: IsoId) -> PathBuf {
        self.dataset_dir(iso).join(LMP_CACHE)
    }

    pub fn curtailment_cache_path(&self, iso: IsoId) -> PathBuf {
        self.dataset_dir(iso).join(CURTAILMENT_CACHE)
    }

    fn entry(&self, iso: IsoId) -> Result<&DatasetEntry, IngestError> {
        self.dataset(iso)
            .ok_or_else(|| IngestError::MissingData(format!("no {iso} dataset under {}", self.root.display())))
    }

    /// Per-node LMP series, from the cache when present.
    pub fn load_lmp(&self, iso: IsoId) -> Result<SeriesSet, IngestError> {
        let entry = self.entry(iso)?;
        let cache = self.lmp_cache_path(iso);
        if cache.is_file() {
            return read_canonical(cache);
        }
        let desc = entry.descriptor();
        let mut records = Vec::new();
        for f in &entry.lmp_files {
            let file = File::open(self.root.join(f))?;
            let (recs, _) = parse_lmp_with(BufReader::new(file), &desc, ParseOptions::default()).collect_all()?;
            records.extend(recs);
        }
        let Some(grid) = grid_covering(records.iter().map(|r| r.timestamp), &desc) else {
            return Err(IngestError::MissingData(format!("{iso} has no LMP data")));
        };
        lmp_to_series(&records, &grid)
    }

    /// Per-region curtailment series (MW or 0/1 proxy), from the cache when present.
    pub fn load_curtailment(&self, iso: IsoId) -> Result<SeriesSet, IngestError> {
        let entry = self.entry(iso)?;
        let cache = self.curtailment_cache_path(iso);
        if cache.is_file() {
            return read_canonical(cache);
        }
        let desc = entry.descriptor();
        let mut records = Vec::new();
        for f in &entry.curtailment_files {
            let file = File::open(self.root.join(f))?;
            let (recs, _) =
                parse_curtailment_with(BufReader::new(file), &desc, ParseOptions::default()).collect_all()?;
            records.extend(recs);
        }
        let Some(grid) = grid_covering(records.iter().map(|r| r.timestamp), &desc) else {
            return Err(IngestError::MissingData(format!("{iso} has no curtailment data")));
        };
        curtailment_to_series(&records, &grid)
    }
}

/// Smallest grid at the operator's granularity that contains every timestamp.
pub fn grid_covering(
    timestamps: impl IntoIterator<Item = DateTime<Utc>>,
    descriptor: &IsoDescriptor,
) -> Option<TimeGrid> {
    let (lo, hi) =
        timestamps
            .into_iter()
            .map(|t| t.timestamp())
            .fold(None, |acc: Option<(i64, i64)>, t| match acc {
                None => Some((t, t)),
                Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
            })?;
    let res = i64::from(descriptor.granularity.seconds());
    let start = lo.div_euclid(res) * res;
    let len = ((hi - start) / res + 1) as usize;
    TimeGrid::from_epoch(start, len, descriptor.granularity, descriptor.zone).ok()
}
