use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::timeseries::{Series, Unit};

use super::threshold::ThresholdResult;
use super::{same_axis, DetectError};

pub const DEFAULT_MIN_COUNT: usize = 30;

/// How a bin's population is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    /// Steps whose minimum price falls inside the bin.
    #[default]
    Binned,
    /// Steps whose minimum price is below the bin's upper edge.
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub min_count: usize,
    pub conditioning: Conditioning,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            min_count: DEFAULT_MIN_COUNT,
            conditioning: Conditioning::Binned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    /// Inclusive lower edge, USD/MWh.
    pub lo: f64,
    /// Exclusive upper edge, USD/MWh.
    pub hi: f64,
    pub sample_count: usize,
    pub curtailed_count: usize,
    /// Present only when `sample_count` reaches the minimum.
    pub frequency: Option<f64>,
}

impl CalibrationBin {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Empirical probability of curtailment at or above `amount_level`, as a
/// function of the system-minimum nodal price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub amount_level: f64,
    pub conditioning: Conditioning,
    pub min_count: usize,
    pub bins: Vec<CalibrationBin>,
}

impl CalibrationCurve {
    pub fn bin_edges(&self) -> Vec<f64> {
        let mut edges: Vec<f64> = self.bins.iter().map(|b| b.lo).collect();
        edges.extend(self.bins.last().map(|b| b.hi));
        edges
    }

    /// Bins with a reported frequency.
    pub fn calibrated(&self) -> impl Iterator<Item = &CalibrationBin> {
        self.bins.iter().filter(|b| b.frequency.is_some())
    }
}

/// `$width` bins from `lo` to `hi`.
pub fn uniform_edges(lo: f64, hi: f64, width: f64) -> Result<Vec<f64>, DetectError> {
    if !(lo.is_finite() && hi.is_finite() && width.is_finite()) || width <= 0.0 || hi <= lo {
        return Err(DetectError::BadEdges(format!(
            "cannot build bins from {lo} to {hi} by {width}"
        )));
    }
    let n = ((hi - lo) / width).round() as usize;
    if n == 0 || ((n as f64) * width - (hi - lo)).abs() > 1e-9 * width.max(1.0) {
        return Err(DetectError::BadEdges(format!(
            "{width} does not divide [{lo}, {hi}] evenly"
        )));
    }
    Ok((0..=n).map(|i| lo + i as f64 * width).collect())
}

/// $1 bins over [-$50, $50].
pub fn default_bin_edges() -> Vec<f64> {
    uniform_edges(-50.0, 50.0, 1.0).expect("static bin layout")
}

pub(crate) fn check_edges(edges: &[f64], min_len: usize) -> Result<(), DetectError> {
    if edges.len() < min_len {
        return Err(DetectError::BadEdges(format!(
            "need at least {min_len} edge(s), got {}",
            edges.len()
        )));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(DetectError::BadEdges("edges must be finite".into()));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DetectError::BadEdges("edges must be strictly ascending".into()));
    }
    Ok(())
}

/// Curtailment test for one step.
///
/// Boolean inputs count a true flag regardless of level. For MW inputs a
/// positive level means "at least that many MW"; a level of zero means any
/// curtailment at all.
pub(crate) fn curtailment_predicate(unit: Unit, amount_level: f64) -> Result<impl Fn(f64) -> bool, DetectError> {
    match unit {
        Unit::Boolean01 => Ok(Box::new(|v: f64| v >= 1.0) as Box<dyn Fn(f64) -> bool>),
        Unit::Mw => {
            if !amount_level.is_finite() || amount_level < 0.0 {
                return Err(DetectError::InvalidAmountLevel(amount_level));
            }
            if amount_level > 0.0 {
                Ok(Box::new(move |v: f64| v >= amount_level))
            } else {
                Ok(Box::new(|v: f64| v > 0.0))
            }
        }
        other => Err(DetectError::UnitMismatch {
            expected: "MW or boolean01",
            found: other,
        }),
    }
}

pub fn calibration_curve(
    min_lmp: &Series,
    curtailment: &Series,
    amount_level: f64,
    edges: &[f64],
) -> Result<CalibrationCurve, DetectError> {
    calibration_curve_with(min_lmp, curtailment, amount_level, edges, CalibrationOptions::default())
}

/// Frequency of curtailment per minimum-price bin.
///
/// Both series must share a grid. Steps where either is a gap, or where the
/// price falls outside the edges, are ignored.
pub fn calibration_curve_with(
    min_lmp: &Series,
    curtailment: &Series,
    amount_level: f64,
    edges: &[f64],
    options: CalibrationOptions,
) -> Result<CalibrationCurve, DetectError> {
    check_edges(edges, 2)?;
    if min_lmp.unit() != Unit::UsdPerMwh {
        return Err(DetectError::UnitMismatch {
            expected: "USD_per_MWh",
            found: min_lmp.unit(),
        });
    }
    if !same_axis(min_lmp, curtailment) {
        return Err(DetectError::GridMismatch);
    }
    let curtailing = curtailment_predicate(curtailment.unit(), amount_level)?;

    let n_bins = edges.len() - 1;
    let mut samples = vec![0usize; n_bins];
    let mut positives = vec![0usize; n_bins];
    // Steps below the first edge still count toward cumulative bins.
    let (mut below_samples, mut below_positives) = (0usize, 0usize);
    for (p, c) in min_lmp.values().iter().zip(curtailment.values()) {
        let (Some(p), Some(c)) = (p, c) else { continue };
        let hit = curtailing(*c);
        if *p < edges[0] {
            below_samples += 1;
            below_positives += usize::from(hit);
            continue;
        }
        // First edge strictly greater than p, minus one, is p's bin.
        let b = edges.partition_point(|e| e <= p);
        if b == 0 || b > n_bins {
            continue;
        }
        samples[b - 1] += 1;
        positives[b - 1] += usize::from(hit);
    }

    if options.conditioning == Conditioning::Cumulative {
        let (mut s, mut k) = (below_samples, below_positives);
        for b in 0..n_bins {
            s += samples[b];
            k += positives[b];
            samples[b] = s;
            positives[b] = k;
        }
    }

    let bins: Vec<CalibrationBin> = (0..n_bins)
        .map(|b| CalibrationBin {
            lo: edges[b],
            hi: edges[b + 1],
            sample_count: samples[b],
            curtailed_count: positives[b],
            frequency: (samples[b] >= options.min_count.max(1)).then(|| positives[b] as f64 / samples[b] as f64),
        })
        .collect();

    if bins.iter().all(|b| b.frequency.is_none()) {
        return Err(DetectError::EmptyBins {
            min_count: options.min_count,
        });
    }
    Ok(CalibrationCurve {
        amount_level,
        conditioning: options.conditioning,
        min_count: options.min_count,
        bins,
    })
}

/// Writes `bin_lo,bin_hi,count,freq,fitted_freq`; frequency columns are empty
/// for bins below the minimum count.
pub fn write_curve_csv<W: Write>(
    mut out: W,
    curve: &CalibrationCurve,
    threshold: Option<&ThresholdResult>,
) -> std::io::Result<()> {
    writeln!(out, "bin_lo,bin_hi,count,freq,fitted_freq")?;
    let mut fitted = threshold.map(|t| t.fitted.iter().peekable());
    for b in &curve.bins {
        let freq = b.frequency.map(|f| f.to_string()).unwrap_or_default();
        let fit = match (&mut fitted, b.frequency) {
            (Some(it), Some(_)) => it.next().map(|p| p.fitted.to_string()).unwrap_or_default(),
            _ => String::new(),
        };
        writeln!(out, "{},{},{},{},{}", b.lo, b.hi, b.sample_count, freq, fit)?;
    }
    Ok(())
}
