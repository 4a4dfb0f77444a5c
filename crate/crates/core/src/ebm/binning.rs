//! Equal-frequency binning.
//!
//! Bin index 0 is reserved for missing values in every layout. Real values
//! map to `1 + #{cuts <= x}`, so a value equal to a cut point falls into the
//! upper bin and values beyond the outermost cuts clamp to the first or last
//! real bin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::is_missing;

pub const MISSING_BIN: u32 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinDefinition {
    pub feature: String,
    /// Cut points for main-effect terms, strictly increasing.
    pub cuts: Vec<f64>,
    /// True when the training data contained missing values for this feature.
    pub has_missing: bool,
    /// Coarser cut points used by pair terms.
    #[serde(default)]
    pub interaction_cuts: Vec<f64>,
}

impl BinDefinition {
    pub fn fit(feature: &str, values: &[f64], max_bins: usize, max_interaction_bins: usize) -> Result<Self> {
        Ok(BinDefinition {
            feature: feature.to_string(),
            cuts: fit_cuts(values, max_bins)
                .map_err(|e| Error::Validation(format!("feature {feature}: {e}")))?,
            has_missing: values.iter().any(|v| is_missing(*v)),
            interaction_cuts: fit_cuts(values, max_interaction_bins)
                .map_err(|e| Error::Validation(format!("feature {feature}: {e}")))?,
        })
    }

    /// Number of bins including the missing bin.
    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 2
    }

    pub fn n_interaction_bins(&self) -> usize {
        self.interaction_cuts.len() + 2
    }

    pub fn bin(&self, x: f64) -> u32 {
        bin_index(&self.cuts, x)
    }

    pub fn interaction_bin(&self, x: f64) -> u32 {
        bin_index(&self.interaction_cuts, x)
    }

    pub fn validate(&self) -> Result<()> {
        for cuts in [&self.cuts, &self.interaction_cuts] {
            if cuts.iter().any(|c| !c.is_finite()) {
                return Err(Error::Validation(format!("feature {}: non-finite cut", self.feature)));
            }
            if cuts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation(format!(
                    "feature {}: cut points not strictly increasing",
                    self.feature
                )));
            }
        }
        Ok(())
    }
}

pub fn bin_index(cuts: &[f64], x: f64) -> u32 {
    if is_missing(x) {
        MISSING_BIN
    } else {
        1 + cuts.partition_point(|&c| c <= x) as u32
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo && m < hi {
        m
    } else {
        hi
    }
}

/// Equal-frequency cut points over the non-missing values.
///
/// With at most `max_bins` distinct values every distinct value gets its own
/// bin. Otherwise the k-th cut sits on the distinct-value boundary closest to
/// rank `k·n/max_bins`; cuts are midpoints between neighbouring distinct
/// values.
pub fn fit_cuts(values: &[f64], max_bins: usize) -> Result<Vec<f64>> {
    if max_bins == 0 {
        return Err(Error::Argument("max_bins must be >= 1".into()));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !is_missing(*v)).collect();
    if sorted.is_empty() {
        return Err(Error::Validation("column has no non-missing values".into()));
    }
    if sorted.iter().any(|v| v.is_infinite()) {
        return Err(Error::Validation("column has infinite values".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();

    // distinct[i] and the number of values <= distinct[i]
    let mut distinct: Vec<f64> = Vec::new();
    let mut ends: Vec<usize> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if distinct.last() == Some(&v) {
            *ends.last_mut().expect("paired with distinct") = i + 1;
        } else {
            distinct.push(v);
            ends.push(i + 1);
        }
    }

    if distinct.len() <= max_bins {
        return Ok(distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect());
    }

    // Boundary a separates distinct[a] from distinct[a + 1] at rank ends[a].
    let boundaries = &ends[..ends.len() - 1];
    let mut chosen: Vec<usize> = Vec::with_capacity(max_bins - 1);
    for k in 1..max_bins {
        let target = k as f64 * n as f64 / max_bins as f64;
        let hi = boundaries.partition_point(|&e| (e as f64) < target);
        let a = if hi == 0 {
            0
        } else if hi == boundaries.len() {
            hi - 1
        } else {
            let below = target - boundaries[hi - 1] as f64;
            let above = boundaries[hi] as f64 - target;
            if above < below {
                hi
            } else {
                hi - 1
            }
        };
        chosen.push(a);
    }
    chosen.dedup();
    Ok(chosen.into_iter().map(|a| midpoint(distinct[a], distinct[a + 1])).collect())
}

/// Column-major bin codes for main-effect and pair terms.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDataset {
    pub n_rows: usize,
    pub main: Vec<Vec<u32>>,
    pub main_bins: Vec<usize>,
    pub pair: Vec<Vec<u32>>,
    pub pair_bins: Vec<usize>,
}

impl BinnedDataset {
    /// Uses the same codes for main and pair terms.
    pub fn from_codes(columns: Vec<Vec<u32>>, n_bins: Vec<usize>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.len() != n_bins.len() {
            return Err(Error::Schema("one bin count per column required".into()));
        }
        for (col, &nb) in columns.iter().zip(&n_bins) {
            if col.len() != n_rows {
                return Err(Error::Schema("columns differ in length".into()));
            }
            if col.iter().any(|&b| b as usize >= nb) {
                return Err(Error::Schema("bin code exceeds bin count".into()));
            }
        }
        Ok(BinnedDataset {
            n_rows,
            main: columns.clone(),
            main_bins: n_bins.clone(),
            pair: columns,
            pair_bins: n_bins,
        })
    }

    pub fn n_features(&self) -> usize {
        self.main.len()
    }
}

/// Maps every (already scaled) value to its bin.
pub fn bin_data(rows: &[Vec<f64>], bins: &[BinDefinition]) -> Result<BinnedDataset> {
    let d = bins.len();
    let mut main = vec![Vec::with_capacity(rows.len()); d];
    let mut pair = vec![Vec::with_capacity(rows.len()); d];
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Schema(format!("row {i} has {} values, expected {d}", row.len())));
        }
        for (j, (&x, def)) in row.iter().zip(bins).enumerate() {
            main[j].push(def.bin(x));
            pair[j].push(def.interaction_bin(x));
        }
    }
    Ok(BinnedDataset {
        n_rows: rows.len(),
        main,
        main_bins: bins.iter().map(BinDefinition::n_bins).collect(),
        pair,
        pair_bins: bins.iter().map(BinDefinition::n_interaction_bins).collect(),
    })
}
