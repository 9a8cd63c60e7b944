use serde::{Deserialize, Serialize};

use super::run::ResultTable;
use crate::error::{Error, Result};

/// `bin_lo,bin_hi,count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramOverlay {
    pub estimator: String,
    pub n: usize,
    pub replicates: usize,
    pub bin_width: f64,
    pub empirical: Gaussian,
    /// Limiting law including interference.
    pub full: Option<Gaussian>,
    /// Limiting law that ignores interference.
    pub naive: Option<Gaussian>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
    pub overlay: HistogramOverlay,
}

/// Bin the estimates of `estimator` at grid size `n` (optional when the table has one size).
pub fn histogram_export(table: &ResultTable, estimator: &str, n: Option<usize>, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Config("need at least one bin".into()));
    }
    let n = match n {
        Some(n) => n,
        None => match table.metadata.grid.as_slice() {
            [only] => only.n,
            _ => return Err(Error::Config("table has several grid sizes; choose one".into())),
        },
    };
    let xs = table.estimates(estimator, n);
    if xs.is_empty() {
        return Err(Error::Config(format!("no rows for estimator '{estimator}' at n = {n}")));
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &xs {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let bins: Vec<HistogramBin> = counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            bin_lo: lo + k as f64 * width,
            bin_hi: if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width },
            count,
        })
        .collect();

    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    let theory = table.metadata.overlay(estimator, n);
    Ok(Histogram {
        bins,
        overlay: HistogramOverlay {
            estimator: estimator.to_string(),
            n,
            replicates: xs.len(),
            bin_width: width,
            empirical: Gaussian { mean, sd: var.sqrt() },
            full: theory.map(|o| Gaussian { mean: o.mean, sd: o.sd }),
            naive: theory.and_then(|o| o.naive_sd.map(|sd| Gaussian { mean: o.mean, sd })),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::RunConfig;
    use crate::harness::run::run_replications;

    #[test]
    fn counts_are_conserved_and_empty_filter_fails() {
        let mut c = RunConfig::for_preset("figure2_constant", vec![80], 25, 5);
        c.theory.outer = 200;
        let t = run_replications(&c).unwrap();
        let h = histogram_export(&t, "ht_dir", None, 7).unwrap();
        assert_eq!(h.bins.iter().map(|b| b.count).sum::<usize>(), 25);
        assert!(h.overlay.full.is_some() && h.overlay.naive.is_some());
        assert!(histogram_export(&t, "pc_ind", None, 7).is_err());
        assert!(histogram_export(&t, "ht_dir", Some(81), 7).is_err());
    }
}
