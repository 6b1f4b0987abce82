//! Thermodynamic estimators over sample series.
//!
//! Means carry a plain standard error; the variance-based quantities
//! (specific heat, susceptibility) carry a 20-block jackknife error, which
//! absorbs residual sample correlation. All errors are quoted as 2σ.

use crate::engine::SampleSeries;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const JACKKNIFE_BLOCKS: usize = 20;

/// A point estimate with a 2σ uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub two_sigma: f64,
    /// samples / (1 + 2τ) when an autocorrelation time is supplied.
    pub n_effective: f64,
}

impl EstimateWithError {
    /// Combined 3σ agreement test between two estimates (σ = 2σ/2 each).
    pub fn agrees_within_3_sigma(&self, other: f64, other_two_sigma: f64) -> bool {
        let sigma =
            ((self.two_sigma / 2.0).powi(2) + (other_two_sigma / 2.0).powi(2)).sqrt();
        (self.value - other).abs() <= 3.0 * sigma.max(f64::MIN_POSITIVE)
    }
}

fn require_records(s: &SampleSeries, min: usize) -> Result<()> {
    if s.len() < min {
        return Err(Error::InvalidArgument(format!(
            "series has {} records, need >= {min}",
            s.len()
        )));
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean and 2× standard error of the mean.
pub(crate) fn mean_with_error(values: &[f64]) -> EstimateWithError {
    let n = values.len() as f64;
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0);
    EstimateWithError {
        value: mu,
        two_sigma: 2.0 * (var / n).sqrt(),
        n_effective: n,
    }
}

/// Sample mean of the energy.
pub fn mean_energy(s: &SampleSeries) -> Result<EstimateWithError> {
    require_records(s, 2)?;
    Ok(mean_with_error(&s.energies))
}

/// ⟨|M|⟩/N, the order parameter m(N, T).
pub fn magnetization_per_site(s: &SampleSeries) -> Result<EstimateWithError> {
    require_records(s, 1)?;
    let n = s.n_sites as f64;
    let values: Vec<f64> = s.abs_magnetizations.iter().map(|&m| f64::from(m) / n).collect();
    if values.len() == 1 {
        return Ok(EstimateWithError {
            value: values[0],
            two_sigma: 0.0,
            n_effective: 1.0,
        });
    }
    Ok(mean_with_error(&values))
}

/// Jackknife over contiguous blocks for a statistic of (Σx, Σx², count).
fn jackknife_variance_statistic(
    values: &[f64],
    squares: &[f64],
    statistic: impl Fn(f64, f64, f64) -> f64,
) -> EstimateWithError {
    let n = values.len();
    let total: f64 = values.iter().sum();
    let total_sq: f64 = squares.iter().sum();
    let full = statistic(total, total_sq, n as f64);

    let n_blocks = JACKKNIFE_BLOCKS.min(n);
    let mut estimates = Vec::with_capacity(n_blocks);
    let base = n / n_blocks;
    let rem = n % n_blocks;
    let mut start = 0;
    for b in 0..n_blocks {
        let len = base + usize::from(b < rem);
        let bsum: f64 = values[start..start + len].iter().sum();
        let bsq: f64 = squares[start..start + len].iter().sum();
        estimates.push(statistic(total - bsum, total_sq - bsq, (n - len) as f64));
        start += len;
    }
    let jk_mean = mean(&estimates);
    let bf = n_blocks as f64;
    let var = (bf - 1.0) / bf
        * estimates.iter().map(|e| (e - jk_mean).powi(2)).sum::<f64>();
    EstimateWithError {
        value: full,
        two_sigma: 2.0 * var.sqrt(),
        n_effective: n as f64,
    }
}

/// Specific heat per site, c = (⟨E²⟩ - ⟨E⟩²)/(N T²).
pub fn specific_heat(s: &SampleSeries) -> Result<EstimateWithError> {
    require_records(s, 2)?;
    let t = s.params.temperature;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("temperature must be > 0".into()));
    }
    let n = s.n_sites as f64;
    let squares: Vec<f64> = s.energies.iter().map(|e| e * e).collect();
    Ok(jackknife_variance_statistic(
        &s.energies,
        &squares,
        move |sum, sum_sq, count| {
            let mu = sum / count;
            (sum_sq / count - mu * mu) / (n * t * t)
        },
    ))
}

/// Susceptibility per site from |M|, χ = (⟨M²⟩ - ⟨|M|⟩²)/(N T).
pub fn susceptibility(s: &SampleSeries) -> Result<EstimateWithError> {
    require_records(s, 2)?;
    let t = s.params.temperature;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("temperature must be > 0".into()));
    }
    let n = s.n_sites as f64;
    let values: Vec<f64> = s.abs_magnetizations.iter().map(|&m| f64::from(m)).collect();
    let squares: Vec<f64> = values.iter().map(|m| m * m).collect();
    Ok(jackknife_variance_statistic(
        &values,
        &squares,
        move |sum, sum_sq, count| {
            let mu = sum / count;
            (sum_sq / count - mu * mu) / (n * t)
        },
    ))
}

/// Mean with a 2σ error from block means (for correlated chains).
pub fn blocked_mean(values: &[f64], n_blocks: usize) -> EstimateWithError {
    assert!(n_blocks >= 2 && values.len() >= n_blocks);
    let base = values.len() / n_blocks;
    let rem = values.len() % n_blocks;
    let mut block_means = Vec::with_capacity(n_blocks);
    let mut start = 0;
    for b in 0..n_blocks {
        let len = base + usize::from(b < rem);
        block_means.push(mean(&values[start..start + len]));
        start += len;
    }
    let est = mean_with_error(&block_means);
    EstimateWithError {
        value: est.value,
        two_sigma: est.two_sigma,
        n_effective: n_blocks as f64,
    }
}
