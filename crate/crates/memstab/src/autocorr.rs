//! Magnetization autocorrelation analysis.
//!
//! ρ(t) is the normalized biased autocovariance of the |M| series (one entry
//! per cluster flip for Wolff chains). The Wolff autocorrelation time comes
//! from a single-exponential fit with the intercept fixed at ρ(0) = 1;
//! since τ is below one cluster flip here, only the first lags carry signal
//! and anything under the 0.05 noise floor is excluded from the fit.

use crate::error::{Error, Result};
use crate::scaling::{self, PowerLawFit};
use serde::{Deserialize, Serialize};

/// Lags with ρ below this floor are dropped from the exponential fit.
pub const NOISE_FLOOR: f64 = 0.05;

/// Autocorrelation function plus fitted decay time for one chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutocorrResult {
    pub lags: Vec<usize>,
    pub rho: Vec<f64>,
    /// Decay time in Monte Carlo steps (cluster flips for Wolff).
    pub tau_steps: f64,
    pub two_sigma: f64,
    /// Fewer than 3 lags above the noise floor; τ comes from lag 1 alone.
    pub low_confidence: bool,
}

/// Normalized autocovariance ρ(t) = C(t)/C(0) with C the biased estimator.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    if max_lag == 0 || series.len() < 10 * max_lag {
        return Err(Error::InvalidArgument(format!(
            "series length {} must be >= 10 * max_lag ({max_lag})",
            series.len()
        )));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0 = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    let mut lags = Vec::with_capacity(max_lag + 1);
    let mut rho = Vec::with_capacity(max_lag + 1);
    lags.push(0);
    rho.push(1.0);
    for t in 1..=max_lag {
        let c: f64 = series[..n - t]
            .iter()
            .zip(&series[t..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n as f64;
        lags.push(t);
        rho.push(c / c0);
    }
    Ok((lags, rho))
}

/// Single-exponential fit ρ(t) = exp(-t/τ) over lags above the noise floor.
///
/// Returns (τ, low_confidence). With fewer than 3 usable lags, τ comes from
/// lag 1 alone and the low-confidence flag is set.
pub fn fit_tau(lags: &[usize], rho: &[f64]) -> Result<(f64, bool)> {
    if lags.len() != rho.len() || lags.len() < 2 {
        return Err(Error::InvalidArgument("need matched lags/rho with lag >= 1".into()));
    }
    let usable: Vec<(f64, f64)> = lags
        .iter()
        .zip(rho)
        .filter(|&(&t, &r)| t >= 1 && r > NOISE_FLOOR)
        .map(|(&t, &r)| (t as f64, r))
        .collect();
    if usable.len() >= 3 {
        // log-space least squares through the origin (ρ(0) = 1 fixed)
        let num: f64 = usable.iter().map(|&(t, r)| t * r.ln()).sum();
        let den: f64 = usable.iter().map(|&(t, _)| t * t).sum();
        let slope = num / den;
        if !(slope < 0.0) {
            return Err(Error::FitFailed(format!("non-decaying rho, slope {slope}")));
        }
        Ok((-1.0 / slope, false))
    } else {
        let rho1 = rho[lags.iter().position(|&t| t == 1).ok_or_else(|| {
            Error::InvalidArgument("lag-1 value required for fallback".into())
        })?];
        if !(rho1 > 0.0) {
            return Err(Error::FitFailed(format!(
                "lag-1 autocorrelation {rho1} <= 0; tau undefined"
            )));
        }
        Ok((-1.0 / rho1.ln(), true))
    }
}

/// Full analysis of one |M| series.
pub fn analyze(series: &[f64], max_lag: usize) -> Result<AutocorrResult> {
    let (lags, rho) = autocorrelation(series, max_lag)?;
    let (tau, low_confidence) = fit_tau(&lags, &rho)?;
    Ok(AutocorrResult {
        lags,
        rho,
        tau_steps: tau,
        two_sigma: 0.0,
        low_confidence,
    })
}

/// Replica protocol: τ per replica, combined as mean ± 2× replica std dev.
pub fn tau_from_replicas(replicas: &[Vec<f64>], max_lag: usize) -> Result<AutocorrResult> {
    if replicas.is_empty() {
        return Err(Error::InvalidArgument("no replicas".into()));
    }
    let results: Vec<AutocorrResult> = replicas
        .iter()
        .map(|s| analyze(s, max_lag))
        .collect::<Result<_>>()?;
    let n = results.len() as f64;
    let tau_mean = results.iter().map(|r| r.tau_steps).sum::<f64>() / n;
    let two_sigma = if results.len() > 1 {
        let var = results
            .iter()
            .map(|r| (r.tau_steps - tau_mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        2.0 * var.sqrt()
    } else {
        0.0
    };
    let first = &results[0];
    Ok(AutocorrResult {
        lags: first.lags.clone(),
        rho: first.rho.clone(),
        tau_steps: tau_mean,
        two_sigma,
        low_confidence: results.iter().any(|r| r.low_confidence),
    })
}

/// Power law τ ∝ N^(z0/d) at the critical temperature.
/// Points are (N, τ, sigma_τ); returns the fitted exponent.
pub fn fit_z0(points: &[(f64, f64, f64)]) -> Result<PowerLawFit> {
    scaling::fit_power_law(points)
}
