//! Finite-size-scaling fits and critical exponents.
//!
//! The three-parameter fit T_max = T_c + χ0 · N^(-1/ν') is separable: for a
//! fixed ν' the model is linear in (T_c, χ0), so the search reduces to a
//! deterministic one-dimensional minimization over ν', multi-started to
//! avoid local minima on four-point data sets. Parameter errors come from
//! the linearized covariance at the optimum, scaled by the reduced chi²
//! when there are spare degrees of freedom.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// ν' multi-start grid; best SSE wins, ties broken by smallest ν'.
pub const NU_PRIME_STARTS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];
/// Search bounds for ν'.
pub const NU_PRIME_BOUNDS: (f64, f64) = (0.2, 200.0);

/// Result of the peak-scaling fit T_max = T_c + χ0 · N^(-1/ν').
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FssFit {
    pub t_c: f64,
    pub chi0: f64,
    pub nu_prime: f64,
    /// 2σ for (T_c, χ0, ν').
    pub two_sigma: [f64; 3],
    pub residuals: Vec<f64>,
    /// Set when ν' stopped at a search bound; treat the fit as suspect.
    pub at_bound: bool,
}

/// Power-law fit y = A · N^p via weighted linear regression in log space.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub two_sigma_exponent: f64,
    pub two_sigma_amplitude: f64,
}

/// Critical exponents with the Rushbrooke-Josephson consistency check.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentSet {
    pub beta_over_nup: f64,
    pub gamma_over_nup: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// γ/ν' + 2β/ν'; equals 1 when the scaling laws are consistent.
    pub josephson_check: f64,
    pub two_sigma_beta_over_nup: f64,
    pub two_sigma_gamma_over_nup: f64,
    pub two_sigma_alpha: f64,
    pub two_sigma_beta: f64,
    pub two_sigma_gamma: f64,
    pub two_sigma_josephson: f64,
}

/// Wolff dynamical exponent z/d = z0/d + γ/ν' - 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DynamicalExponent {
    pub z0_over_d: f64,
    pub z_over_d: f64,
    pub two_sigma_z0: f64,
    pub two_sigma_z: f64,
}

fn weights(sigmas: &[f64]) -> Vec<f64> {
    // zero-noise synthetic inputs carry sigma = 0: fall back to unit weights
    if sigmas.iter().any(|&s| !(s > 0.0)) {
        vec![1.0; sigmas.len()]
    } else {
        sigmas.iter().map(|&s| 1.0 / (s * s)).collect()
    }
}

/// Weighted linear fit y = a + b x. Returns (a, b, cov_aa, cov_bb, sse).
fn weighted_linear(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64, f64, f64) {
    let sw: f64 = w.iter().sum();
    let sx: f64 = x.iter().zip(w).map(|(x, w)| x * w).sum();
    let sy: f64 = y.iter().zip(w).map(|(y, w)| y * w).sum();
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| x * x * w).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| x * y * w).sum();
    let det = sw * sxx - sx * sx;
    let a = (sxx * sy - sx * sxy) / det;
    let b = (sw * sxy - sx * sy) / det;
    let sse: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (y - a - b * x).powi(2))
        .sum();
    (a, b, sxx / det, sw / det, sse)
}

fn fss_sse(points: &[(f64, f64, f64)], w: &[f64], nu_prime: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = points.iter().map(|&(n, _, _)| n.powf(-1.0 / nu_prime)).collect();
    let y: Vec<f64> = points.iter().map(|&(_, t, _)| t).collect();
    let (a, b, _, _, sse) = weighted_linear(&x, &y, w);
    (sse, a, b)
}

/// Golden-section minimization in ln ν' within [lo, hi].
fn minimize_nu(points: &[(f64, f64, f64)], w: &[f64], lo: f64, hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = fss_sse(points, w, c.exp()).0;
    let mut fd = fss_sse(points, w, d.exp()).0;
    while (b - a).abs() > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = fss_sse(points, w, c.exp()).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = fss_sse(points, w, d.exp()).0;
        }
    }
    (0.5 * (a + b)).exp()
}

/// Solves the symmetric 3x3 system M v = rhs for each basis vector to invert M.
fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < f64::MIN_POSITIVE * 1e10 {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((i + 1) % 3, (i + 2) % 3);
            let (c, d) = ((j + 1) % 3, (j + 2) % 3);
            // adjugate with transposition folded in
            inv[j][i] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) * inv_det;
        }
    }
    Some(inv)
}

/// Weighted nonlinear least squares of T_peak = T_c + χ0 · N^(-1/ν').
///
/// Points are (N, T_peak, sigma). Needs at least three points with distinct N.
pub fn fit_fss(points: &[(f64, f64, f64)]) -> Result<FssFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(
            "FSS fit needs >= 3 points (3 parameters)".into(),
        ));
    }
    let mut ns: Vec<u64> = points.iter().map(|&(n, _, _)| n as u64).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != points.len() {
        return Err(Error::InvalidArgument("system sizes N must be distinct".into()));
    }
    // sort by N so the fit is invariant under input reordering
    let mut points: Vec<(f64, f64, f64)> = points.to_vec();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let w = weights(&points.iter().map(|&(_, _, s)| s).collect::<Vec<_>>());

    let (blo, bhi) = NU_PRIME_BOUNDS;
    let mut candidates: Vec<(f64, f64)> = Vec::new(); // (sse, nu')
    for &start in &NU_PRIME_STARTS {
        // local bracket around the start, clipped to the global bounds
        let lo = (start / 8.0).max(blo);
        let hi = (start * 8.0).min(bhi);
        let nu = minimize_nu(&points, &w, lo, hi);
        candidates.push((fss_sse(&points, &w, nu).0, nu));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (sse, nu_prime) = candidates[0];
    if !sse.is_finite() || !nu_prime.is_finite() {
        return Err(Error::FitFailed(format!(
            "FSS multi-start did not converge; candidates: {candidates:?}"
        )));
    }
    let at_bound = nu_prime <= blo * 1.0001 || nu_prime >= bhi * 0.9999;
    let (_, t_c, chi0) = fss_sse(&points, &w, nu_prime);

    // linearized covariance at the optimum
    let ln_nu = nu_prime;
    let mut jtj = [[0.0f64; 3]; 3];
    let mut residuals = Vec::with_capacity(points.len());
    for (idx, &(n, t, _)) in points.iter().enumerate() {
        let x = n.powf(-1.0 / ln_nu);
        let j = [1.0, x, chi0 * x * n.ln() / (ln_nu * ln_nu)];
        for r in 0..3 {
            for c in 0..3 {
                jtj[r][c] += w[idx] * j[r] * j[c];
            }
        }
        residuals.push(t - (t_c + chi0 * x));
    }
    let cov = invert3(jtj).ok_or_else(|| {
        Error::FitFailed("singular normal equations in FSS covariance".into())
    })?;
    let dof = points.len() as f64 - 3.0;
    let scale = if dof > 0.0 { (sse / dof).max(0.0) } else { 1.0 };
    let two_sigma = [
        2.0 * (cov[0][0] * scale).max(0.0).sqrt(),
        2.0 * (cov[1][1] * scale).max(0.0).sqrt(),
        2.0 * (cov[2][2] * scale).max(0.0).sqrt(),
    ];

    Ok(FssFit {
        t_c,
        chi0,
        nu_prime,
        two_sigma,
        residuals,
        at_bound,
    })
}

/// Weighted power-law fit on (ln N, ln y). Points are (N, y, sigma_y).
pub fn fit_power_law(points: &[(f64, f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("power-law fit needs >= 2 points".into()));
    }
    if points.iter().any(|&(n, y, _)| !(y > 0.0) || !(n > 0.0)) {
        return Err(Error::InvalidArgument(
            "power-law fit requires positive N and y".into(),
        ));
    }
    let mut points: Vec<(f64, f64, f64)> = points.to_vec();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x: Vec<f64> = points.iter().map(|&(n, _, _)| n.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|&(_, y, _)| y.ln()).collect();
    // sigma in log space: sigma_y / y
    let ls: Vec<f64> = points.iter().map(|&(_, y, s)| s / y).collect();
    let w = weights(&ls);
    let (a, b, cov_a, cov_b, sse) = weighted_linear(&x, &ly, &w);
    let dof = points.len() as f64 - 2.0;
    let scale = if dof > 0.0 { sse / dof } else { 1.0 };
    Ok(PowerLawFit {
        exponent: b,
        amplitude: a.exp(),
        two_sigma_exponent: 2.0 * (cov_b * scale).max(0.0).sqrt(),
        two_sigma_amplitude: 2.0 * (cov_a * scale).max(0.0).sqrt() * a.exp(),
    })
}

/// Derives (α, β, γ) from ν' and the measured ratios; α via Rushbrooke
/// α = 2 - 2β - γ, consistency via γ/ν' + 2β/ν' = 1. Uncertainties are
/// first-order propagated 2σ values.
pub fn derive_exponents(
    fss: &FssFit,
    beta_over_nup: (f64, f64),
    gamma_over_nup: (f64, f64),
) -> ExponentSet {
    let nu = fss.nu_prime;
    let s_nu = fss.two_sigma[2];
    let (rb, s_rb) = beta_over_nup;
    let (rg, s_rg) = gamma_over_nup;

    let beta = rb * nu;
    let gamma = rg * nu;
    let s_beta = ((rb * s_nu).powi(2) + (nu * s_rb).powi(2)).sqrt();
    let s_gamma = ((rg * s_nu).powi(2) + (nu * s_rg).powi(2)).sqrt();
    let alpha = 2.0 - 2.0 * beta - gamma;
    let s_alpha = (4.0 * s_beta * s_beta + s_gamma * s_gamma).sqrt();
    let josephson = rg + 2.0 * rb;
    let s_jos = (s_rg * s_rg + 4.0 * s_rb * s_rb).sqrt();

    ExponentSet {
        beta_over_nup: rb,
        gamma_over_nup: rg,
        alpha,
        beta,
        gamma,
        josephson_check: josephson,
        two_sigma_beta_over_nup: s_rb,
        two_sigma_gamma_over_nup: s_rg,
        two_sigma_alpha: s_alpha,
        two_sigma_beta: s_beta,
        two_sigma_gamma: s_gamma,
        two_sigma_josephson: s_jos,
    }
}

/// z/d = z0/d + γ/ν' - 1, errors combined in quadrature.
pub fn derive_wolff_z(z0_over_d: (f64, f64), gamma_over_nup: (f64, f64)) -> DynamicalExponent {
    let (z0, s_z0) = z0_over_d;
    let (rg, s_rg) = gamma_over_nup;
    DynamicalExponent {
        z0_over_d: z0,
        z_over_d: z0 + rg - 1.0,
        two_sigma_z0: s_z0,
        two_sigma_z: (s_z0 * s_z0 + s_rg * s_rg).sqrt(),
    }
}
