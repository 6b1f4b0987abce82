//! End-to-end experiment orchestration: staging scans, production chains,
//! reweighted peaks, finite-size-scaling fits, exponents, autocorrelation.
//!
//! Independent (structure, level, replica) cells run on a rayon pool and
//! share nothing mutable; records are written by the single caller thread in
//! a fixed order, so identical configs yield byte-identical stores.

use crate::autocorr;
use crate::engine::{run_chain, Algorithm, ChainParams, SampleSeries};
use crate::error::{Error, Result};
use crate::observables;
use crate::oracle;
use crate::pipeline::config::{default_t_c, default_t_sim, ExperimentConfig, Stage};
use crate::pipeline::seeds::derive_seed;
use crate::pipeline::store::{Record, ResultsStore};
use crate::reweight;
use crate::scaling;
use crate::structures::{build_structure, coordination_stats, StabilizerGraph, StructureId};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Temperature-index namespace for seed derivation, per run kind.
const TEMP_INDEX_PRODUCTION: u32 = 0;
const TEMP_INDEX_CRITICAL: u32 = 1000;
const TEMP_INDEX_AUTOCORR: u32 = 2000;
const TEMP_INDEX_STAGING: u32 = 3000;

/// Writes a sample series as CSV plus a JSON metadata sidecar.
pub fn write_series_csv(path: &Path, series: &SampleSeries) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let therm = series.params.thermalization_steps;
    let interval = series.params.sample_interval;
    match &series.cluster_sizes {
        Some(clusters) => {
            writeln!(out, "step,energy,abs_m,cluster_size")?;
            for (i, ((e, m), c)) in series.records().zip(clusters).enumerate() {
                writeln!(out, "{},{},{},{}", therm + (i + 1) * interval, e, m, c)?;
            }
        }
        None => {
            writeln!(out, "step,energy,abs_m")?;
            for (i, (e, m)) in series.records().enumerate() {
                writeln!(out, "{},{},{}", therm + (i + 1) * interval, e, m)?;
            }
        }
    }
    out.flush()?;
    let sidecar = path.with_extension("json");
    let meta = serde_json::json!({
        "structure": series.structure,
        "level": series.level,
        "n_sites": series.n_sites,
        "params": series.params,
    });
    std::fs::write(sidecar, serde_json::to_string_pretty(&meta).unwrap())?;
    Ok(())
}

/// Reads a series back from CSV + sidecar.
pub fn read_series_csv(path: &Path) -> Result<SampleSeries> {
    let sidecar = path.with_extension("json");
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)
        .map_err(|e| Error::Record(format!("{sidecar:?}: {e}")))?;
    let params: ChainParams = serde_json::from_value(meta["params"].clone())
        .map_err(|e| Error::Record(format!("{sidecar:?}: {e}")))?;
    let structure: StructureId = serde_json::from_value(meta["structure"].clone())
        .map_err(|e| Error::Record(e.to_string()))?;
    let level = meta["level"].as_u64().ok_or_else(|| Error::Record("level".into()))? as u32;
    let n_sites = meta["n_sites"].as_u64().ok_or_else(|| Error::Record("n_sites".into()))? as usize;

    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Record("empty csv".into()))?;
    let has_clusters = header.trim() == "step,energy,abs_m,cluster_size";
    let mut energies = Vec::new();
    let mut abs_ms = Vec::new();
    let mut clusters = if has_clusters { Some(Vec::new()) } else { None };
    for line in lines {
        let mut parts = line.split(',');
        let _step = parts.next();
        let e: f64 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Record(format!("bad row `{line}`")))?;
        let m: u32 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Record(format!("bad row `{line}`")))?;
        energies.push(e);
        abs_ms.push(m);
        if let Some(c) = clusters.as_mut() {
            let v: u32 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Record(format!("bad row `{line}`")))?;
            c.push(v);
        }
    }
    Ok(SampleSeries {
        params,
        structure,
        level,
        n_sites,
        energies,
        abs_magnetizations: abs_ms,
        cluster_sizes: clusters,
    })
}

fn series_path(dir: &Path, kind: &str, s: StructureId, k: u32, t: f64, r: u32) -> PathBuf {
    dir.join("series")
        .join(format!("{kind}_s{}_k{k}_T{t:.4}_r{r}.csv", s.index()))
}

/// Runs the replicas of one cell in parallel (deterministic per-replica seeds).
fn run_replicas(
    g: &StabilizerGraph,
    cfg: &ExperimentConfig,
    t: f64,
    temp_index: u32,
    n_samples: usize,
    sample_interval: usize,
    replicas: u32,
) -> Result<Vec<SampleSeries>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let params = ChainParams {
                temperature: t,
                thermalization_steps: cfg.thermalization,
                sample_interval,
                n_samples,
                seed: derive_seed(cfg.base_seed, g.structure().index(), g.level(), temp_index, r),
                algorithm: Algorithm::Wolff,
                record_cluster_sizes: false,
            };
            run_chain(g, &params)
        })
        .collect()
}

/// Direct χ estimate from a short staging run.
fn staged_chi(g: &StabilizerGraph, cfg: &ExperimentConfig, t: f64, temp_index: u32) -> Result<f64> {
    let params = ChainParams {
        temperature: t,
        thermalization_steps: cfg.thermalization.min(5_000),
        sample_interval: 1,
        n_samples: 30_000,
        seed: derive_seed(cfg.base_seed, g.structure().index(), g.level(), temp_index, 0),
        algorithm: Algorithm::Wolff,
        record_cluster_sizes: false,
    };
    let series = run_chain(g, &params)?;
    Ok(observables::susceptibility(&series)?.value)
}

fn cells(cfg: &ExperimentConfig) -> Vec<(StructureId, u32)> {
    let mut out = Vec::new();
    for &s in &cfg.structures {
        for &k in &cfg.levels {
            out.push((s, k));
        }
    }
    out
}

fn stage_temp_from_store(
    records: &[Record],
    stage: &str,
    s: StructureId,
    k: u32,
) -> Option<f64> {
    records.iter().rev().find_map(|r| match r {
        Record::StageTemperature {
            structure,
            level,
            stage: st,
            t0,
        } if *structure == s && *level == k && st == stage => Some(*t0),
        _ => None,
    })
}

/// Executes the configured stage(s); see the crate README for the flow.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ResultsStore> {
    cfg.validate()?;
    let hash = cfg.config_hash();
    let store = ResultsStore::open(&cfg.output_dir, &hash)?;

    let run_coarse = matches!(cfg.stage, Stage::Coarse | Stage::All) && cfg.temperature.is_none();
    let run_fine = matches!(cfg.stage, Stage::Fine | Stage::All) && cfg.temperature.is_none();
    let run_production = matches!(cfg.stage, Stage::Production | Stage::All);
    let run_analyze = matches!(cfg.stage, Stage::Analyze | Stage::All);

    // Staging is only needed when no default exists for a cell.
    let needs_staging = |s: StructureId, k: u32| {
        cfg.temperature.is_none() && default_t_sim(s, k).is_none()
    };

    if run_coarse {
        for (s, k) in cells(cfg) {
            if !needs_staging(s, k) {
                continue;
            }
            let g = build_structure(s, k)?;
            let scan: Vec<(f64, f64)> = reweight::coarse_grid()
                .par_iter()
                .enumerate()
                .map(|(i, &t)| {
                    staged_chi(&g, cfg, t, TEMP_INDEX_STAGING + i as u32).map(|chi| (t, chi))
                })
                .collect::<Result<_>>()?;
            let t0 = reweight::stage_temperature(&scan)?;
            store.append(Record::StageTemperature {
                structure: s,
                level: k,
                stage: "coarse".into(),
                t0,
            })?;
        }
    }

    if run_fine {
        let records = store.load()?;
        for (s, k) in cells(cfg) {
            if !needs_staging(s, k) {
                continue;
            }
            let center = stage_temp_from_store(&records, "coarse", s, k)
                .ok_or_else(|| Error::StageDependency("coarse".into()))?;
            let g = build_structure(s, k)?;
            let scan: Vec<(f64, f64)> = reweight::fine_grid(center)
                .par_iter()
                .enumerate()
                .map(|(i, &t)| {
                    staged_chi(&g, cfg, t, TEMP_INDEX_STAGING + 100 + i as u32)
                        .map(|chi| (t, chi))
                })
                .collect::<Result<_>>()?;
            let t0 = reweight::stage_temperature(&scan)?;
            store.append(Record::StageTemperature {
                structure: s,
                level: k,
                stage: "fine".into(),
                t0,
            })?;
        }
    }

    if run_production {
        let records = store.load()?;
        for (s, k) in cells(cfg) {
            let g = build_structure(s, k)?;
            let (avg_degree, generators_per_site) = coordination_stats(&g);
            store.append(Record::GraphStats {
                structure: s,
                level: k,
                n_sites: g.n_sites(),
                n_edges: g.n_edges(),
                avg_degree,
                generators_per_site,
            })?;

            let t_sim = cfg
                .temperature
                .or_else(|| stage_temp_from_store(&records, "fine", s, k))
                .or_else(|| default_t_sim(s, k))
                .ok_or_else(|| Error::StageDependency("fine".into()))?;

            // production replicas at T_sim
            let series =
                run_replicas(&g, cfg, t_sim, TEMP_INDEX_PRODUCTION, cfg.n_samples,
                             cfg.sample_interval, cfg.replicas)?;
            for (r, sr) in series.iter().enumerate() {
                let path = series_path(&cfg.output_dir, "production", s, k, t_sim, r as u32);
                write_series_csv(&path, sr)?;
                store.append(Record::SeriesMeta {
                    structure: s,
                    level: k,
                    temperature: t_sim,
                    replica: r as u32,
                    seed: sr.params.seed,
                    n_samples: sr.params.n_samples,
                    thermalization: sr.params.thermalization_steps,
                    sample_interval: sr.params.sample_interval,
                    kind: "production".into(),
                    csv_path: path.to_string_lossy().into_owned(),
                })?;
            }

            // replica chains at the critical temperature for the power laws
            let t_c = cfg.temperature.unwrap_or_else(|| default_t_c(s));
            let crit = run_replicas(&g, cfg, t_c, TEMP_INDEX_CRITICAL, cfg.n_samples,
                                    cfg.sample_interval, cfg.replicas)?;
            for (r, sr) in crit.iter().enumerate() {
                let path = series_path(&cfg.output_dir, "critical", s, k, t_c, r as u32);
                write_series_csv(&path, sr)?;
                store.append(Record::SeriesMeta {
                    structure: s,
                    level: k,
                    temperature: t_c,
                    replica: r as u32,
                    seed: sr.params.seed,
                    n_samples: sr.params.n_samples,
                    thermalization: sr.params.thermalization_steps,
                    sample_interval: sr.params.sample_interval,
                    kind: "critical".into(),
                    csv_path: path.to_string_lossy().into_owned(),
                })?;
            }

            // five autocorrelation runs at T_c, one record per cluster flip
            let auto = run_replicas(&g, cfg, t_c, TEMP_INDEX_AUTOCORR, cfg.autocorr_steps, 1,
                                    cfg.replicas)?;
            for (r, sr) in auto.iter().enumerate() {
                let path = series_path(&cfg.output_dir, "autocorr", s, k, t_c, r as u32);
                write_series_csv(&path, sr)?;
                store.append(Record::SeriesMeta {
                    structure: s,
                    level: k,
                    temperature: t_c,
                    replica: r as u32,
                    seed: sr.params.seed,
                    n_samples: sr.params.n_samples,
                    thermalization: sr.params.thermalization_steps,
                    sample_interval: sr.params.sample_interval,
                    kind: "autocorr".into(),
                    csv_path: path.to_string_lossy().into_owned(),
                })?;
            }
        }
    }

    if run_analyze {
        analyze(cfg, &store)?;
    }
    Ok(store)
}

struct CellSeries {
    production: Vec<SampleSeries>,
    critical: Vec<SampleSeries>,
    autocorr: Vec<SampleSeries>,
}

/// Combine per-replica estimates into mean +- 2 sigma of the mean; with a
/// single replica the jackknife estimate passes through unchanged.
fn combine_replicas(estimates: &[observables::EstimateWithError]) -> observables::EstimateWithError {
    if estimates.len() == 1 {
        return estimates[0];
    }
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    observables::mean_with_error(&values)
}

/// Pure post-processing of stored series; never re-simulates.
pub fn analyze(cfg: &ExperimentConfig, store: &ResultsStore) -> Result<()> {
    let records = store.load()?;
    let mut by_cell: BTreeMap<(StructureId, u32), CellSeries> = BTreeMap::new();
    let mut seen_production = false;
    for r in &records {
        if let Record::SeriesMeta {
            structure,
            level,
            kind,
            csv_path,
            ..
        } = r
        {
            seen_production = true;
            let cell = by_cell.entry((*structure, *level)).or_insert(CellSeries {
                production: Vec::new(),
                critical: Vec::new(),
                autocorr: Vec::new(),
            });
            let series = read_series_csv(Path::new(csv_path))?;
            match kind.as_str() {
                "production" => cell.production.push(series),
                "critical" => cell.critical.push(series),
                "autocorr" => cell.autocorr.push(series),
                other => return Err(Error::Record(format!("unknown series kind `{other}`"))),
            }
        }
    }
    if !seen_production {
        return Err(Error::StageDependency("production".into()));
    }

    let fig_dir = cfg.output_dir.join("figures");
    std::fs::create_dir_all(&fig_dir)?;

    // peaks per cell via the replica protocol
    let mut peaks: BTreeMap<(StructureId, u32), (f64, f64)> = BTreeMap::new(); // (t_peak, 2σ)
    for ((s, k), cell) in &by_cell {
        if cell.production.is_empty() {
            continue;
        }
        let t_sim = cell.production[0].params.temperature;
        let window = reweight::reliable_window(&cell.production[0]);
        match (
            &window,
            reweight::find_chi_peak_replicas(&cell.production, reweight::DEFAULT_GRID_RESOLUTION),
        ) {
            (Ok((dt, _)), Ok(peak)) => {
                store.append(Record::Peak {
                    structure: *s,
                    level: *k,
                    t_sim,
                    window_half_width: 2.0 * dt,
                    t_peak: peak.t_peak,
                    chi_peak: peak.chi_peak,
                    two_sigma_t: peak.two_sigma_t,
                    low_confidence: false,
                })?;
                peaks.insert((*s, *k), (peak.t_peak, peak.two_sigma_t));
                // susceptibility curve for plotting, from the first replica
                if let Ok(hist) = reweight::energy_histogram(&cell.production[0]) {
                    let grid = reweight::window_grid(&hist, 1e-3);
                    if let Ok(curve) = reweight::reweight_curve(&cell.production[0], &grid) {
                        std::fs::write(
                            fig_dir.join(format!("chi_curve_s{}_k{k}.csv", s.index())),
                            curve.to_csv(),
                        )?;
                    }
                }
            }
            _ => {
                // not enough signal (smoke runs): keep the row, flag it
                store.append(Record::Peak {
                    structure: *s,
                    level: *k,
                    t_sim,
                    window_half_width: 0.0,
                    t_peak: t_sim,
                    chi_peak: 0.0,
                    two_sigma_t: 0.0,
                    low_confidence: true,
                })?;
            }
        }
    }

    // estimator rows (and oracle verdicts) for the critical-temperature runs
    let mut crit_rows: BTreeMap<(StructureId, u32), (f64, f64, f64, f64)> = BTreeMap::new();
    for ((s, k), cell) in &by_cell {
        if cell.critical.is_empty() {
            continue;
        }
        let series = &cell.critical[0];
        let low = series.len() < 100;
        let per_replica: Vec<_> = cell
            .critical
            .iter()
            .filter_map(|sr| {
                match (
                    observables::mean_energy(sr),
                    observables::magnetization_per_site(sr),
                    observables::specific_heat(sr),
                    observables::susceptibility(sr),
                ) {
                    (Ok(e), Ok(m), Ok(c), Ok(chi)) => Some([e, m, c, chi]),
                    _ => None,
                }
            })
            .collect();
        if per_replica.len() != cell.critical.len() {
            continue;
        }
        let pick = |i: usize| {
            combine_replicas(&per_replica.iter().map(|r| r[i]).collect::<Vec<_>>())
        };
        let (e, m, c, chi) = (pick(0), pick(1), pick(2), pick(3));
        store.append(Record::EstimatorRow {
            structure: *s,
            level: *k,
            temperature: series.params.temperature,
            mean_e: e.value,
            two_sigma_e: e.two_sigma,
            m: m.value,
            two_sigma_m: m.two_sigma,
            c: c.value,
            two_sigma_c: c.two_sigma,
            chi: chi.value,
            two_sigma_chi: chi.two_sigma,
            low_confidence: low,
        })?;
        crit_rows.insert((*s, *k), (m.value, m.two_sigma, chi.value, chi.two_sigma));

        if cfg.oracle_check && series.n_sites <= oracle::ENUMERATION_BUDGET {
            let g = build_structure(*s, *k)?;
            let ex = oracle::exact_thermo(&g, series.params.temperature)?;
            for (name, est, exact) in [
                ("mean_e", e, ex.mean_e),
                ("m", m, ex.m),
                ("c", c, ex.c),
                ("chi", chi, ex.chi),
            ] {
                store.append(Record::OracleCheck {
                    structure: *s,
                    level: *k,
                    temperature: series.params.temperature,
                    observable: name.into(),
                    mc_value: est.value,
                    mc_two_sigma: est.two_sigma,
                    exact_value: exact,
                    within_3_sigma: est.agrees_within_3_sigma(exact, 0.0),
                })?;
            }
        }
    }

    // finite-size scaling and power laws per structure
    for &s in &cfg.structures {
        let pts: Vec<(f64, f64, f64)> = cfg
            .levels
            .iter()
            .filter_map(|&k| {
                peaks
                    .get(&(s, k))
                    .map(|&(t, sig)| (3f64.powi(k as i32), t, sig))
            })
            .collect();
        let fss = if pts.len() >= 3 {
            match scaling::fit_fss(&pts) {
                Ok(fit) => {
                    store.append(Record::FssFitRecord {
                        structure: s,
                        t_c: fit.t_c,
                        chi0: fit.chi0,
                        nu_prime: fit.nu_prime,
                        two_sigma_t_c: fit.two_sigma[0],
                        two_sigma_chi0: fit.two_sigma[1],
                        two_sigma_nu_prime: fit.two_sigma[2],
                        at_bound: fit.at_bound,
                    })?;
                    let mut csv = String::from("N,t_peak,two_sigma,fit\n");
                    for &(n, t, sig) in &pts {
                        let fit_t = fit.t_c + fit.chi0 * n.powf(-1.0 / fit.nu_prime);
                        csv.push_str(&format!("{n},{t},{sig},{fit_t}\n"));
                    }
                    std::fs::write(fig_dir.join(format!("fss_s{}.csv", s.index())), csv)?;
                    Some(fit)
                }
                Err(_) => None,
            }
        } else {
            None
        };

        let m_pts: Vec<(f64, f64, f64)> = cfg
            .levels
            .iter()
            .filter_map(|&k| {
                crit_rows
                    .get(&(s, k))
                    .map(|&(m, sm, _, _)| (3f64.powi(k as i32), m, sm))
            })
            .collect();
        let chi_pts: Vec<(f64, f64, f64)> = cfg
            .levels
            .iter()
            .filter_map(|&k| {
                crit_rows
                    .get(&(s, k))
                    .map(|&(_, _, chi, schi)| (3f64.powi(k as i32), chi, schi))
            })
            .collect();
        let mut ratios: Option<((f64, f64), (f64, f64))> = None;
        if m_pts.len() >= 2 && chi_pts.len() >= 2 {
            if let (Ok(m_fit), Ok(chi_fit)) =
                (scaling::fit_power_law(&m_pts), scaling::fit_power_law(&chi_pts))
            {
                store.append(Record::PowerLawRecord {
                    structure: s,
                    observable: "m".into(),
                    exponent: m_fit.exponent,
                    two_sigma: m_fit.two_sigma_exponent,
                    amplitude: m_fit.amplitude,
                })?;
                store.append(Record::PowerLawRecord {
                    structure: s,
                    observable: "chi".into(),
                    exponent: chi_fit.exponent,
                    two_sigma: chi_fit.two_sigma_exponent,
                    amplitude: chi_fit.amplitude,
                })?;
                for (name, pts, fit) in
                    [("m", &m_pts, &m_fit), ("chi", &chi_pts, &chi_fit)]
                {
                    let mut csv = String::from("N,value,two_sigma,fit\n");
                    for &(n, y, sig) in pts.iter() {
                        csv.push_str(&format!(
                            "{n},{y},{sig},{}\n",
                            fit.amplitude * n.powf(fit.exponent)
                        ));
                    }
                    std::fs::write(
                        fig_dir.join(format!("powerlaw_{name}_s{}.csv", s.index())),
                        csv,
                    )?;
                }
                ratios = Some((
                    (-m_fit.exponent, m_fit.two_sigma_exponent),
                    (chi_fit.exponent, chi_fit.two_sigma_exponent),
                ));
            }
        }

        if let (Some(fit), Some((beta_ratio, gamma_ratio))) = (&fss, &ratios) {
            let set = scaling::derive_exponents(fit, *beta_ratio, *gamma_ratio);
            store.append(Record::Exponents {
                structure: s,
                set,
                sign_convention: "check = gamma/nu' + 2 beta/nu' (plus sign)".into(),
            })?;
        }

        // autocorrelation times and the dynamical exponent
        let mut tau_pts: Vec<(f64, f64, f64)> = Vec::new();
        for &k in &cfg.levels {
            let Some(cell) = by_cell.get(&(s, k)) else { continue };
            if cell.autocorr.is_empty() {
                continue;
            }
            let reps: Vec<Vec<f64>> = cell
                .autocorr
                .iter()
                .map(|sr| sr.abs_magnetizations.iter().map(|&m| f64::from(m)).collect())
                .collect();
            let max_lag = (reps[0].len() / 10).clamp(1, 50);
            match autocorr::tau_from_replicas(&reps, max_lag) {
                Ok(res) => {
                    store.append(Record::AutocorrTau {
                        structure: s,
                        level: k,
                        temperature: cell.autocorr[0].params.temperature,
                        tau_steps: res.tau_steps,
                        two_sigma: res.two_sigma,
                        low_confidence: res.low_confidence,
                    })?;
                    tau_pts.push((3f64.powi(k as i32), res.tau_steps, res.two_sigma));
                }
                Err(_) => continue,
            }
        }
        if tau_pts.len() >= 2 {
            if let Ok(z0_fit) = autocorr::fit_z0(&tau_pts) {
                let gamma_ratio = ratios.map(|(_, g)| g).unwrap_or((1.0, 0.0));
                let dyn_exp = scaling::derive_wolff_z(
                    (z0_fit.exponent, z0_fit.two_sigma_exponent),
                    gamma_ratio,
                );
                store.append(Record::WolffZ {
                    structure: s,
                    z0_over_d: dyn_exp.z0_over_d,
                    two_sigma_z0: dyn_exp.two_sigma_z0,
                    z_over_d: dyn_exp.z_over_d,
                    two_sigma_z: dyn_exp.two_sigma_z,
                })?;
                let mut csv = String::from("N,tau,two_sigma,fit\n");
                for &(n, tau, sig) in &tau_pts {
                    csv.push_str(&format!(
                        "{n},{tau},{sig},{}\n",
                        z0_fit.amplitude * n.powf(z0_fit.exponent)
                    ));
                }
                std::fs::write(fig_dir.join(format!("tau_s{}.csv", s.index())), csv)?;
            }
        }
    }
    Ok(())
}
