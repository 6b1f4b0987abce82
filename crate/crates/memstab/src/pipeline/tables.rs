//! Renders the stored analysis records as fixed-width text tables plus CSV
//! twins, using the compact `value(uncertainty-in-last-digits)` notation,
//! e.g. `0.552(16)` for 0.552 ± 0.016.

use crate::error::Result;
use crate::pipeline::store::Record;
use crate::structures::StructureId;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// `0.552(16)` formatting with a fixed number of decimals; uncertainties of
/// one or more whole units print in full, e.g. `5.747(2.610)`.
pub fn format_with_error(value: f64, two_sigma: f64, decimals: usize) -> String {
    if !value.is_finite() {
        return "-".into();
    }
    if !(two_sigma > 0.0) || !two_sigma.is_finite() {
        return format!("{value:.decimals$}");
    }
    let scale = 10f64.powi(decimals as i32);
    let digits = (two_sigma * scale).round() as u64;
    if digits == 0 {
        format!("{value:.decimals$}(0)")
    } else if digits >= scale as u64 {
        format!("{value:.decimals$}({two_sigma:.decimals$})")
    } else {
        format!("{value:.decimals$}({digits})")
    }
}

fn pad(s: &str, w: usize) -> String {
    format!("{s:>w$}")
}

struct TableBuilder {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TableBuilder {
    fn new(name: &str, header: &[&str]) -> Self {
        TableBuilder {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn render_text(&self) -> String {
        let ncols = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate().take(ncols) {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let mut out = format!("# {}\n", self.name);
        let fmt_row = |cells: &[String]| -> String {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| pad(c, widths[i]))
                .collect::<Vec<_>>()
                .join("  ")
        };
        out.push_str(&fmt_row(&self.header));
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (ncols - 1)));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    fn write(&self, dir: &Path, stem: &str, files: &mut Vec<PathBuf>) -> Result<()> {
        let txt = dir.join(format!("{stem}.txt"));
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&txt, self.render_text())?;
        std::fs::write(&csv, self.render_csv())?;
        files.push(txt);
        files.push(csv);
        Ok(())
    }
}

fn sname(s: StructureId) -> String {
    format!("S{}", s.index())
}

/// Writes all summary tables derivable from `records` into `dir`.
/// An empty record set still produces every file, with headers only.
pub fn emit_tables(records: &[Record], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    // structure geometry
    let mut t_geom = TableBuilder::new(
        "structure geometry",
        &["structure", "k", "N", "edges", "avg_degree", "generators_per_site"],
    );
    for r in records {
        if let Record::GraphStats {
            structure,
            level,
            n_sites,
            n_edges,
            avg_degree,
            generators_per_site,
        } = r
        {
            t_geom.row(vec![
                sname(*structure),
                level.to_string(),
                n_sites.to_string(),
                n_edges.to_string(),
                format!("{avg_degree:.4}"),
                format!("{generators_per_site:.4}"),
            ]);
        }
    }
    t_geom.write(dir, "structure_geometry", &mut files)?;

    // susceptibility peaks
    let mut t_peaks = TableBuilder::new(
        "susceptibility peaks",
        &["structure", "k", "T_sim", "window_2dT", "T_peak", "chi_peak", "flag"],
    );
    for r in records {
        if let Record::Peak {
            structure,
            level,
            t_sim,
            window_half_width,
            t_peak,
            chi_peak,
            two_sigma_t,
            low_confidence,
        } = r
        {
            t_peaks.row(vec![
                sname(*structure),
                level.to_string(),
                format!("{t_sim:.3}"),
                format!("{window_half_width:.4}"),
                format_with_error(*t_peak, *two_sigma_t, 3),
                format!("{chi_peak:.2}"),
                if *low_confidence { "low-confidence".into() } else { "ok".into() },
            ]);
        }
    }
    t_peaks.write(dir, "susceptibility_peaks", &mut files)?;

    // estimators at the critical temperature
    let mut t_est = TableBuilder::new(
        "estimators at T_c",
        &["structure", "k", "T", "mean_E", "m", "c", "chi", "flag"],
    );
    for r in records {
        if let Record::EstimatorRow {
            structure,
            level,
            temperature,
            mean_e,
            two_sigma_e,
            m,
            two_sigma_m,
            c,
            two_sigma_c,
            chi,
            two_sigma_chi,
            low_confidence,
        } = r
        {
            t_est.row(vec![
                sname(*structure),
                level.to_string(),
                format!("{temperature:.3}"),
                format_with_error(*mean_e, *two_sigma_e, 4),
                format_with_error(*m, *two_sigma_m, 4),
                format_with_error(*c, *two_sigma_c, 4),
                format_with_error(*chi, *two_sigma_chi, 2),
                if *low_confidence { "low-confidence".into() } else { "ok".into() },
            ]);
        }
    }
    t_est.write(dir, "critical_estimators", &mut files)?;

    // finite-size scaling fits
    let mut t_fss = TableBuilder::new(
        "finite-size scaling: T_peak(N) = T_c + chi0 N^(-1/nu')",
        &["structure", "T_c", "chi0", "nu_prime", "flag"],
    );
    for r in records {
        if let Record::FssFitRecord {
            structure,
            t_c,
            chi0,
            nu_prime,
            two_sigma_t_c,
            two_sigma_chi0,
            two_sigma_nu_prime,
            at_bound,
        } = r
        {
            t_fss.row(vec![
                sname(*structure),
                format_with_error(*t_c, *two_sigma_t_c, 3),
                format_with_error(*chi0, *two_sigma_chi0, 3),
                format_with_error(*nu_prime, *two_sigma_nu_prime, 3),
                if *at_bound { "at-bound".into() } else { "ok".into() },
            ]);
        }
    }
    t_fss.write(dir, "fss_fits", &mut files)?;

    // critical power-law ratios: group (m, chi) rows per structure
    let mut ratios: BTreeMap<StructureId, (Option<(f64, f64)>, Option<(f64, f64)>)> =
        BTreeMap::new();
    for r in records {
        if let Record::PowerLawRecord {
            structure,
            observable,
            exponent,
            two_sigma,
            ..
        } = r
        {
            let entry = ratios.entry(*structure).or_default();
            match observable.as_str() {
                // m ~ N^(-beta/nu'), chi ~ N^(gamma/nu')
                "m" => entry.0 = Some((-exponent, *two_sigma)),
                "chi" => entry.1 = Some((*exponent, *two_sigma)),
                _ => {}
            }
        }
    }
    let mut t_ratio = TableBuilder::new(
        "critical exponent ratios",
        &["structure", "beta_over_nu", "gamma_over_nu"],
    );
    for (s, (b, g)) in &ratios {
        t_ratio.row(vec![
            sname(*s),
            b.map(|(v, e)| format_with_error(v, e, 3)).unwrap_or("-".into()),
            g.map(|(v, e)| format_with_error(v, e, 3)).unwrap_or("-".into()),
        ]);
    }
    t_ratio.write(dir, "exponent_ratios", &mut files)?;

    // autocorrelation times and dynamical exponents
    let mut t_tau = TableBuilder::new(
        "Wolff autocorrelation times (cluster flips)",
        &["structure", "k", "T", "tau", "flag"],
    );
    for r in records {
        if let Record::AutocorrTau {
            structure,
            level,
            temperature,
            tau_steps,
            two_sigma,
            low_confidence,
        } = r
        {
            t_tau.row(vec![
                sname(*structure),
                level.to_string(),
                format!("{temperature:.3}"),
                format_with_error(*tau_steps, *two_sigma, 3),
                if *low_confidence { "lag-1".into() } else { "ok".into() },
            ]);
        }
    }
    t_tau.write(dir, "autocorrelation_times", &mut files)?;

    let mut t_z = TableBuilder::new(
        "Wolff dynamical exponents",
        &["structure", "z0_over_d", "z_over_d"],
    );
    for r in records {
        if let Record::WolffZ {
            structure,
            z0_over_d,
            two_sigma_z0,
            z_over_d,
            two_sigma_z,
        } = r
        {
            t_z.row(vec![
                sname(*structure),
                format_with_error(*z0_over_d, *two_sigma_z0, 3),
                format_with_error(*z_over_d, *two_sigma_z, 3),
            ]);
        }
    }
    t_z.write(dir, "dynamical_exponents", &mut files)?;

    // derived exponents
    let mut t_exp = TableBuilder::new(
        "derived critical exponents (check = gamma/nu' + 2 beta/nu')",
        &["structure", "alpha", "beta", "gamma", "check"],
    );
    for r in records {
        if let Record::Exponents { structure, set, .. } = r {
            t_exp.row(vec![
                sname(*structure),
                format_with_error(set.alpha, set.two_sigma_alpha, 3),
                format_with_error(set.beta, set.two_sigma_beta, 3),
                format_with_error(set.gamma, set.two_sigma_gamma, 3),
                format_with_error(set.josephson_check, set.two_sigma_josephson, 3),
            ]);
        }
    }
    t_exp.write(dir, "critical_exponents", &mut files)?;

    // oracle cross-checks, when present
    let mut t_oracle = TableBuilder::new(
        "exact-enumeration cross-checks",
        &["structure", "k", "T", "observable", "mc", "exact", "within_3_sigma"],
    );
    for r in records {
        if let Record::OracleCheck {
            structure,
            level,
            temperature,
            observable,
            mc_value,
            mc_two_sigma,
            exact_value,
            within_3_sigma,
        } = r
        {
            t_oracle.row(vec![
                sname(*structure),
                level.to_string(),
                format!("{temperature:.3}"),
                observable.clone(),
                format_with_error(*mc_value, *mc_two_sigma, 5),
                format!("{exact_value:.5}"),
                within_3_sigma.to_string(),
            ]);
        }
    }
    t_oracle.write(dir, "oracle_checks", &mut files)?;

    Ok(files)
}
