//! Single-histogram reweighting: one chain at T0 yields chi(T), c(T), m(T)
//! over the reliable window, and the susceptibility-peak location.

use memstab::engine::{run_chain, Algorithm, ChainParams};
use memstab::reweight;
use memstab::structures::{build_structure, StructureId};

fn main() -> memstab::Result<()> {
    let g = build_structure(StructureId::S2, 3)?;
    let t0 = 0.85;
    let series = run_chain(
        &g,
        &ChainParams {
            temperature: t0,
            thermalization_steps: 5_000,
            sample_interval: 2,
            n_samples: 300_000,
            seed: 3,
            algorithm: Algorithm::Wolff,
            record_cluster_sizes: false,
        },
    )?;

    let (dt, (lo, hi)) = reweight::reliable_window(&series)?;
    println!("T0 = {t0}, reliable window [{lo:.4}, {hi:.4}] (dT = {dt:.4})");

    let hist = reweight::energy_histogram(&series)?;
    let grid = reweight::window_grid(&hist, 0.005);
    let curve = reweight::reweight_curve(&series, &grid)?;
    println!("\n{}", curve.to_csv());

    let peak = reweight::find_chi_peak(&series, reweight::DEFAULT_GRID_RESOLUTION)?;
    println!("chi peak: T = {:.4}, chi = {:.3}", peak.t_peak, peak.chi_peak);
    Ok(())
}
