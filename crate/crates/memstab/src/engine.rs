//! Wolff cluster and Metropolis dynamics for the ferromagnetic Ising model
//! on a stabilizer graph, H = -J Σ_<ij> s_i s_j with J = 1.
//!
//! A chain is single-threaded and owns its spin configuration; the shared
//! graph is read-only. Everything is deterministic given the chain seed.

use crate::error::{Error, Result};
use crate::structures::{StabilizerGraph, StructureId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Simulation update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    Wolff,
    Metropolis,
}

/// ±1 spin vector with incrementally maintained energy and magnetization sum.
///
/// With J = 1 both caches are integer-valued, so incremental updates stay
/// exactly consistent with a from-scratch recomputation.
#[derive(Debug, Clone)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
    energy: f64,
    magnetization_sum: i64,
}

impl SpinConfiguration {
    /// Uniformly random (hot) start.
    pub fn random<R: Rng>(g: &StabilizerGraph, rng: &mut R) -> Self {
        let spins: Vec<i8> = (0..g.n_sites())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self::from_spins(g, spins)
    }

    /// All spins up (ground state).
    pub fn all_up(g: &StabilizerGraph) -> Self {
        Self::from_spins(g, vec![1; g.n_sites()])
    }

    pub fn from_spins(g: &StabilizerGraph, spins: Vec<i8>) -> Self {
        assert_eq!(spins.len(), g.n_sites());
        let mut cfg = SpinConfiguration {
            spins,
            energy: 0.0,
            magnetization_sum: 0,
        };
        cfg.energy = cfg.recompute_energy(g);
        cfg.magnetization_sum = cfg.recompute_magnetization_sum();
        cfg
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn magnetization_sum(&self) -> i64 {
        self.magnetization_sum
    }

    pub fn abs_magnetization(&self) -> u32 {
        self.magnetization_sum.unsigned_abs() as u32
    }

    /// From-scratch energy sum, used to validate the cache.
    pub fn recompute_energy(&self, g: &StabilizerGraph) -> f64 {
        let mut e = 0i64;
        for &(i, j) in g.edges() {
            e -= i64::from(self.spins[i as usize] * self.spins[j as usize]);
        }
        e as f64
    }

    pub fn recompute_magnetization_sum(&self) -> i64 {
        self.spins.iter().map(|&s| i64::from(s)).sum()
    }

    /// Compact state index (site i -> bit i, up = 1); only valid for N <= 32.
    pub fn state_index(&self) -> u32 {
        self.spins
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &s)| acc | (u32::from(s > 0) << i))
    }
}

/// Total Ising energy of `s` on `g` (J = 1).
pub fn total_energy(g: &StabilizerGraph, s: &SpinConfiguration) -> Result<f64> {
    if s.spins.len() != g.n_sites() {
        return Err(Error::InvalidArgument(format!(
            "spin vector length {} != {} sites",
            s.spins.len(),
            g.n_sites()
        )));
    }
    Ok(s.recompute_energy(g))
}

/// Parameters of one Monte Carlo chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Temperature in units of J/k_B.
    pub temperature: f64,
    pub thermalization_steps: usize,
    /// Monte Carlo steps between recorded samples.
    pub sample_interval: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Record the Wolff cluster size at each sampled step.
    pub record_cluster_sizes: bool,
}

impl ChainParams {
    /// Production protocol: thermalization 5e3, every-other step, 1e6 samples.
    pub fn production(temperature: f64, seed: u64) -> Self {
        ChainParams {
            temperature,
            thermalization_steps: 5_000,
            sample_interval: 2,
            n_samples: 1_000_000,
            seed,
            algorithm: Algorithm::Wolff,
            record_cluster_sizes: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidArgument("temperature must be > 0".into()));
        }
        if self.n_samples < 1 || self.sample_interval < 1 {
            return Err(Error::InvalidArgument(
                "need n_samples >= 1 and sample_interval >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Ordered (energy, |M|) records from one chain at one temperature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSeries {
    pub params: ChainParams,
    pub structure: StructureId,
    pub level: u32,
    pub n_sites: usize,
    pub energies: Vec<f64>,
    pub abs_magnetizations: Vec<u32>,
    pub cluster_sizes: Option<Vec<u32>>,
}

impl SampleSeries {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.energies
            .iter()
            .copied()
            .zip(self.abs_magnetizations.iter().copied())
    }
}

/// Scratch buffers for cluster growth, reused across steps.
struct WolffScratch {
    in_cluster: Vec<bool>,
    stack: Vec<u32>,
    cluster: Vec<u32>,
}

impl WolffScratch {
    fn new(n: usize) -> Self {
        WolffScratch {
            in_cluster: vec![false; n],
            stack: Vec::with_capacity(n),
            cluster: Vec::with_capacity(n),
        }
    }
}

fn wolff_step_inner<R: Rng>(
    g: &StabilizerGraph,
    s: &mut SpinConfiguration,
    p_add: f64,
    rng: &mut R,
    scratch: &mut WolffScratch,
) -> usize {
    let seed = rng.random_range(0..g.n_sites() as u32);
    let cluster_spin = s.spins[seed as usize];

    scratch.stack.clear();
    scratch.cluster.clear();
    scratch.stack.push(seed);
    scratch.in_cluster[seed as usize] = true;

    // Explicit work-list; clusters can span the whole graph near T_c.
    while let Some(i) = scratch.stack.pop() {
        scratch.cluster.push(i);
        for &j in g.neighbors(i as usize) {
            if !scratch.in_cluster[j as usize]
                && s.spins[j as usize] == cluster_spin
                && rng.random::<f64>() < p_add
            {
                scratch.in_cluster[j as usize] = true;
                scratch.stack.push(j);
            }
        }
    }

    // ΔE = 2 σ Σ_{i∈C, j∉C} s_j over boundary bonds (each counted once from
    // the cluster side); ΔM = -2 σ |C|.
    let mut boundary_sum = 0i64;
    for &i in &scratch.cluster {
        for &j in g.neighbors(i as usize) {
            if !scratch.in_cluster[j as usize] {
                boundary_sum += i64::from(s.spins[j as usize]);
            }
        }
    }
    let sigma = i64::from(cluster_spin);
    s.energy += (2 * sigma * boundary_sum) as f64;
    s.magnetization_sum -= 2 * sigma * scratch.cluster.len() as i64;
    for &i in &scratch.cluster {
        s.spins[i as usize] = -cluster_spin;
        scratch.in_cluster[i as usize] = false;
    }
    scratch.cluster.len()
}

/// One Wolff update: grow a same-spin cluster with bond probability
/// p = 1 - exp(-2J/T) and flip it. Returns the cluster size.
pub fn wolff_step<R: Rng>(
    g: &StabilizerGraph,
    s: &mut SpinConfiguration,
    t: f64,
    rng: &mut R,
) -> usize {
    let p_add = 1.0 - (-2.0 / t).exp();
    let mut scratch = WolffScratch::new(g.n_sites());
    wolff_step_inner(g, s, p_add, rng, &mut scratch)
}

/// One Metropolis sweep: N random single-site proposals, each accepted with
/// min(1, exp(-ΔE/T)). Returns the number of accepted flips.
pub fn metropolis_sweep<R: Rng>(
    g: &StabilizerGraph,
    s: &mut SpinConfiguration,
    t: f64,
    rng: &mut R,
) -> usize {
    let n = g.n_sites();
    let mut accepted = 0;
    for _ in 0..n {
        let i = rng.random_range(0..n);
        let si = s.spins[i];
        let mut field = 0i32;
        for &j in g.neighbors(i) {
            field += i32::from(s.spins[j as usize]);
        }
        let delta_e = 2 * i32::from(si) * field;
        if delta_e <= 0 || rng.random::<f64>() < (-f64::from(delta_e) / t).exp() {
            s.spins[i] = -si;
            s.energy += f64::from(delta_e);
            s.magnetization_sum -= 2 * i64::from(si);
            accepted += 1;
        }
    }
    accepted
}

/// Runs one chain: hot start from the seed, thermalization, then one
/// (E, |M|) record every `sample_interval` steps until `n_samples` collected.
pub fn run_chain(g: &StabilizerGraph, params: &ChainParams) -> Result<SampleSeries> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut s = SpinConfiguration::random(g, &mut rng);
    let t = params.temperature;
    let p_add = 1.0 - (-2.0 / t).exp();
    let mut scratch = WolffScratch::new(g.n_sites());

    let mut step = |s: &mut SpinConfiguration, rng: &mut ChaCha8Rng| -> usize {
        match params.algorithm {
            Algorithm::Wolff => wolff_step_inner(g, s, p_add, rng, &mut scratch),
            Algorithm::Metropolis => metropolis_sweep(g, s, t, rng),
        }
    };

    for _ in 0..params.thermalization_steps {
        step(&mut s, &mut rng);
    }

    let mut energies = Vec::with_capacity(params.n_samples);
    let mut abs_ms = Vec::with_capacity(params.n_samples);
    let record_clusters = params.record_cluster_sizes && params.algorithm == Algorithm::Wolff;
    let mut clusters = if record_clusters {
        Some(Vec::with_capacity(params.n_samples))
    } else {
        None
    };

    for _ in 0..params.n_samples {
        let mut last = 0;
        for _ in 0..params.sample_interval {
            last = step(&mut s, &mut rng);
        }
        energies.push(s.energy());
        abs_ms.push(s.abs_magnetization());
        if let Some(c) = clusters.as_mut() {
            c.push(last as u32);
        }
    }

    Ok(SampleSeries {
        params: params.clone(),
        structure: g.structure(),
        level: g.level(),
        n_sites: g.n_sites(),
        energies,
        abs_magnetizations: abs_ms,
        cluster_sizes: clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::structures::build_structure;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn total_energy_examples() {
        let g = build_structure(StructureId::S1, 2).unwrap();
        let s = SpinConfiguration::all_up(&g);
        assert_eq!(total_energy(&g, &s).unwrap(), -8.0);

        let mut spins = vec![1i8; 9];
        spins[0] = -1; // degree-1 site: one bond flips sign
        let s = SpinConfiguration::from_spins(&g, spins);
        assert_eq!(total_energy(&g, &s).unwrap(), -6.0);

        let g3 = build_structure(StructureId::S3, 1).unwrap();
        let s3 = SpinConfiguration::all_up(&g3);
        assert!(total_energy(&g, &s3).is_err()); // length mismatch
    }

    #[test]
    fn total_energy_matches_bitmask_oracle_on_random_states() {
        let g = build_structure(StructureId::S3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let s = SpinConfiguration::random(&g, &mut rng);
            // independent edge-sum route over a bit representation
            let bits: Vec<bool> = s.spins().iter().map(|&x| x > 0).collect();
            let mut e = 0i64;
            for &(i, j) in g.edges() {
                e += if bits[i as usize] == bits[j as usize] { -1 } else { 1 };
            }
            assert_eq!(s.energy(), e as f64);
            assert_eq!(s.energy(), s.recompute_energy(&g));
        }
    }

    #[test]
    fn wolff_limits() {
        let g = build_structure(StructureId::S3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // T -> 0+: p_add -> 1, whole graph flips from a uniform state
        let mut s = SpinConfiguration::all_up(&g);
        assert_eq!(wolff_step(&g, &mut s, 1e-9, &mut rng), g.n_sites());
        assert_eq!(s.energy(), s.recompute_energy(&g));
        // T -> inf: p_add -> 0, singleton clusters
        let mut singles = 0;
        for _ in 0..200 {
            if wolff_step(&g, &mut s, 1e12, &mut rng) == 1 {
                singles += 1;
            }
        }
        assert!(singles >= 199);
    }

    #[test]
    fn metropolis_limits() {
        let g = build_structure(StructureId::S1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = SpinConfiguration::all_up(&g);
        assert_eq!(metropolis_sweep(&g, &mut s, 1e-9, &mut rng), 0);
        let mut accepted = 0;
        let mut total = 0;
        for _ in 0..100 {
            accepted += metropolis_sweep(&g, &mut s, 1e12, &mut rng);
            total += g.n_sites();
        }
        assert!(accepted as f64 / total as f64 > 0.99);
    }

    #[test]
    fn cache_coherence_under_mixed_updates() {
        let g = build_structure(StructureId::S3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = SpinConfiguration::random(&g, &mut rng);
        for i in 0..10_000 {
            if i % 2 == 0 {
                wolff_step(&g, &mut s, 1.1, &mut rng);
            } else {
                metropolis_sweep(&g, &mut s, 1.1, &mut rng);
            }
        }
        assert_eq!(s.energy(), s.recompute_energy(&g));
        assert_eq!(s.magnetization_sum(), s.recompute_magnetization_sum());
    }

    #[test]
    fn run_chain_bookkeeping_and_determinism() {
        let g = build_structure(StructureId::S1, 2).unwrap();
        let p = ChainParams {
            temperature: 1.0,
            thermalization_steps: 5_000,
            sample_interval: 2,
            n_samples: 10,
            seed: 42,
            algorithm: Algorithm::Wolff,
            record_cluster_sizes: true,
        };
        let a = run_chain(&g, &p).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a.cluster_sizes.as_ref().unwrap().len(), 10);
        assert!(a.abs_magnetizations.iter().all(|&m| m as usize <= 9));
        assert!(a.energies.iter().all(|&e| e.abs() <= 8.0));
        let b = run_chain(&g, &p).unwrap();
        assert_eq!(a.energies, b.energies);
        assert_eq!(a.abs_magnetizations, b.abs_magnetizations);
    }

    #[test]
    fn signed_magnetization_averages_to_zero_at_high_t() {
        let g = build_structure(StructureId::S1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = SpinConfiguration::random(&g, &mut rng);
        let mut sum = 0i64;
        let n_steps = 200_000;
        for _ in 0..n_steps {
            wolff_step(&g, &mut s, 5.0, &mut rng);
            sum += s.magnetization_sum();
        }
        let mean = sum as f64 / n_steps as f64;
        assert!(mean.abs() < 0.05, "signed <M> = {mean}");
    }

    /// Chi-squared test of the sampled state distribution against exact
    /// Boltzmann weights (states with small expectation merged into a tail).
    fn boltzmann_chi2(id: StructureId, k: u32, t: f64, seed: u64) {
        let g = build_structure(id, k).unwrap();
        let n = g.n_sites();
        let exact = oracle::state_probabilities(&g, t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = SpinConfiguration::random(&g, &mut rng);
        for _ in 0..1000 {
            wolff_step(&g, &mut s, t, &mut rng);
        }
        let n_steps = 1_000_000usize;
        let mut counts = vec![0u64; 1 << n];
        for _ in 0..n_steps {
            wolff_step(&g, &mut s, t, &mut rng);
            counts[s.state_index() as usize] += 1;
        }
        let mut chi2 = 0.0;
        let mut dof: i64 = -1;
        let mut tail_obs = 0.0;
        let mut tail_exp = 0.0;
        for (state, &p) in exact.iter().enumerate() {
            let e = p * n_steps as f64;
            let o = counts[state] as f64;
            if e < 5.0 {
                tail_obs += o;
                tail_exp += e;
            } else {
                chi2 += (o - e).powi(2) / e;
                dof += 1;
            }
        }
        if tail_exp > 0.0 {
            chi2 += (tail_obs - tail_exp).powi(2) / tail_exp;
            dof += 1;
        }
        assert!(dof >= 1, "too few occupied states");
        let dist = ChiSquared::new(dof as f64).unwrap();
        let p_value = 1.0 - dist.cdf(chi2);
        assert!(
            p_value > 0.001,
            "{id:?} k={k} T={t}: chi2={chi2:.1} dof={dof} p={p_value:.5}"
        );
    }

    #[test]
    fn wolff_samples_boltzmann_small_instances() {
        boltzmann_chi2(StructureId::S1, 1, 1.0, 101);
        boltzmann_chi2(StructureId::S3, 1, 1.0, 102);
        boltzmann_chi2(StructureId::S1, 2, 1.24, 103);
        boltzmann_chi2(StructureId::S3, 2, 1.24, 104);
    }
}
