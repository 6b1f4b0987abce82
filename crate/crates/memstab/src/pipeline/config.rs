//! Experiment configuration and the production-protocol defaults.

use crate::error::{Error, Result};
use crate::pipeline::seeds::splitmix64;
use crate::structures::StructureId;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "MEMSTAB_OUT";

/// Default simulation temperatures per (structure, k = 4..7): the published
/// T_sim values, so a production run reproduces the susceptibility table
/// without re-running the staging scans. Overridable per cell.
pub fn default_t_sim(structure: StructureId, level: u32) -> Option<f64> {
    if !(4..=7).contains(&level) {
        return None;
    }
    let idx = (level - 4) as usize;
    let row: [f64; 4] = match structure {
        StructureId::S1 => [0.735, 0.685, 0.645, 0.620],
        StructureId::S2 => [0.785, 0.725, 0.675, 0.640],
        StructureId::S3 => [1.240, 1.155, 1.105, 1.075],
    };
    Some(row[idx])
}

/// Default critical temperatures (finite-size-scaling results) used for the
/// power-law and autocorrelation runs unless a fitted value is supplied.
pub fn default_t_c(structure: StructureId) -> f64 {
    match structure {
        StructureId::S1 => 0.455,
        StructureId::S2 => 0.552,
        StructureId::S3 => 0.890,
    }
}

/// Pipeline stage selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Coarse,
    Fine,
    Production,
    Analyze,
    All,
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Stage::Coarse),
            "fine" => Ok(Stage::Fine),
            "production" => Ok(Stage::Production),
            "analyze" => Ok(Stage::Analyze),
            "all" => Ok(Stage::All),
            other => Err(Error::InvalidArgument(format!("unknown stage `{other}`"))),
        }
    }
}

/// Full experiment description; defaults mirror the production protocol
/// (5 replicas, 1e6 samples, 5e3 thermalization steps, every-other step).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub structures: Vec<StructureId>,
    pub levels: Vec<u32>,
    pub replicas: u32,
    pub n_samples: usize,
    pub thermalization: usize,
    pub sample_interval: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub stage: Stage,
    /// Override simulation temperature for every cell (staging skipped).
    pub temperature: Option<f64>,
    /// Steps per autocorrelation run (5 runs per cell).
    pub autocorr_steps: usize,
    /// Also run the exact-enumeration cross-check on cells with N <= budget.
    pub oracle_check: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            structures: StructureId::ALL.to_vec(),
            levels: vec![4, 5, 6, 7],
            replicas: 5,
            n_samples: 1_000_000,
            thermalization: 5_000,
            sample_interval: 2,
            base_seed: 42,
            output_dir: default_output_dir(),
            stage: Stage::All,
            temperature: None,
            autocorr_steps: 500_000,
            oracle_check: false,
        }
    }
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("memstab-out"))
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("bad config {path:?}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(Error::InvalidArgument("replicas must be >= 1".into()));
        }
        if self.structures.is_empty() || self.levels.is_empty() {
            return Err(Error::InvalidArgument("empty structure or level list".into()));
        }
        if self.n_samples < 1 || self.sample_interval < 1 {
            return Err(Error::InvalidArgument(
                "need n_samples >= 1 and sample_interval >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Stable hash over the simulation-relevant fields; stamped on every
    /// results record so mixed-config stores are rejected at analysis time.
    pub fn config_hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new(); // where results land doesn't change them
        canon.stage = Stage::All;
        let json = serde_json::to_string(&canon).expect("config serializes");
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in json.as_bytes() {
            h = splitmix64(h ^ u64::from(*b));
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_protocol() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.replicas, 5);
        assert_eq!(cfg.n_samples, 1_000_000);
        assert_eq!(cfg.thermalization, 5_000);
        assert_eq!(cfg.sample_interval, 2);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn hash_ignores_output_dir_and_stage() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("/elsewhere");
        b.stage = Stage::Analyze;
        assert_eq!(a.config_hash(), b.config_hash());
        let mut c = a.clone();
        c.base_seed += 1;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn toml_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(
            &path,
            "structures = [\"S3\"]\nlevels = [4]\nreplicas = 2\nn_samples = 100\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_toml_file(&path).unwrap();
        assert_eq!(cfg.structures, vec![StructureId::S3]);
        assert_eq!(cfg.levels, vec![4]);
        assert_eq!(cfg.replicas, 2);
        assert_eq!(cfg.thermalization, 5_000); // default preserved
    }

    #[test]
    fn t_sim_defaults() {
        assert_eq!(default_t_sim(StructureId::S3, 4), Some(1.240));
        assert_eq!(default_t_sim(StructureId::S1, 7), Some(0.620));
        assert_eq!(default_t_sim(StructureId::S1, 3), None);
    }
}
