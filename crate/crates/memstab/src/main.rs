//! Thin command-line front end; all logic lives in the library.

use clap::{Args, Parser, Subcommand};
use memstab::engine::{run_chain, Algorithm, ChainParams};
use memstab::pipeline::{self, ExperimentConfig, Stage};
use memstab::structures::{build_structure, StructureId};
use memstab::{observables, oracle, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "memstab", version, about = "Ising Monte Carlo on stabilizer structures")]
struct Cli {
    /// rayon thread count (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML experiment config; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,

    /// restrict to one structure (1|2|3 or S1|S2|S3)
    #[arg(long)]
    structure: Option<StructureId>,

    /// restrict to one concatenation level k (N = 3^k)
    #[arg(long)]
    level: Option<u32>,

    /// fixed simulation temperature (skips the staging scans)
    #[arg(long)]
    temp: Option<f64>,

    /// samples per chain
    #[arg(long)]
    samples: Option<usize>,

    /// independent replicas per cell
    #[arg(long)]
    replicas: Option<u32>,

    /// base RNG seed
    #[arg(long)]
    seed: Option<u64>,

    /// output directory (default: $MEMSTAB_OUT or ./memstab-out)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn build(&self, stage: Stage) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_toml_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.structure {
            cfg.structures = vec![s];
        }
        if let Some(k) = self.level {
            cfg.levels = vec![k];
        }
        if let Some(t) = self.temp {
            cfg.temperature = Some(t);
        }
        if let Some(n) = self.samples {
            cfg.n_samples = n;
            cfg.autocorr_steps = n;
        }
        if let Some(r) = self.replicas {
            cfg.replicas = r;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.stage = stage;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation stages (staging scans + production chains)
    Simulate {
        #[command(flatten)]
        common: ConfigArgs,

        /// stage to run: coarse | fine | production | all
        #[arg(long, default_value = "production")]
        stage: Stage,
    },
    /// Post-process stored series into peaks, fits, exponents and figures
    Analyze {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Render summary tables from the results store
    Tables {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Compare a Monte Carlo chain against exact enumeration (small N)
    OracleCheck {
        #[command(flatten)]
        common: ConfigArgs,

        /// sampling algorithm: wolff | metropolis
        #[arg(long, default_value = "wolff")]
        algorithm: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not set thread count: {e}");
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Simulate { common, stage } => {
            let cfg = common.build(stage)?;
            let store = pipeline::run_pipeline(&cfg)?;
            println!("results: {}", store.path().display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { common } => {
            let cfg = common.build(Stage::Analyze)?;
            let store = pipeline::run_pipeline(&cfg)?;
            println!("results: {}", store.path().display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Tables { common } => {
            let cfg = common.build(Stage::Analyze)?;
            let store = memstab::pipeline::ResultsStore::open(&cfg.output_dir, &cfg.config_hash())?;
            let records = store.load()?;
            let dir = cfg.output_dir.join("tables");
            let files = pipeline::emit_tables(&records, &dir)?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck { common, algorithm } => {
            let structure = common.structure.unwrap_or(StructureId::S1);
            let level = common.level.unwrap_or(2);
            let t = common.temp.unwrap_or(1.0);
            let algorithm = match algorithm.as_str() {
                "wolff" => Algorithm::Wolff,
                "metropolis" => Algorithm::Metropolis,
                other => {
                    return Err(memstab::Error::InvalidArgument(format!(
                        "unknown algorithm `{other}`"
                    )))
                }
            };
            let g = build_structure(structure, level)?;
            let exact = oracle::exact_thermo(&g, t)?;
            let params = ChainParams {
                temperature: t,
                thermalization_steps: 5_000,
                sample_interval: 2,
                n_samples: common.samples.unwrap_or(200_000),
                seed: common.seed.unwrap_or(1),
                algorithm,
                record_cluster_sizes: false,
            };
            let series = run_chain(&g, &params)?;
            let rows = [
                ("<E>   ", observables::mean_energy(&series)?, exact.mean_e),
                ("m     ", observables::magnetization_per_site(&series)?, exact.m),
                ("c     ", observables::specific_heat(&series)?, exact.c),
                ("chi   ", observables::susceptibility(&series)?, exact.chi),
            ];
            println!("{structure} k={level} (N={}) at T={t}", g.n_sites());
            let mut ok = true;
            for (name, est, exact_v) in rows {
                let pass = est.agrees_within_3_sigma(exact_v, 0.0);
                ok &= pass;
                println!(
                    "{name} mc = {} exact = {exact_v:.6} [{}]",
                    pipeline::format_with_error(est.value, est.two_sigma, 6),
                    if pass { "ok" } else { "MISMATCH" },
                );
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}
