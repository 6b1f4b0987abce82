//! The staged experiment end to end, scaled down so it finishes in about a
//! minute: simulate -> analyze -> tables, all through the library API that
//! backs the CLI.

use memstab::pipeline::{emit_tables, run_pipeline, ExperimentConfig, Stage};
use memstab::structures::StructureId;

fn main() -> memstab::Result<()> {
    let out = std::env::temp_dir().join("memstab-example-pipeline");
    let _ = std::fs::remove_dir_all(&out);

    let cfg = ExperimentConfig {
        structures: vec![StructureId::S3],
        levels: vec![4, 5],
        replicas: 2,
        n_samples: 50_000,
        autocorr_steps: 20_000,
        output_dir: out.clone(),
        stage: Stage::All,
        oracle_check: false,
        ..ExperimentConfig::default()
    };

    let store = run_pipeline(&cfg)?;
    let records = store.load()?;
    println!("{} records in {}", records.len(), store.path().display());

    let files = emit_tables(&records, &out.join("tables"))?;
    println!("\ntables:");
    for f in &files {
        println!("  {}", f.display());
    }
    let peaks = std::fs::read_to_string(out.join("tables/susceptibility_peaks.txt"))?;
    println!("\n{peaks}");
    Ok(())
}
