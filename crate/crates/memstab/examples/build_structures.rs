//! Builds the three stabilizer-graph families and prints their geometry.
//!
//! Run with: cargo run --example build_structures

use memstab::structures::{build_structure, coordination_stats, export_edge_list, StructureId};

fn main() -> memstab::Result<()> {
    println!("{:>4} {:>2} {:>6} {:>6} {:>11} {:>7}", "", "k", "sites", "edges", "avg degree", "cycles");
    for s in StructureId::ALL {
        for k in 1..=6 {
            let g = build_structure(s, k)?;
            let (avg_degree, _) = coordination_stats(&g);
            println!(
                "{:>4} {:>2} {:>6} {:>6} {:>11.4} {:>7}",
                s.to_string(),
                k,
                g.n_sites(),
                g.n_edges(),
                avg_degree,
                g.n_independent_cycles(),
            );
        }
        println!(
            "  -> coordination limit as k grows: {}",
            s.coordination_limit()
        );
    }

    // the 9-site level-2 repetition-code graph, as an edge list
    let g = build_structure(StructureId::S1, 2)?;
    println!("\nS1 k=2 edges:\n{}", export_edge_list(&g));
    Ok(())
}
