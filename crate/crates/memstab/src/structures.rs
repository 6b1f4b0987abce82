//! Memory stabilizer graphs for the concatenated three-bit code.
//!
//! Each graph family is built recursively: a level-k graph is three level-(k-1)
//! blocks whose centers are joined middle-to-middle. Structure 1 is a tree,
//! Structure 2 adds triangles at the bottom level only, and Structure 3 closes
//! the center triangle at every level. Sites are numbered depth-first so the
//! three level-1 spins of a block occupy consecutive indices.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Default cap on the concatenation level (3^10 ≈ 59k sites).
pub const DEFAULT_MAX_LEVEL: u32 = 10;

/// The three stabilizer graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructureId {
    /// Tree: minimal generator set, no loops.
    S1,
    /// Loops (triangles) at the k=1 level only.
    S2,
    /// Loops at all concatenation levels.
    S3,
}

impl StructureId {
    pub const ALL: [StructureId; 3] = [StructureId::S1, StructureId::S2, StructureId::S3];

    /// 1-based index used in CLI flags and reports.
    pub fn index(self) -> u32 {
        match self {
            StructureId::S1 => 1,
            StructureId::S2 => 2,
            StructureId::S3 => 3,
        }
    }

    /// Closed-form edge count at level `k`.
    pub fn edge_count(self, k: u32) -> usize {
        let n = 3usize.pow(k);
        match self {
            StructureId::S1 => n - 1,
            StructureId::S2 => 4 * 3usize.pow(k - 1) - 1,
            StructureId::S3 => 3 * (n - 1) / 2,
        }
    }

    /// k → ∞ limit of the average coordination number.
    pub fn coordination_limit(self) -> f64 {
        match self {
            StructureId::S1 => 2.0,
            StructureId::S2 => 8.0 / 3.0,
            StructureId::S3 => 3.0,
        }
    }
}

impl fmt::Display for StructureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.index())
    }
}

impl FromStr for StructureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "S1" | "s1" => Ok(StructureId::S1),
            "2" | "S2" | "s2" => Ok(StructureId::S2),
            "3" | "S3" | "s3" => Ok(StructureId::S3),
            other => Err(Error::InvalidArgument(format!(
                "unknown structure `{other}` (expected 1, 2 or 3)"
            ))),
        }
    }
}

/// Immutable adjacency structure for one (structure, level) pair.
///
/// Edges are the stabilizer generators Z_iZ_j; adjacency is stored in
/// compressed form for the simulation kernels. Immutable after construction,
/// safe to share across concurrent chains.
#[derive(Debug, Clone)]
pub struct StabilizerGraph {
    structure: StructureId,
    level: u32,
    n_sites: usize,
    /// Sorted, deduplicated (i, j) pairs with i < j, 0-indexed.
    edges: Vec<(u32, u32)>,
    offsets: Vec<u32>,
    neighbor_list: Vec<u32>,
}

impl StabilizerGraph {
    pub fn structure(&self) -> StructureId {
        self.structure
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, site: usize) -> &[u32] {
        let lo = self.offsets[site] as usize;
        let hi = self.offsets[site + 1] as usize;
        &self.neighbor_list[lo..hi]
    }

    pub fn degree(&self, site: usize) -> usize {
        self.neighbors(site).len()
    }

    /// Cycle-space dimension |E| - N + 1 (graph is connected).
    pub fn n_independent_cycles(&self) -> usize {
        self.n_edges() + 1 - self.n_sites
    }

    pub fn is_connected(&self) -> bool {
        if self.n_sites == 0 {
            return false;
        }
        let mut seen = vec![false; self.n_sites];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in self.neighbors(i as usize) {
                if !seen[j as usize] {
                    seen[j as usize] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.n_sites
    }
}

/// Builds one of the three memory stabilizer graphs at concatenation level `k`.
pub fn build_structure(id: StructureId, k: u32) -> Result<StabilizerGraph> {
    build_structure_capped(id, k, DEFAULT_MAX_LEVEL)
}

/// As [`build_structure`] with an explicit level cap bounding memory use.
pub fn build_structure_capped(id: StructureId, k: u32, max_level: u32) -> Result<StabilizerGraph> {
    if k == 0 {
        return Err(Error::InvalidArgument("level k must be >= 1".into()));
    }
    if k > max_level {
        return Err(Error::InvalidArgument(format!(
            "level k={k} exceeds cap {max_level}"
        )));
    }
    let n_sites = 3usize
        .checked_pow(k)
        .ok_or_else(|| Error::InvalidArgument(format!("3^{k} overflows")))?;

    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(id.edge_count(k));
    // Level-1 blocks occupy consecutive triples; the bottom triangle (S2/S3)
    // adds the (1,3) generator to the path.
    for base in (0..n_sites as u32).step_by(3) {
        edges.push((base, base + 1));
        edges.push((base + 1, base + 2));
        if id != StructureId::S1 {
            edges.push((base, base + 2));
        }
    }
    // Level-j merge: blocks A, B, C of size 3^(j-1); centers joined
    // A-B and B-C, block center inherited from the middle block B.
    // S3 closes the A-C loop at every level above 1.
    let mut center_offset = 1u32; // center of a level-1 block relative to its base
    for j in 2..=k {
        let block = 3u32.pow(j - 1);
        for base in (0..n_sites as u32).step_by(3 * block as usize) {
            let ca = base + center_offset;
            let cb = base + block + center_offset;
            let cc = base + 2 * block + center_offset;
            edges.push((ca, cb));
            edges.push((cb, cc));
            if id == StructureId::S3 {
                edges.push((ca, cc));
            }
        }
        center_offset += 3u32.pow(j - 1);
    }
    edges.sort_unstable();
    debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));

    let mut degrees = vec![0u32; n_sites];
    for &(i, j) in &edges {
        degrees[i as usize] += 1;
        degrees[j as usize] += 1;
    }
    let mut offsets = vec![0u32; n_sites + 1];
    for i in 0..n_sites {
        offsets[i + 1] = offsets[i] + degrees[i];
    }
    let mut cursor = offsets.clone();
    let mut neighbor_list = vec![0u32; 2 * edges.len()];
    for &(i, j) in &edges {
        neighbor_list[cursor[i as usize] as usize] = j;
        cursor[i as usize] += 1;
        neighbor_list[cursor[j as usize] as usize] = i;
        cursor[j as usize] += 1;
    }

    Ok(StabilizerGraph {
        structure: id,
        level: k,
        n_sites,
        edges,
        offsets,
        neighbor_list,
    })
}

/// Average degree and generators per spin site.
pub fn coordination_stats(g: &StabilizerGraph) -> (f64, f64) {
    let e = g.n_edges() as f64;
    let n = g.n_sites() as f64;
    (2.0 * e / n, e / n)
}

/// One edge per line, `i j` with i < j, 0-indexed, lexicographically sorted.
pub fn export_edge_list(g: &StabilizerGraph) -> String {
    let mut out = String::with_capacity(g.n_edges() * 8);
    for &(i, j) in g.edges() {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_level_zero_and_overflow() {
        assert!(build_structure(StructureId::S1, 0).is_err());
        assert!(build_structure(StructureId::S1, 11).is_err());
        assert!(build_structure_capped(StructureId::S1, 3, 2).is_err());
    }

    #[test]
    fn s1_k2_matches_generator_list() {
        // <Z1Z2, Z2Z3, Z2Z5, Z4Z5, Z5Z6, Z5Z8, Z7Z8, Z8Z9>, 1-indexed
        let g = build_structure(StructureId::S1, 2).unwrap();
        assert_eq!(g.n_sites(), 9);
        let expected: Vec<(u32, u32)> = vec![
            (0, 1),
            (1, 2),
            (1, 4),
            (3, 4),
            (4, 5),
            (4, 7),
            (6, 7),
            (7, 8),
        ];
        assert_eq!(g.edges(), expected.as_slice());
    }

    #[test]
    fn s3_k1_is_triangle() {
        let g = build_structure(StructureId::S3, 1).unwrap();
        assert_eq!(g.n_sites(), 3);
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn s3_k2_has_twelve_edges() {
        // 3 triangles (9) + 2 tree edges + 1 level-2 loop edge
        let g = build_structure(StructureId::S3, 2).unwrap();
        assert_eq!(g.n_edges(), 12);
        assert!(g.edges().contains(&(1, 7))); // the level-2 A-C loop
        let (deg, gens) = coordination_stats(&g);
        assert!((deg - 8.0 / 3.0).abs() < 1e-12);
        assert!((gens - 12.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn s2_loops_only_at_level_one() {
        for k in 1..=5 {
            let g = build_structure(StructureId::S2, k).unwrap();
            assert_eq!(g.n_independent_cycles(), 3usize.pow(k - 1));
        }
    }

    #[test]
    fn edge_counts_and_connectivity_for_all_levels() {
        for id in StructureId::ALL {
            for k in 1..=8 {
                let g = build_structure(id, k).unwrap();
                assert_eq!(g.n_sites(), 3usize.pow(k));
                assert_eq!(g.n_edges(), id.edge_count(k), "{id:?} k={k}");
                assert!(g.is_connected(), "{id:?} k={k} disconnected");
                assert!((0..g.n_sites()).all(|i| g.degree(i) >= 1));
                // adjacency consistent with the edge set
                let deg_sum: usize = (0..g.n_sites()).map(|i| g.degree(i)).sum();
                assert_eq!(deg_sum, 2 * g.n_edges());
            }
        }
    }

    #[test]
    fn degree_converges_to_table_limits() {
        for id in StructureId::ALL {
            let slack = match id {
                StructureId::S1 | StructureId::S2 => 2.0,
                StructureId::S3 => 3.0,
            };
            for k in 1..=8 {
                let g = build_structure(id, k).unwrap();
                let (deg, _) = coordination_stats(&g);
                let n = g.n_sites() as f64;
                assert!(
                    (deg - id.coordination_limit()).abs() <= slack / n + 1e-12,
                    "{id:?} k={k}: deg={deg}"
                );
            }
        }
    }

    #[test]
    fn cycle_counts() {
        for k in 1..=6 {
            let s1 = build_structure(StructureId::S1, k).unwrap();
            assert_eq!(s1.n_independent_cycles(), 0);
            let s3 = build_structure(StructureId::S3, k).unwrap();
            assert_eq!(s3.n_independent_cycles(), (3usize.pow(k) - 1) / 2);
        }
    }

    #[test]
    fn edge_list_export() {
        let s1 = build_structure(StructureId::S1, 1).unwrap();
        assert_eq!(export_edge_list(&s1), "0 1\n1 2\n");
        let s3 = build_structure(StructureId::S3, 1).unwrap();
        assert_eq!(export_edge_list(&s3), "0 1\n0 2\n1 2\n");
        let s1k2 = build_structure(StructureId::S1, 2).unwrap();
        assert_eq!(export_edge_list(&s1k2).lines().count(), 8);
    }

    proptest! {
        #[test]
        fn construction_is_deterministic(k in 1u32..=6, which in 0usize..3) {
            let id = StructureId::ALL[which];
            let a = build_structure(id, k).unwrap();
            let b = build_structure(id, k).unwrap();
            prop_assert_eq!(a.edges(), b.edges());
            prop_assert_eq!(export_edge_list(&a), export_edge_list(&b));
        }
    }
}
