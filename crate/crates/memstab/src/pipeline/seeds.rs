//! Deterministic seed derivation for replica chains.
//!
//! Replica seeds are `mix(base, structure, level, temp_index, replica)` via
//! repeated splitmix64 rounds, so every (cell, replica) stream is stable
//! across parallel and resumed runs.

/// One splitmix64 round.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Chain seed for (structure s, level k, temperature index t, replica r).
pub fn derive_seed(base: u64, structure: u32, level: u32, temp_index: u32, replica: u32) -> u64 {
    let mut h = splitmix64(base);
    for v in [structure, level, temp_index, replica] {
        h = splitmix64(h ^ u64::from(v).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    h
}
