//! Benchmark fixtures.

use topsimp_core::{PersistenceDiagram, PersistencePair};

/// Deterministic pseudo-random finite dim-0 diagram with `n` points.
pub fn scattered_diagram(seed: u64, n: usize) -> PersistenceDiagram {
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let pairs = (0..n as u32)
        .map(|i| {
            let birth = next();
            let death = birth + 0.3 * next();
            PersistencePair {
                dim: 0,
                birth_simplex: None,
                death_simplex: None,
                birth_vertex: 2 * i,
                death_vertex: 2 * i + 1,
                birth,
                death,
                finite: true,
            }
        })
        .collect();
    PersistenceDiagram::new(pairs)
}
