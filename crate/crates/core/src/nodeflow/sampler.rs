use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, VertexId};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based key for the per-(seed, layer, vertex) stream.
pub(crate) fn sample_key(seed: u64, layer: usize, v: VertexId) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ layer as u64) ^ v as u64)
}

/// A uniform `k`-subset of `v`'s neighbour positions, or every neighbour
/// when the degree does not exceed `k`. Pure in `(v, k, layer, seed)`.
pub fn sample_neighbors(g: &Graph, v: VertexId, k: usize, layer: usize, seed: u64) -> Vec<VertexId> {
    let nbrs = g.neighbors(v);
    if nbrs.len() <= k {
        return nbrs.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sample_key(seed, layer, v));
    // Partial Fisher-Yates over positions.
    let mut pos: Vec<u32> = (0..nbrs.len() as u32).collect();
    for i in 0..k {
        let j = rng.gen_range(i..pos.len());
        pos.swap(i, j);
    }
    pos[..k].iter().map(|&p| nbrs[p as usize]).collect()
}
