use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Graph, VertexId};
use crate::error::{Error, Result};
use crate::nodeflow::build_nodeflow;

/// Square adjacency blocks of `block_size` vertices; only non-empty blocks counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityHistogram {
    pub block_size: usize,
    /// Upper bin edges; bin `i` holds densities in `(edges[i-1], edges[i]]`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub num_vertices: usize,
    pub num_edges: usize,
    pub mean_degree: f64,
    /// (quantile, degree) pairs, nearest-rank.
    pub degree_quantiles: Vec<(f64, usize)>,
    pub median_khop: f64,
    pub khop_sizes: Vec<usize>,
    pub density: DensityHistogram,
}

pub const DEGREE_QUANTILES: [f64; 7] = [0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0];
pub const DENSITY_BLOCK: usize = 256;

/// Structural statistics. The k-hop size of a root is the number of unique
/// vertices its sampled nodeflow touches.
pub fn graph_stats(g: &Graph, sample_sizes: &[usize], seed: u64, trials: usize) -> Result<GraphStats> {
    if trials == 0 {
        return Err(Error::param("trials must be >= 1"));
    }
    if g.num_vertices() == 0 {
        return Err(Error::param("graph has no vertices"));
    }
    let mut degrees: Vec<usize> = (0..g.num_vertices() as VertexId).map(|v| g.degree(v)).collect();
    degrees.sort_unstable();
    let degree_quantiles = DEGREE_QUANTILES.iter().map(|&q| (q, nearest_rank(&degrees, q))).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5747_5354_0000_0000);
    let mut khop_sizes = Vec::with_capacity(trials);
    for _ in 0..trials {
        let root = rng.gen_range(0..g.num_vertices()) as VertexId;
        khop_sizes.push(khop_size(g, root, sample_sizes, seed)?);
    }

    Ok(GraphStats {
        num_vertices: g.num_vertices(),
        num_edges: g.num_edges(),
        mean_degree: g.num_edges() as f64 / g.num_vertices() as f64,
        degree_quantiles,
        median_khop: median(&khop_sizes),
        khop_sizes,
        density: density_histogram(g, DENSITY_BLOCK),
    })
}

/// Unique vertices in the sampled nodeflow rooted at `root`.
pub fn khop_size(g: &Graph, root: VertexId, sample_sizes: &[usize], seed: u64) -> Result<usize> {
    let layers = build_nodeflow(g, &[root], sample_sizes, seed, true)?;
    Ok(layers[0].num_inputs())
}

fn nearest_rank(sorted: &[usize], q: f64) -> usize {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn median(xs: &[usize]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_unstable();
    match s.len() {
        0 => 0.0,
        n if n % 2 == 1 => s[n / 2] as f64,
        n => (s[n / 2 - 1] + s[n / 2]) as f64 / 2.0,
    }
}

pub fn density_histogram(g: &Graph, block_size: usize) -> DensityHistogram {
    let mut nnz: HashMap<(usize, usize), u64> = HashMap::new();
    for v in 0..g.num_vertices() as VertexId {
        for &t in g.neighbors(v) {
            *nnz.entry((v as usize / block_size, t as usize / block_size)).or_default() += 1;
        }
    }
    // Log-decade bins down to 1e-6.
    let bin_edges: Vec<f64> = (0..=6).rev().map(|k| 10f64.powi(-k)).collect();
    let mut counts = vec![0u64; bin_edges.len()];
    let n = g.num_vertices();
    for (&(r, c), &k) in &nnz {
        let h = (block_size.min(n - r * block_size)) as f64;
        let w = (block_size.min(n - c * block_size)) as f64;
        let d = k as f64 / (h * w);
        let bin = bin_edges.iter().position(|&e| d <= e).unwrap_or(bin_edges.len() - 1);
        counts[bin] += 1;
    }
    DensityHistogram { block_size, bin_edges, counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_khop_is_three() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap().symmetrized();
        assert_eq!(khop_size(&g, 1, &[25, 10], 0).unwrap(), 3);
    }

    #[test]
    fn star_bound() {
        let edges: Vec<_> = (1..=50).map(|i| (0, i)).collect();
        let g = Graph::from_edges(51, &edges).unwrap().symmetrized();
        let s = khop_size(&g, 0, &[25, 10], 9).unwrap();
        assert!(s <= 1 + 25 + 25 * 10);
        assert!((26..=36).contains(&s), "{s}");
    }

    #[test]
    fn quantiles_and_median() {
        assert_eq!(nearest_rank(&[1, 2, 3, 4], 0.5), 2);
        assert_eq!(nearest_rank(&[1, 2, 3, 4], 0.0), 1);
        assert_eq!(median(&[3, 1, 2]), 2.0);
        assert_eq!(median(&[4, 1, 2, 3]), 2.5);
    }

    #[test]
    fn zero_trials_rejected() {
        let g = Graph::from_edges(1, &[]).unwrap();
        assert!(graph_stats(&g, &[2], 0, 0).is_err());
    }

    #[test]
    fn density_full_block() {
        let edges: Vec<_> = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).collect();
        let g = Graph::from_edges(4, &edges).unwrap();
        let h = density_histogram(&g, 256);
        assert_eq!(h.counts.iter().sum::<u64>(), 1);
        assert_eq!(*h.counts.last().unwrap(), 1);
    }
}
