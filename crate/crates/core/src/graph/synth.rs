use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, VertexId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    UniformRandom,
    PowerLaw,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-random" | "uniform" | "er" => Ok(SyntheticKind::UniformRandom),
            "power-law" | "powerlaw" | "ba" => Ok(SyntheticKind::PowerLaw),
            other => Err(Error::unknown("synthetic graph kind", other)),
        }
    }
}

/// Generates a symmetric graph with approximately `avg_degree` neighbours
/// per vertex. Uniform draws endpoints independently; power-law grows the
/// graph by preferential attachment.
pub fn generate_synthetic(kind: SyntheticKind, n: usize, avg_degree: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::param("synthetic graph needs n >= 1"));
    }
    if avg_degree >= n && avg_degree > 0 {
        return Err(Error::param(format!("avg_degree {avg_degree} must be below n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ kind as u64);
    let undirected = match kind {
        SyntheticKind::UniformRandom => uniform_edges(&mut rng, n, avg_degree),
        SyntheticKind::PowerLaw => preferential_edges(&mut rng, n, avg_degree),
    };
    let mut edges = Vec::with_capacity(undirected.len() * 2);
    for (a, b) in undirected {
        edges.push((a, b));
        edges.push((b, a));
    }
    Graph::from_edges(n, &edges)
}

fn uniform_edges(rng: &mut ChaCha8Rng, n: usize, avg_degree: usize) -> Vec<(VertexId, VertexId)> {
    let count = n * avg_degree / 2;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.gen_range(0..n) as VertexId;
        let b = rng.gen_range(0..n) as VertexId;
        if a != b {
            out.push((a, b));
        }
    }
    out
}

fn preferential_edges(rng: &mut ChaCha8Rng, n: usize, avg_degree: usize) -> Vec<(VertexId, VertexId)> {
    let per_vertex = avg_degree.div_ceil(2);
    if per_vertex == 0 || n < 2 {
        return Vec::new();
    }
    let seed_size = (per_vertex + 1).min(n);
    let mut out = Vec::with_capacity(n * per_vertex);
    // Endpoint multiset: sampling from it is degree-proportional.
    let mut endpoints: Vec<VertexId> = Vec::with_capacity(2 * n * per_vertex);
    for a in 0..seed_size {
        for b in a + 1..seed_size {
            out.push((a as VertexId, b as VertexId));
            endpoints.extend([a as VertexId, b as VertexId]);
        }
    }
    let mut chosen: Vec<VertexId> = Vec::with_capacity(per_vertex);
    for v in seed_size..n {
        chosen.clear();
        let want = per_vertex.min(v);
        while chosen.len() < want {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            out.push((v as VertexId, t));
            endpoints.extend([v as VertexId, t]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_isolated_vertex() {
        let g = generate_synthetic(SyntheticKind::UniformRandom, 1, 0, 7).unwrap();
        assert_eq!((g.num_vertices(), g.num_edges()), (1, 0));
    }

    #[test]
    fn deterministic() {
        for kind in [SyntheticKind::UniformRandom, SyntheticKind::PowerLaw] {
            let a = generate_synthetic(kind, 500, 8, 3).unwrap();
            let b = generate_synthetic(kind, 500, 8, 3).unwrap();
            assert_eq!(a.out_offsets(), b.out_offsets());
            assert_eq!(a.out_targets(), b.out_targets());
            let c = generate_synthetic(kind, 500, 8, 4).unwrap();
            assert_ne!(a.out_targets(), c.out_targets());
        }
    }

    #[test]
    fn degree_too_large() {
        assert!(generate_synthetic(SyntheticKind::UniformRandom, 5, 5, 0).is_err());
        assert!(generate_synthetic(SyntheticKind::PowerLaw, 0, 0, 0).is_err());
    }

    #[test]
    fn average_degree_close_to_request() {
        let g = generate_synthetic(SyntheticKind::UniformRandom, 2000, 10, 1).unwrap();
        let mean = g.num_edges() as f64 / g.num_vertices() as f64;
        assert!((mean - 10.0).abs() < 0.5, "mean degree {mean}");
    }
}
