//! Immutable graphs in compressed adjacency form, their feature stores and
//! the structural statistics used to characterise datasets.

mod features;
mod io;
mod stats;
mod synth;

pub use features::{attach_features, FeatureSource, FeatureStore, Precision};
pub use io::{load_graph, parse_edge_list, read_csr, save_csr, write_csr, GraphFormat};
pub(crate) use io::{read_u32, read_u8};
pub use stats::{graph_stats, DensityHistogram, GraphStats};
pub use synth::{generate_synthetic, SyntheticKind};

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Compressed adjacency, indexed by dense vertex id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    pub offsets: Vec<u64>,
    pub targets: Vec<VertexId>,
}

impl Adjacency {
    fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let lo = self.offsets[v as usize] as usize;
        let hi = self.offsets[v as usize + 1] as usize;
        &self.targets[lo..hi]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_vertices: usize,
    out: Adjacency,
    inc: Option<Adjacency>,
    /// Original (pre-remap) id of every dense vertex, when ingest remapped ids.
    original_ids: Option<Vec<u64>>,
}

impl Graph {
    /// Builds a graph from a directed edge list over dense ids `0..n`.
    /// Duplicates and self-loops are kept; per-source order follows input order.
    pub fn from_edges(num_vertices: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        if num_vertices > VertexId::MAX as usize {
            return Err(Error::Capacity(format!(
                "{num_vertices} vertices do not fit 32-bit ids"
            )));
        }
        for &(s, d) in edges {
            if s as usize >= num_vertices || d as usize >= num_vertices {
                return Err(Error::param(format!(
                    "edge ({s}, {d}) out of range for {num_vertices} vertices"
                )));
            }
        }
        let out = build_adjacency(num_vertices, edges.iter().copied());
        Ok(Graph { num_vertices, out, inc: None, original_ids: None })
    }

    /// Wraps raw CSR arrays, checking the structural invariants.
    pub fn from_csr(num_vertices: usize, offsets: Vec<u64>, targets: Vec<VertexId>) -> Result<Self> {
        if offsets.len() != num_vertices + 1 {
            return Err(Error::Format(format!(
                "offset array has {} entries, expected {}",
                offsets.len(),
                num_vertices + 1
            )));
        }
        if offsets.first().copied().unwrap_or(0) != 0 {
            return Err(Error::Format("first offset must be 0".into()));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("offsets must be non-decreasing".into()));
        }
        if *offsets.last().unwrap() != targets.len() as u64 {
            return Err(Error::Format("last offset must equal edge count".into()));
        }
        if let Some(&t) = targets.iter().find(|&&t| t as usize >= num_vertices) {
            return Err(Error::Format(format!("target {t} out of range")));
        }
        Ok(Graph { num_vertices, out: Adjacency { offsets, targets }, inc: None, original_ids: None })
    }

    pub(crate) fn with_original_ids(mut self, ids: Vec<u64>) -> Self {
        self.original_ids = Some(ids);
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.out.targets.len()
    }

    pub fn out_offsets(&self) -> &[u64] {
        &self.out.offsets
    }

    pub fn out_targets(&self) -> &[VertexId] {
        &self.out.targets
    }

    pub fn original_ids(&self) -> Option<&[u64]> {
        self.original_ids.as_deref()
    }

    /// Neighbourhood used for sampling: the out-adjacency of `v`.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        self.out.neighbors(v)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.neighbors(v).len()
    }

    pub fn in_adjacency(&self) -> Option<&Adjacency> {
        self.inc.as_ref()
    }

    pub fn in_neighbors(&self, v: VertexId) -> Option<&[VertexId]> {
        self.inc.as_ref().map(|a| a.neighbors(v))
    }

    /// Returns a copy carrying the in-adjacency mirror (edges grouped by destination).
    pub fn with_in_adjacency(mut self) -> Self {
        self.inc = Some(self.transpose_adjacency());
        self
    }

    /// The graph with every edge reversed.
    pub fn transpose(&self) -> Graph {
        Graph {
            num_vertices: self.num_vertices,
            out: self.transpose_adjacency(),
            inc: None,
            original_ids: self.original_ids.clone(),
        }
    }

    /// Adds the reverse of every edge, turning a directed edge list into an
    /// undirected neighbourhood structure.
    pub fn symmetrized(&self) -> Graph {
        let mut edges = Vec::with_capacity(self.num_edges() * 2);
        for v in 0..self.num_vertices as VertexId {
            for &t in self.neighbors(v) {
                edges.push((v, t));
                if t != v {
                    edges.push((t, v));
                }
            }
        }
        Graph {
            num_vertices: self.num_vertices,
            out: build_adjacency(self.num_vertices, edges.into_iter()),
            inc: None,
            original_ids: self.original_ids.clone(),
        }
    }

    fn transpose_adjacency(&self) -> Adjacency {
        let edges = (0..self.num_vertices as VertexId)
            .flat_map(|v| self.neighbors(v).iter().map(move |&t| (t, v)));
        build_adjacency(self.num_vertices, edges)
    }
}

fn build_adjacency(n: usize, edges: impl Iterator<Item = (VertexId, VertexId)> + Clone) -> Adjacency {
    let mut counts = vec![0u64; n + 1];
    for (s, _) in edges.clone() {
        counts[s as usize + 1] += 1;
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let offsets = counts;
    let mut cursor: Vec<u64> = offsets[..n].to_vec();
    let mut targets = vec![0; offsets[n] as usize];
    for (s, d) in edges {
        let slot = &mut cursor[s as usize];
        targets[*slot as usize] = d;
        *slot += 1;
    }
    Adjacency { offsets, targets }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_chain() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.out_offsets(), &[0, 1, 2, 2]);
        assert_eq!(g.neighbors(1), &[2]);
    }

    #[test]
    fn keeps_duplicates_and_self_loops() {
        let g = Graph::from_edges(2, &[(0, 1), (0, 1), (1, 1)]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 1]);
        assert_eq!(g.neighbors(1), &[1]);
    }

    #[test]
    fn in_mirror_is_transpose() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 1), (3, 0), (1, 3)]).unwrap().with_in_adjacency();
        assert_eq!(g.in_neighbors(1).unwrap(), &[0, 2]);
        assert_eq!(g.in_neighbors(0).unwrap(), &[3]);
        let tt = g.transpose().transpose();
        assert_eq!(tt.out_offsets(), g.out_offsets());
        assert_eq!(tt.out_targets(), g.out_targets());
    }

    #[test]
    fn rejects_bad_csr() {
        assert!(Graph::from_csr(2, vec![0, 2, 1], vec![0]).is_err());
        assert!(Graph::from_csr(2, vec![0, 1, 1], vec![5]).is_err());
        assert!(Graph::from_csr(1, vec![0, 1], vec![0]).is_ok());
    }

    #[test]
    fn symmetrize_adds_reverse_edges() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap().symmetrized();
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.num_edges(), 4);
    }
}
