//! Per-layer bipartite propagation structures and their block partitioning.

mod build;
mod io;
mod partition;
mod sampler;

pub use build::{build_nodeflow, khop_oracle};
pub use io::{read_nodeflows, write_nodeflows};
pub use partition::{partition_nodeflow, Block, PartitionedNodeflow};
pub use sampler::sample_neighbors;

use crate::error::{Error, Result};
use crate::graph::VertexId;

/// One edge of a nodeflow: indices into `inputs` and `outputs`, plus the
/// index of its edge-data row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NfEdge {
    pub u: u32,
    pub v: u32,
    pub data: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerNodeflow {
    pub inputs: Vec<VertexId>,
    pub outputs: Vec<VertexId>,
    pub edges: Vec<NfEdge>,
    pub identity: bool,
}

impl LayerNodeflow {
    pub fn new(inputs: Vec<VertexId>, outputs: Vec<VertexId>, edges: Vec<NfEdge>) -> Result<Self> {
        let nf = LayerNodeflow { inputs, outputs, edges, identity: false };
        nf.validate()?;
        Ok(nf)
    }

    /// Every vertex connected only to itself.
    pub fn identity(vertices: Vec<VertexId>) -> Self {
        let edges = (0..vertices.len() as u32).map(|i| NfEdge { u: i, v: i, data: i }).collect();
        LayerNodeflow { inputs: vertices.clone(), outputs: vertices, edges, identity: true }
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.outputs.is_empty()
    }

    pub fn in_degree(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.outputs.len()];
        for e in &self.edges {
            deg[e.v as usize] += 1;
        }
        deg
    }

    pub fn validate(&self) -> Result<()> {
        let (nu, nv) = (self.inputs.len() as u32, self.outputs.len() as u32);
        if let Some(e) = self.edges.iter().find(|e| e.u >= nu || e.v >= nv) {
            return Err(Error::Invariant(format!("edge {e:?} out of range ({nu} inputs, {nv} outputs)")));
        }
        if !self.edges.is_empty() {
            if let Some(v) = self.in_degree().iter().position(|&d| d == 0) {
                return Err(Error::Invariant(format!("output {v} has no incident edge")));
            }
        }
        if self.identity {
            let ok = self.inputs == self.outputs
                && self.edges.len() == self.inputs.len()
                && self.edges.iter().enumerate().all(|(i, e)| (e.u, e.v, e.data) == (i as u32, i as u32, i as u32));
            if !ok {
                return Err(Error::Invariant("identity nodeflow is not self-connected".into()));
            }
        }
        Ok(())
    }
}
