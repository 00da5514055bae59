use std::collections::{BTreeSet, HashMap};

use super::{sample_neighbors, LayerNodeflow, NfEdge};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Builds one nodeflow per layer, back to front. `sample_sizes[l]` is the
/// fan-out of layer `l` (layer 0 reads the raw features). The last layer's
/// outputs are `targets` (deduplicated, order kept); each layer's inputs are
/// its outputs followed by newly sampled vertices in discovery order.
///
/// With `include_self` every output also receives an edge from itself. An
/// output with no sampled neighbour always gets the self edge so that no
/// output is left without an incident edge.
pub fn build_nodeflow(
    g: &Graph,
    targets: &[VertexId],
    sample_sizes: &[usize],
    seed: u64,
    include_self: bool,
) -> Result<Vec<LayerNodeflow>> {
    if targets.is_empty() {
        return Err(Error::param("nodeflow needs at least one target"));
    }
    if sample_sizes.is_empty() || sample_sizes.contains(&0) {
        return Err(Error::param("sample sizes must be non-empty and >= 1"));
    }
    if let Some(&t) = targets.iter().find(|&&t| t as usize >= g.num_vertices()) {
        return Err(Error::param(format!("target {t} out of range for {} vertices", g.num_vertices())));
    }

    let mut outputs = Vec::with_capacity(targets.len());
    let mut seen = BTreeSet::new();
    for &t in targets {
        if seen.insert(t) {
            outputs.push(t);
        }
    }

    let mut layers = Vec::with_capacity(sample_sizes.len());
    for layer in (0..sample_sizes.len()).rev() {
        let nf = expand(g, &outputs, sample_sizes[layer], layer, seed, include_self);
        outputs = nf.inputs.clone();
        layers.push(nf);
    }
    layers.reverse();
    Ok(layers)
}

fn expand(g: &Graph, outputs: &[VertexId], k: usize, layer: usize, seed: u64, include_self: bool) -> LayerNodeflow {
    let mut inputs: Vec<VertexId> = outputs.to_vec();
    let mut index: HashMap<VertexId, u32> = outputs.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let mut edges = Vec::new();
    for (vi, &v) in outputs.iter().enumerate() {
        let sampled = sample_neighbors(g, v, k, layer, seed);
        let need_self = include_self || sampled.is_empty();
        for u in need_self.then_some(v).into_iter().chain(sampled) {
            let ui = *index.entry(u).or_insert_with(|| {
                inputs.push(u);
                (inputs.len() - 1) as u32
            });
            edges.push(NfEdge { u: ui, v: vi as u32, data: edges.len() as u32 });
        }
    }
    LayerNodeflow { inputs, outputs: outputs.to_vec(), edges, identity: false }
}

/// Sampled neighbourhood enumeration, independent of [`build_nodeflow`]:
/// returns the input-vertex set of every layer, front to back.
pub fn khop_oracle(g: &Graph, targets: &[VertexId], sample_sizes: &[usize], seed: u64) -> Vec<BTreeSet<VertexId>> {
    fn reach(g: &Graph, v: VertexId, layer: usize, sizes: &[usize], seed: u64, out: &mut [BTreeSet<VertexId>]) {
        // `v` is an output of `layer`; it and its sample are inputs of `layer`.
        out[layer].insert(v);
        let sampled = sample_neighbors(g, v, sizes[layer], layer, seed);
        for &u in &sampled {
            out[layer].insert(u);
        }
        if layer > 0 {
            reach(g, v, layer - 1, sizes, seed, out);
            for u in sampled {
                reach(g, u, layer - 1, sizes, seed, out);
            }
        }
    }
    let mut out = vec![BTreeSet::new(); sample_sizes.len()];
    if sample_sizes.is_empty() {
        return out;
    }
    for &t in targets {
        reach(g, t, sample_sizes.len() - 1, sample_sizes, seed, &mut out);
    }
    out
}
