use super::command::{build_command_stream, partition_plan, slice_width};
use super::config::ArchConfig;
use super::sim::{simulate, TimingReport};
use crate::error::Result;
use crate::exec::{exec_model, Embeddings, ExecOptions};
use crate::graph::{FeatureStore, Graph, VertexId};
use crate::greta::{ModelPlan, WeightSet};
use crate::nodeflow::{build_nodeflow, LayerNodeflow};

/// Partitions, lowers and simulates one set of nodeflows.
pub fn time_nodeflows(plan: &ModelPlan, nfs: &[LayerNodeflow], cfg: &ArchConfig) -> Result<TimingReport> {
    let pnfs = partition_plan(plan, nfs, cfg)?;
    let cs = build_command_stream(plan, &pnfs, cfg)?;
    Ok(simulate(&cs, cfg))
}

/// Functional result under the schedule `cfg` describes, plus its timing.
pub fn run_timed(
    plan: &ModelPlan,
    nfs: &[LayerNodeflow],
    feats: &FeatureStore,
    weights: &WeightSet,
    cfg: &ArchConfig,
) -> Result<(Embeddings, TimingReport)> {
    let opts = ExecOptions { partition: cfg.partition, slice: Some(slice_width(cfg, plan.dims[0])) };
    let emb = exec_model(plan, nfs, feats, weights, &opts)?;
    Ok((emb, time_nodeflows(plan, nfs, cfg)?))
}

/// End to end from a graph: samples nodeflows and draws features and
/// weights from `seed`.
pub fn run_timed_inference(
    plan: &ModelPlan,
    graph: &Graph,
    targets: &[VertexId],
    cfg: &ArchConfig,
    seed: u64,
) -> Result<(Embeddings, TimingReport)> {
    let nfs = build_nodeflow(graph, targets, &plan.sample_sizes, seed, plan.include_self)?;
    let feats = FeatureStore::seeded_random(graph.num_vertices(), plan.dims[0], seed);
    let weights = WeightSet::seeded(&plan.weights, seed);
    run_timed(plan, &nfs, &feats, &weights, cfg)
}
