use std::collections::HashMap;

use serde::Serialize;

use super::config::{ArchConfig, R0Mode};
use crate::error::{Error, Result};
use crate::exec::program_nodeflow;
use crate::greta::{GretaProgram, ModelPlan, Operand, INPUT_SLOT};
use crate::nodeflow::{partition_nodeflow, LayerNodeflow, PartitionedNodeflow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    MemCtrl,
    WeightDma,
    EdgeUnit,
    VertexUnit,
    UpdateUnit,
}

impl Unit {
    pub const ALL: [Unit; 5] = [Unit::MemCtrl, Unit::WeightDma, Unit::EdgeUnit, Unit::VertexUnit, Unit::UpdateUnit];

    pub fn name(self) -> &'static str {
        match self {
            Unit::MemCtrl => "mem_ctrl",
            Unit::WeightDma => "weight_dma",
            Unit::EdgeUnit => "edge_unit",
            Unit::VertexUnit => "vertex_unit",
            Unit::UpdateUnit => "update_unit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Load,
    EdgeAccumulate,
    VertexAccumulate,
    Update,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Load, Phase::EdgeAccumulate, Phase::VertexAccumulate, Phase::Update];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Load => "load",
            Phase::EdgeAccumulate => "edge_accumulate",
            Phase::VertexAccumulate => "vertex_accumulate",
            Phase::Update => "update",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CommandKind {
    /// Feature slice `slice` of input chunk `chunk`.
    LoadFeatures { chunk: usize, slice: usize, rows: usize, row_bytes: usize, bulk: bool },
    /// Weight slice `slice` into the tile buffer.
    LoadWeights { slice: usize, bytes: usize },
    /// Edges of `block` whose destination falls in `group`; `(u, v)` are
    /// nodeflow positions.
    EdgeAccumulate { block: (usize, usize), group: usize, slice: usize, width: usize, r0: bool, edges: Vec<(u32, u32)> },
    /// One weight slice applied to a group of outputs. `streamed` means the
    /// slice does not fit a tile bank and is read through on demand.
    VertexAccumulate { col: usize, group: usize, slice: usize, width: usize, out_dim: usize, vertices: usize, streamed: bool },
    VertexUpdate { col: usize, group: usize, vertices: usize, width: usize },
    /// Every later command waits for all earlier ones.
    Barrier,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Command {
    pub layer: usize,
    pub program: usize,
    pub kind: CommandKind,
    /// Earlier commands this one consumes (buffer hand-offs).
    pub deps: Vec<usize>,
    /// A producer this command streams from: it may start with the producer
    /// and finishes at least `STREAM_DRAIN` cycles after it.
    pub streams_from: Option<usize>,
}

pub const STREAM_DRAIN: u64 = 2;

impl Command {
    pub fn unit(&self, cfg: &ArchConfig) -> Option<Unit> {
        Some(match self.kind {
            CommandKind::LoadFeatures { .. } => Unit::MemCtrl,
            // A merged SRAM has one read port for features and weights.
            CommandKind::LoadWeights { .. } if !cfg.opt.split_sram && cfg.vertex.weights_on_chip => Unit::EdgeUnit,
            CommandKind::LoadWeights { .. } => Unit::WeightDma,
            CommandKind::EdgeAccumulate { .. } => Unit::EdgeUnit,
            CommandKind::VertexAccumulate { .. } => Unit::VertexUnit,
            CommandKind::VertexUpdate { .. } => Unit::UpdateUnit,
            CommandKind::Barrier => return None,
        })
    }

    pub fn phase(&self) -> Option<Phase> {
        Some(match self.kind {
            CommandKind::LoadFeatures { .. } | CommandKind::LoadWeights { .. } => Phase::Load,
            CommandKind::EdgeAccumulate { .. } => Phase::EdgeAccumulate,
            CommandKind::VertexAccumulate { .. } => Phase::VertexAccumulate,
            CommandKind::VertexUpdate { .. } => Phase::Update,
            CommandKind::Barrier => return None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CommandStream {
    pub commands: Vec<Command>,
}

impl CommandStream {
    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn barriers(&self) -> usize {
        self.commands.iter().filter(|c| c.kind == CommandKind::Barrier).count()
    }

    /// Bytes of all feature loads.
    pub fn feature_load_bytes(&self) -> u64 {
        self.commands
            .iter()
            .map(|c| match c.kind {
                CommandKind::LoadFeatures { rows, row_bytes, .. } => (rows * row_bytes) as u64,
                _ => 0,
            })
            .sum()
    }

    /// Checks that dependencies point backwards and that every edge command
    /// reading DRAM-resident features is preceded by a matching load.
    pub fn validate(&self) -> Result<()> {
        let mut loaded: HashMap<(usize, usize, usize, usize), usize> = HashMap::new();
        for (i, c) in self.commands.iter().enumerate() {
            if let Some(&d) = c.deps.iter().chain(&c.streams_from).find(|&&d| d >= i) {
                return Err(Error::Schedule(format!("command {i} depends on later command {d}")));
            }
            match c.kind {
                CommandKind::LoadFeatures { chunk, slice, .. } => {
                    loaded.insert((c.layer, c.program, chunk, slice), i);
                }
                CommandKind::EdgeAccumulate { block, slice, .. } => {
                    if let Some(&l) = loaded.get(&(c.layer, c.program, block.0, slice)) {
                        if !c.deps.contains(&l) {
                            return Err(Error::Schedule(format!("command {i} does not wait for load {l}")));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Slice width used for a transform input of `dim` elements.
pub fn slice_width(cfg: &ArchConfig, dim: usize) -> usize {
    if cfg.opt.tiling {
        cfg.opt.tile_f.min(dim).max(1)
    } else {
        dim.max(1)
    }
}

/// Chunk sizes `(Nc, Mc)` for a program: explicit, or half the nodeflow
/// buffer for one input slice and one output row set respectively.
pub fn chunk_sizes(cfg: &ArchConfig, p: &GretaProgram) -> (usize, usize) {
    cfg.partition.unwrap_or_else(|| {
        let half = cfg.nodeflow_bytes() / 2;
        let f = slice_width(cfg, p.in_dim);
        ((half / (f * cfg.elem_bytes)).max(1), (half / (p.out_dim.max(1) * cfg.elem_bytes)).max(1))
    })
}

/// Partitioned nodeflow of every program, indexed `[layer][program]`.
pub fn partition_plan(plan: &ModelPlan, nfs: &[LayerNodeflow], cfg: &ArchConfig) -> Result<Vec<Vec<PartitionedNodeflow>>> {
    if nfs.len() != plan.num_layers() {
        return Err(Error::shape(format!("{} nodeflows for {} layers", nfs.len(), plan.num_layers())));
    }
    plan.layers
        .iter()
        .zip(nfs)
        .map(|(lp, nf)| {
            lp.programs
                .iter()
                .map(|p| {
                    let (nc, mc) = chunk_sizes(cfg, p);
                    partition_nodeflow(&program_nodeflow(p, nf), nc, mc)
                })
                .collect()
        })
        .collect()
}

struct Builder<'a> {
    cfg: &'a ArchConfig,
    out: Vec<Command>,
    /// Feature buffer fills in issue order with the edge commands reading each.
    loads: Vec<(usize, Vec<usize>)>,
    /// Tile buffer fills with the vertex commands reading each.
    weight_loads: Vec<(usize, Vec<usize>)>,
    /// Edge accumulator fills with the command that drains each.
    acc_fills: Vec<Option<usize>>,
    last_update: Option<usize>,
    /// Latest non-load command, chained when units do not overlap.
    last_compute: Option<usize>,
}

impl Builder<'_> {
    fn push(&mut self, layer: usize, program: usize, kind: CommandKind, mut deps: Vec<usize>) -> usize {
        let opt = &self.cfg.opt;
        let is_load = matches!(kind, CommandKind::LoadFeatures { .. });
        if is_load && !opt.pipeline_partitions && opt.pipeline_units {
            self.barrier(layer, program);
        }
        if !is_load && !opt.pipeline_units {
            deps.extend(self.last_compute);
        }
        deps.sort_unstable();
        deps.dedup();
        let id = self.out.len();
        self.out.push(Command { layer, program, kind, deps, streams_from: None });
        if !is_load {
            self.last_compute = Some(id);
        }
        if !opt.pipeline_partitions && (is_load || !opt.pipeline_units) {
            self.barrier(layer, program);
        }
        id
    }

    fn barrier(&mut self, layer: usize, program: usize) {
        if self.out.last().is_some_and(|c| c.kind != CommandKind::Barrier) {
            self.out.push(Command { layer, program, kind: CommandKind::Barrier, deps: vec![], streams_from: None });
        }
    }

    fn load_weights(&mut self, layer: usize, program: usize, slice: usize, bytes: usize) -> usize {
        let deps = Builder::double_buffer(&self.weight_loads);
        let id = self.push(layer, program, CommandKind::LoadWeights { slice, bytes }, deps);
        self.weight_loads.push((id, Vec::new()));
        self.weight_loads.len() - 1
    }

    /// Buffer slot reuse: fill `k` waits for the readers of fill `k - 2`.
    fn double_buffer(fills: &[(usize, Vec<usize>)]) -> Vec<usize> {
        fills.len().checked_sub(2).map(|k| fills[k].1.clone()).unwrap_or_default()
    }
}

fn reads_dram(layer: usize, p: &GretaProgram) -> bool {
    layer == 0 && p.gather.operands().contains(&Operand::Src(INPUT_SLOT))
}

/// Lowers a plan over partitioned nodeflows into a command stream.
pub fn build_command_stream(plan: &ModelPlan, pnfs: &[Vec<PartitionedNodeflow>], cfg: &ArchConfig) -> Result<CommandStream> {
    cfg.validate()?;
    if pnfs.len() != plan.num_layers() {
        return Err(Error::shape(format!("{} partitioned layers for {} layers", pnfs.len(), plan.num_layers())));
    }
    let mut b = Builder { cfg, out: Vec::new(), loads: Vec::new(), weight_loads: Vec::new(), acc_fills: Vec::new(), last_update: None, last_compute: None };
    let half = cfg.nodeflow_bytes() / 2;
    for (l, (lp, layer_pnfs)) in plan.layers.iter().zip(pnfs).enumerate() {
        if layer_pnfs.len() != lp.programs.len() {
            return Err(Error::shape(format!("layer {l}: {} partitions for {} programs", layer_pnfs.len(), lp.programs.len())));
        }
        for (pi, (p, pnf)) in lp.programs.iter().zip(layer_pnfs).enumerate() {
            let f = slice_width(cfg, p.in_dim);
            let slices = p.in_dim.div_ceil(f).max(1);
            let dram = reads_dram(l, p);
            let r0 = match cfg.edge.r0 {
                R0Mode::Auto => p.reads_dest_features(),
                R0Mode::On => true,
                R0Mode::Off => false,
            };
            let upstream = b.last_update;
            let m = if cfg.opt.tiling { cfg.opt.tile_m } else { usize::MAX };
            let row_full = p.in_dim * cfg.elem_bytes;
            // Cached chunks stay resident for the whole program.
            let mut resident: HashMap<(usize, usize), usize> = HashMap::new();

            for j in 0..pnf.num_cols {
                let outs = pnf.output_range(j);
                let blocks: Vec<_> = pnf.column(j).collect();
                let groups: Vec<std::ops::Range<usize>> =
                    outs.clone().step_by(m.min(outs.len().max(1))).map(|lo| lo..(lo.saturating_add(m)).min(outs.end)).collect();
                let mut group_tail: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];

                for s in 0..slices {
                    let fs = f.min(p.in_dim - s * f);
                    let row_bytes = fs * cfg.elem_bytes;
                    let w_bytes = fs * p.out_dim * cfg.elem_bytes;
                    let streamed = w_bytes > cfg.tile_bank_bytes();
                    let needs_w = p.has_matmul() && !streamed;
                    // Without preloading, a column's first slice is fetched
                    // only once its edges are done.
                    let deferred = !cfg.opt.preload_weights && s == 0;
                    let mut w_cmd = if needs_w && !deferred { Some(b.load_weights(l, pi, s, w_bytes)) } else { None };
                    for (gi, g) in groups.iter().enumerate() {
                        let mut edge_cmds = Vec::new();
                        let acc_deps: Vec<usize> =
                            b.acc_fills.len().checked_sub(2).and_then(|k| b.acc_fills[k]).into_iter().collect();
                        for blk in &blocks {
                            let edges: Vec<(u32, u32)> =
                                blk.edges.iter().filter(|e| g.contains(&(e.v as usize))).map(|e| (e.u, e.v)).collect();
                            if edges.is_empty() {
                                continue;
                            }
                            let rows = pnf.input_range(blk.row).len();
                            if rows * row_bytes > half {
                                return Err(Error::Schedule(format!(
                                    "layer {l} program {} block ({}, {j}): {} bytes exceed the {half}-byte nodeflow buffer half",
                                    p.name,
                                    blk.row,
                                    rows * row_bytes
                                )));
                            }
                            let mut deps: Vec<usize> = upstream.into_iter().chain(acc_deps.iter().copied()).collect();
                            if dram {
                                let cached = cfg.opt.cache_features && rows * row_full <= half;
                                let key = (blk.row, s);
                                let load = match resident.get(&key) {
                                    Some(&k) if cached => k,
                                    _ => {
                                        let ld = Builder::double_buffer(&b.loads);
                                        let kind = CommandKind::LoadFeatures {
                                            chunk: blk.row,
                                            slice: s,
                                            rows,
                                            row_bytes,
                                            bulk: cfg.opt.cache_features,
                                        };
                                        let id = b.push(l, pi, kind, ld);
                                        b.loads.push((id, Vec::new()));
                                        let k = b.loads.len() - 1;
                                        if cached {
                                            resident.insert(key, k);
                                        }
                                        k
                                    }
                                };
                                deps.push(b.loads[load].0);
                                let kind = CommandKind::EdgeAccumulate { block: (blk.row, j), group: gi, slice: s, width: fs, r0, edges };
                                let id = b.push(l, pi, kind, deps);
                                b.loads[load].1.push(id);
                                edge_cmds.push(id);
                            } else {
                                let kind = CommandKind::EdgeAccumulate { block: (blk.row, j), group: gi, slice: s, width: fs, r0, edges };
                                edge_cmds.push(b.push(l, pi, kind, deps));
                            }
                        }
                        if needs_w && w_cmd.is_none() {
                            b.barrier(l, pi);
                            w_cmd = Some(b.load_weights(l, pi, s, w_bytes));
                        }
                        if p.has_matmul() {
                            let mut deps: Vec<usize> = edge_cmds.clone();
                            deps.extend(upstream);
                            if let Some(w) = w_cmd {
                                deps.push(b.weight_loads[w].0);
                            }
                            if !cfg.opt.pipeline_update {
                                deps.extend(b.last_update);
                            }
                            let kind = CommandKind::VertexAccumulate {
                                col: j,
                                group: gi,
                                slice: s,
                                width: fs,
                                out_dim: p.out_dim,
                                vertices: g.len(),
                                streamed,
                            };
                            let id = b.push(l, pi, kind, deps);
                            if let Some(w) = w_cmd {
                                b.weight_loads[w].1.push(id);
                            }
                            b.acc_fills.push(Some(id));
                            group_tail[gi] = vec![id];
                        } else {
                            b.acc_fills.push(None);
                            group_tail[gi].extend(edge_cmds);
                        }
                    }
                }
                for (gi, g) in groups.iter().enumerate() {
                    let mut deps = std::mem::take(&mut group_tail[gi]);
                    let streams_from = if cfg.opt.pipeline_update && p.has_matmul() { deps.pop() } else { None };
                    deps.extend(upstream);
                    let kind = CommandKind::VertexUpdate { col: j, group: gi, vertices: g.len(), width: p.out_dim };
                    let id = b.push(l, pi, kind, deps);
                    b.out[id].streams_from = streams_from;
                    b.last_update = Some(id);
                }
            }
        }
    }
    let cs = CommandStream { commands: b.out };
    cs.validate()?;
    Ok(cs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greta::{build_model_program, ModelKind};
    use crate::nodeflow::NfEdge;

    fn gcn(din: usize, dout: usize) -> ModelPlan {
        build_model_program(ModelKind::Gcn, &[din, dout], &[4]).unwrap()
    }

    fn nf(inputs: usize, outputs: usize, edges: &[(u32, u32)]) -> LayerNodeflow {
        let es = edges.iter().map(|&(u, v)| NfEdge { u, v, data: 0 }).collect();
        LayerNodeflow::new((0..inputs as u32).collect(), (0..outputs as u32).collect(), es).unwrap()
    }

    fn kinds(cs: &CommandStream) -> Vec<&'static str> {
        cs.commands
            .iter()
            .map(|c| match c.kind {
                CommandKind::LoadFeatures { .. } => "load",
                CommandKind::LoadWeights { .. } => "weights",
                CommandKind::EdgeAccumulate { .. } => "edge",
                CommandKind::VertexAccumulate { .. } => "vertex",
                CommandKind::VertexUpdate { .. } => "update",
                CommandKind::Barrier => "barrier",
            })
            .collect()
    }

    #[test]
    fn single_block_serial_stream() {
        let plan = gcn(8, 4);
        let mut cfg = ArchConfig::default();
        cfg.opt.pipeline_partitions = false;
        cfg.opt.pipeline_units = false;
        let pnfs = partition_plan(&plan, &[nf(2, 1, &[(0, 0), (1, 0)])], &cfg).unwrap();
        let cs = build_command_stream(&plan, &pnfs, &cfg).unwrap();
        assert_eq!(
            kinds(&cs),
            ["weights", "barrier", "load", "barrier", "edge", "barrier", "vertex", "barrier", "update", "barrier"]
        );
    }

    #[test]
    fn empty_blocks_are_skipped() {
        let plan = gcn(8, 4);
        let cfg = ArchConfig { partition: Some((1, 1)), ..Default::default() };
        // Block (1, 0) is empty: input 1 feeds only output 1.
        let pnfs = partition_plan(&plan, &[nf(2, 2, &[(0, 0), (0, 1), (1, 1)])], &cfg).unwrap();
        assert!(pnfs[0][0].block(1, 0).is_empty());
        let cs = build_command_stream(&plan, &pnfs, &cfg).unwrap();
        let blocks: Vec<_> = cs
            .commands
            .iter()
            .filter_map(|c| match c.kind {
                CommandKind::EdgeAccumulate { block, .. } => Some(block),
                _ => None,
            })
            .collect();
        assert_eq!(blocks, [(0, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn caching_loads_each_chunk_once() {
        let plan = gcn(8, 4);
        let mut cfg = ArchConfig { partition: Some((2, 1)), ..Default::default() };
        // 4 inputs in 2 chunks, 3 output columns, every block populated.
        let edges: Vec<(u32, u32)> = (0..3).flat_map(|v| (0..4).map(move |u| (u, v))).collect();
        let pnfs = partition_plan(&plan, &[nf(4, 3, &edges)], &cfg).unwrap();
        let on = build_command_stream(&plan, &pnfs, &cfg).unwrap();
        cfg.opt.cache_features = false;
        let off = build_command_stream(&plan, &pnfs, &cfg).unwrap();
        let row = 8 * 2;
        assert_eq!(on.feature_load_bytes(), (4 * row) as u64);
        assert_eq!(off.feature_load_bytes(), (3 * 4 * row) as u64);
    }

    #[test]
    fn oversized_block_is_reported() {
        let plan = gcn(64, 4);
        let mut cfg = ArchConfig { partition: Some((1000, 1)), ..Default::default() };
        cfg.buffers.nodeflow_kib = 1;
        let edges: Vec<(u32, u32)> = (0..100).map(|u| (u, 0)).collect();
        let pnfs = partition_plan(&plan, &[nf(100, 1, &edges)], &cfg).unwrap();
        let err = build_command_stream(&plan, &pnfs, &cfg).unwrap_err().to_string();
        assert!(err.contains("block (0, 0)"), "{err}");
    }

    #[test]
    fn pipelined_stream_has_no_barriers() {
        let plan = gcn(128, 64);
        let cfg = ArchConfig::default();
        let edges: Vec<(u32, u32)> = (0..20).map(|u| (u, u % 5)).collect();
        let pnfs = partition_plan(&plan, &[nf(20, 5, &edges)], &cfg).unwrap();
        let cs = build_command_stream(&plan, &pnfs, &cfg).unwrap();
        assert_eq!(cs.barriers(), 0);
        let mut no_preload = cfg.clone();
        no_preload.opt.preload_weights = false;
        // One barrier ahead of the column's first weight slice.
        assert_eq!(build_command_stream(&plan, &pnfs, &no_preload).unwrap().barriers(), 1);
    }
}
