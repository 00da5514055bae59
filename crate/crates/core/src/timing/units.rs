//! Per-command cost models of the individual hardware units.

use std::collections::VecDeque;

use super::config::{ArchConfig, BlockMode, UnitAssign};

/// Prefetch stages plus reduce stages without the destination read.
pub const EDGE_PIPELINE_DEPTH: u64 = 7;

/// DRAM transfer of `bytes` striped over all channels, with `random`
/// accesses each paying the row penalty.
pub fn dram_cycles(cfg: &ArchConfig, bytes: usize, random: usize) -> u64 {
    let d = &cfg.dram;
    let c = d.channels as f64;
    let stream = (bytes as f64 / (c * d.bytes_per_cycle)).ceil() as u64;
    d.latency + stream + d.random_penalty * random.div_ceil(d.channels) as u64
}

/// Non-contiguous accesses of a feature load: every row of an on-demand
/// load, or every row narrower than a burst.
pub fn feature_random_accesses(cfg: &ArchConfig, rows: usize, row_bytes: usize, bulk: bool) -> usize {
    if !bulk || row_bytes < cfg.dram.burst_bytes {
        rows
    } else {
        0
    }
}

pub fn feature_load_cycles(cfg: &ArchConfig, rows: usize, row_bytes: usize, bulk: bool) -> u64 {
    dram_cycles(cfg, rows * row_bytes, feature_random_accesses(cfg, rows, row_bytes, bulk))
}

/// Weight slice into the tile buffer, from the global buffer or off chip.
pub fn weight_load_cycles(cfg: &ArchConfig, bytes: usize) -> u64 {
    let bw = cfg.effective_weight_bw();
    let base = if cfg.vertex.weights_on_chip { 1 } else { cfg.dram.latency };
    base + bytes.div_ceil(bw) as u64
}

/// Cycle-level model of the prefetch lanes, crossbar and reduce lanes for
/// one edge command. Lane `u mod N` fetches, port `v mod M` reduces.
pub fn edge_cycles(cfg: &ArchConfig, edges: &[(u32, u32)], width: usize, r0: bool) -> u64 {
    let depth = EDGE_PIPELINE_DEPTH + u64::from(r0);
    if edges.is_empty() {
        return depth;
    }
    let e = &cfg.edge;
    let (n, m) = (e.prefetch_lanes, e.reduce_lanes);
    let banks = cfg.buffers.nodeflow_banks;
    let transfer = width.div_ceil(e.crossbar_width) as u64;
    let read = e.read_cap.map_or(1, |cap| (width * cfg.elem_bytes).div_ceil(cap) as u64);

    let mut queues: Vec<VecDeque<(usize, usize)>> = vec![VecDeque::new(); n];
    for &(u, v) in edges {
        queues[u as usize % n].push_back((v as usize % m, u as usize % banks));
    }
    let mut lane_ready = vec![0u64; n];
    let mut port_free = vec![0u64; m];
    let mut rr = vec![0usize; m];
    let mut bank_busy = vec![false; banks];
    let mut remaining = edges.len();
    let (mut t, mut last) = (0u64, 0u64);
    while remaining > 0 {
        bank_busy.iter_mut().for_each(|b| *b = false);
        let mut blocked_on_bank = false;
        for r in 0..m {
            if port_free[r] > t {
                continue;
            }
            for k in 0..n {
                let lane = (rr[r] + k) % n;
                let Some(&(port, bank)) = queues[lane].front() else { continue };
                if port != r || lane_ready[lane] > t {
                    continue;
                }
                // Split SRAMs give every lane private banks.
                if !cfg.opt.split_sram {
                    if bank_busy[bank] {
                        blocked_on_bank = true;
                        continue;
                    }
                    bank_busy[bank] = true;
                }
                queues[lane].pop_front();
                remaining -= 1;
                lane_ready[lane] = t + read;
                port_free[r] = t + read.max(1) - 1 + transfer;
                last = last.max(port_free[r]);
                rr[r] = (lane + 1) % n;
                break;
            }
        }
        if remaining == 0 {
            break;
        }
        let next = (0..n)
            .filter_map(|l| queues[l].front().map(|&(p, _)| lane_ready[l].max(port_free[p])))
            .min()
            .unwrap_or(t + 1);
        t = if blocked_on_bank { t + 1 } else { next.max(t + 1) };
    }
    last + depth
}

/// Block mode in effect: parallel needs at least two blocks.
fn mode(cfg: &ArchConfig) -> BlockMode {
    if cfg.vertex.blocks < 2 {
        BlockMode::Cooperative
    } else {
        cfg.vertex.block_mode
    }
}

/// Cycles per tile for `k` vertices on one unit.
fn tile_cycles(cfg: &ArchConfig, k: usize) -> usize {
    match mode(cfg) {
        BlockMode::Cooperative => k,
        BlockMode::Parallel => 2 * k.div_ceil(2),
        // Pairs run in parallel, a leftover vertex cooperatively.
        BlockMode::Auto => k,
    }
}

/// Tile fetches needed for `k` vertices sharing one unit.
fn tile_fetches(cfg: &ArchConfig, k: usize) -> usize {
    if k == 0 {
        0
    } else if cfg.opt.tiling {
        1
    } else {
        match mode(cfg) {
            BlockMode::Cooperative => k,
            // The two blocks share broadcast weights.
            BlockMode::Parallel | BlockMode::Auto => k.div_ceil(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexCost {
    pub cycles: u64,
    pub weight_bytes: u64,
}

/// One weight slice of `width x out_dim` applied to `vertices` outputs.
pub fn vertex_cost(cfg: &ArchConfig, width: usize, out_dim: usize, vertices: usize, streamed: bool) -> VertexCost {
    let v = &cfg.vertex;
    let tiles = width.div_ceil(v.rows) * out_dim.div_ceil(v.cols);
    let tile_bytes = v.rows * v.cols * cfg.elem_bytes;
    let (compute, fetches) = match v.assign {
        UnitAssign::Balanced => ((tiles * tile_cycles(cfg, vertices)).div_ceil(v.units), tiles * tile_fetches(cfg, vertices)),
        UnitAssign::PerVertex => {
            let per = |u: usize| vertices / v.units + usize::from(u < vertices % v.units);
            let compute = (0..v.units).map(|u| tiles * tile_cycles(cfg, per(u))).max().unwrap_or(0);
            (compute, (0..v.units).map(|u| tiles * tile_fetches(cfg, per(u))).sum())
        }
    };
    let bytes = fetches * tile_bytes;
    let bw = if streamed { cfg.effective_tile_bw().min(cfg.effective_weight_bw()) } else { cfg.effective_tile_bw() };
    // The first tile is already latched when the fill latency starts.
    let feed = bytes.saturating_sub(tile_bytes).div_ceil(bw);
    VertexCost { cycles: v.latency + compute.max(feed).max(1) as u64 - 1, weight_bytes: bytes as u64 }
}

pub fn update_cycles(cfg: &ArchConfig, vertices: usize, width: usize) -> u64 {
    (vertices * width).div_ceil(cfg.vertex.update_width) as u64 + 2
}
