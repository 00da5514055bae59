use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DramConfig {
    pub channels: usize,
    pub bytes_per_cycle: f64,
    pub burst_bytes: usize,
    pub latency: u64,
    pub random_penalty: u64,
}

/// Whether the reduce pipeline runs its extra destination-read stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum R0Mode {
    /// Enabled for programs that read destination features.
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeConfig {
    pub prefetch_lanes: usize,
    pub reduce_lanes: usize,
    /// Elements a crossbar port moves per cycle.
    pub crossbar_width: usize,
    pub r0: R0Mode,
    /// Per-lane read limit in bytes/cycle; `None` is one feature per cycle.
    pub read_cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockMode {
    Auto,
    Cooperative,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrayKind {
    WeightStationary,
    Systolic,
}

/// How several matrix units share one vertex-accumulate command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitAssign {
    /// Each unit owns whole vertices and fetches its own weights.
    PerVertex,
    /// Tile-vertex jobs are spread evenly; each tile is fetched once.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexConfig {
    pub rows: usize,
    pub cols: usize,
    pub units: usize,
    /// Independently steerable blocks per unit; two allow parallel mode.
    pub blocks: usize,
    pub assign: UnitAssign,
    pub block_mode: BlockMode,
    pub array: ArrayKind,
    /// Fill latency of the weight-stationary array.
    pub latency: u64,
    pub weights_on_chip: bool,
    /// Global weight buffer (or off-chip path) to tile buffer, bytes/cycle.
    pub weight_bw: usize,
    /// Tile buffer to matrix unit, bytes/cycle.
    pub tile_bw: usize,
    /// Elements the update unit writes per cycle.
    pub update_width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BufferConfig {
    pub nodeflow_kib: usize,
    pub nodeflow_banks: usize,
    pub tile_kib: usize,
    pub tile_banks: usize,
    pub weight_kib: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Toggles {
    pub split_sram: bool,
    /// Overlap feature loads with execution.
    pub pipeline_partitions: bool,
    /// Overlap the edge, weight and vertex units with one another.
    pub pipeline_units: bool,
    pub cache_features: bool,
    pub preload_weights: bool,
    pub pipeline_update: bool,
    pub tiling: bool,
    pub tile_f: usize,
    pub tile_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchConfig {
    pub clock_hz: f64,
    pub elem_bytes: usize,
    pub dram: DramConfig,
    pub edge: EdgeConfig,
    pub vertex: VertexConfig,
    pub buffers: BufferConfig,
    pub opt: Toggles,
    /// Explicit `(Nc, Mc)`; `None` derives chunk sizes from buffer capacity.
    pub partition: Option<(usize, usize)>,
}

pub const PRESETS: [&str; 5] = ["grip-default", "baseline-emulation", "hygcn-like", "tpu-plus", "graphicionado-like"];

/// Cumulative feature steps from the baseline to the full design.
pub const BREAKDOWN_STEPS: [&str; 5] = ["baseline-emulation", "split-sram", "edge-unit", "vertex-unit", "update-pipelining"];

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            clock_hz: 1e9,
            elem_bytes: 2,
            dram: DramConfig { channels: 4, bytes_per_cycle: 19.2, burst_bytes: 64, latency: 40, random_penalty: 20 },
            edge: EdgeConfig { prefetch_lanes: 4, reduce_lanes: 4, crossbar_width: 64, r0: R0Mode::Auto, read_cap: None },
            vertex: VertexConfig {
                rows: 16,
                cols: 32,
                units: 1,
                blocks: 2,
                assign: UnitAssign::Balanced,
                block_mode: BlockMode::Auto,
                array: ArrayKind::WeightStationary,
                latency: 6,
                weights_on_chip: true,
                weight_bw: 128,
                tile_bw: 128,
                update_width: 32,
            },
            buffers: BufferConfig { nodeflow_kib: 80, nodeflow_banks: 4, tile_kib: 128, tile_banks: 2, weight_kib: 2048 },
            opt: Toggles {
                split_sram: true,
                pipeline_partitions: true,
                pipeline_units: true,
                cache_features: true,
                preload_weights: true,
                pipeline_update: true,
                tiling: true,
                tile_f: 64,
                tile_m: 12,
            },
            partition: None,
        }
    }
}

/// Named configurations.
pub fn apply_preset(name: &str) -> Result<ArchConfig> {
    let mut c = ArchConfig::default();
    match name {
        "grip-default" => {}
        "baseline-emulation" => return breakdown_step(0),
        "hygcn-like" => {
            c.edge.prefetch_lanes = 1;
            c.edge.reduce_lanes = 1;
            c.edge.crossbar_width = 256;
            c.opt.tiling = false;
        }
        "tpu-plus" => {
            c.vertex.array = ArrayKind::Systolic;
            c.vertex.latency = (c.vertex.rows + c.vertex.cols) as u64;
            c.vertex.weights_on_chip = false;
            c.vertex.weight_bw = 32;
        }
        "graphicionado-like" => {
            c.opt.tiling = false;
            c.vertex.units = 2;
            c.vertex.cols = 16;
            c.vertex.blocks = 1;
            c.vertex.assign = UnitAssign::PerVertex;
        }
        other => return Err(Error::unknown("preset", other)),
    }
    Ok(c)
}

/// Configuration after enabling the first `step` features on top of the
/// baseline; the last step equals `grip-default`.
pub fn breakdown_step(step: usize) -> Result<ArchConfig> {
    if step >= BREAKDOWN_STEPS.len() {
        return Err(Error::param(format!("breakdown step {step} out of range")));
    }
    let mut c = ArchConfig::default();
    if step < 1 {
        c.opt.split_sram = false;
        c.edge.read_cap = Some(16);
    }
    if step < 2 {
        c.opt.cache_features = false;
        c.edge.prefetch_lanes = 14;
        c.edge.reduce_lanes = 14;
        c.edge.crossbar_width = 16;
        c.opt.pipeline_partitions = false;
        c.opt.pipeline_units = false;
    }
    if step < 3 {
        c.vertex.units = 14;
        c.vertex.rows = 8;
        c.vertex.cols = 2;
        c.vertex.blocks = 1;
        c.vertex.assign = UnitAssign::Balanced;
    }
    if step < 4 {
        c.opt.pipeline_update = false;
    }
    Ok(c)
}

/// All ablation steps: unoptimized, then caching, partition pipelining and
/// weight preloading enabled cumulatively.
pub fn ablation_step(step: usize) -> Result<ArchConfig> {
    if step > 3 {
        return Err(Error::param(format!("ablation step {step} out of range")));
    }
    let mut c = ArchConfig::default();
    c.opt.cache_features = step >= 1;
    c.opt.pipeline_partitions = step >= 2;
    c.opt.preload_weights = step >= 3;
    Ok(c)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::param(format!("{key}: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::param(format!("{key}: expected a boolean, got `{v}`"))),
    }
}

fn positive(key: &str, v: &str) -> Result<usize> {
    let n: usize = parse(key, v)?;
    if n == 0 {
        return Err(Error::param(format!("{key} must be positive")));
    }
    Ok(n)
}

/// Every settable key, in file order.
pub const CONFIG_KEYS: [&str; 39] = [
    "clock_hz",
    "elem_bytes",
    "dram.channels",
    "dram.bytes_per_cycle",
    "dram.burst_bytes",
    "dram.latency",
    "dram.random_penalty",
    "edge.prefetch_lanes",
    "edge.reduce_lanes",
    "edge.crossbar_width",
    "edge.r0",
    "edge.read_cap",
    "vertex.rows",
    "vertex.cols",
    "vertex.units",
    "vertex.blocks",
    "vertex.assign",
    "vertex.block_mode",
    "vertex.array",
    "vertex.latency",
    "vertex.weights_on_chip",
    "vertex.weight_bw",
    "vertex.tile_bw",
    "vertex.update_width",
    "buffers.nodeflow_kib",
    "buffers.nodeflow_banks",
    "buffers.tile_kib",
    "buffers.tile_banks",
    "buffers.weight_kib",
    "opt.split_sram",
    "opt.pipeline_partitions",
    "opt.pipeline_units",
    "opt.cache_features",
    "opt.preload_weights",
    "opt.pipeline_update",
    "opt.tiling",
    "opt.tile_f",
    "opt.tile_m",
    "partition",
];

impl ArchConfig {
    /// Sets one field by key. `channels` is shorthand that also matches the
    /// prefetch lanes to the channel count.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "clock_hz" => {
                let hz: f64 = parse(key, v)?;
                if !(hz > 0.0 && hz.is_finite()) {
                    return Err(Error::param("clock_hz must be positive"));
                }
                self.clock_hz = hz;
            }
            "elem_bytes" => self.elem_bytes = positive(key, v)?,
            "channels" => {
                self.dram.channels = positive(key, v)?;
                self.edge.prefetch_lanes = self.dram.channels;
            }
            "dram.channels" => self.dram.channels = positive(key, v)?,
            "dram.bytes_per_cycle" => {
                let b: f64 = parse(key, v)?;
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::param("dram.bytes_per_cycle must be positive"));
                }
                self.dram.bytes_per_cycle = b;
            }
            "dram.burst_bytes" => self.dram.burst_bytes = positive(key, v)?,
            "dram.latency" => self.dram.latency = parse(key, v)?,
            "dram.random_penalty" => self.dram.random_penalty = parse(key, v)?,
            "edge.prefetch_lanes" => self.edge.prefetch_lanes = positive(key, v)?,
            "edge.reduce_lanes" => self.edge.reduce_lanes = positive(key, v)?,
            "edge.crossbar_width" => self.edge.crossbar_width = positive(key, v)?,
            "edge.r0" => {
                self.edge.r0 = match v {
                    "auto" => R0Mode::Auto,
                    "on" | "true" => R0Mode::On,
                    "off" | "false" => R0Mode::Off,
                    _ => return Err(Error::param(format!("edge.r0: expected auto|on|off, got `{v}`"))),
                }
            }
            "edge.read_cap" => {
                let n: usize = parse(key, v)?;
                self.edge.read_cap = (n > 0).then_some(n);
            }
            "vertex.rows" => self.vertex.rows = positive(key, v)?,
            "vertex.cols" => self.vertex.cols = positive(key, v)?,
            "vertex.units" => self.vertex.units = positive(key, v)?,
            "vertex.blocks" => self.vertex.blocks = positive(key, v)?,
            "vertex.assign" => {
                self.vertex.assign = match v {
                    "per-vertex" => UnitAssign::PerVertex,
                    "balanced" => UnitAssign::Balanced,
                    _ => return Err(Error::param(format!("vertex.assign: expected per-vertex|balanced, got `{v}`"))),
                }
            }
            "vertex.block_mode" => {
                self.vertex.block_mode = match v {
                    "auto" => BlockMode::Auto,
                    "cooperative" => BlockMode::Cooperative,
                    "parallel" => BlockMode::Parallel,
                    _ => return Err(Error::param(format!("vertex.block_mode: expected auto|cooperative|parallel, got `{v}`"))),
                }
            }
            "vertex.array" => {
                self.vertex.array = match v {
                    "weight-stationary" => ArrayKind::WeightStationary,
                    "systolic" => ArrayKind::Systolic,
                    _ => return Err(Error::param(format!("vertex.array: expected weight-stationary|systolic, got `{v}`"))),
                }
            }
            "vertex.latency" => self.vertex.latency = positive(key, v)? as u64,
            "vertex.weights_on_chip" => self.vertex.weights_on_chip = parse_bool(key, v)?,
            "vertex.weight_bw" => self.vertex.weight_bw = positive(key, v)?,
            "vertex.tile_bw" => self.vertex.tile_bw = positive(key, v)?,
            "vertex.update_width" => self.vertex.update_width = positive(key, v)?,
            "buffers.nodeflow_kib" => self.buffers.nodeflow_kib = positive(key, v)?,
            "buffers.nodeflow_banks" => self.buffers.nodeflow_banks = positive(key, v)?,
            "buffers.tile_kib" => self.buffers.tile_kib = positive(key, v)?,
            "buffers.tile_banks" => self.buffers.tile_banks = positive(key, v)?,
            "buffers.weight_kib" => self.buffers.weight_kib = positive(key, v)?,
            "opt.split_sram" => self.opt.split_sram = parse_bool(key, v)?,
            "opt.pipeline_partitions" => self.opt.pipeline_partitions = parse_bool(key, v)?,
            "opt.pipeline_units" => self.opt.pipeline_units = parse_bool(key, v)?,
            "opt.cache_features" => self.opt.cache_features = parse_bool(key, v)?,
            "opt.preload_weights" => self.opt.preload_weights = parse_bool(key, v)?,
            "opt.pipeline_update" => self.opt.pipeline_update = parse_bool(key, v)?,
            "opt.tiling" => self.opt.tiling = parse_bool(key, v)?,
            "opt.tile_f" => self.opt.tile_f = positive(key, v)?,
            "opt.tile_m" => self.opt.tile_m = positive(key, v)?,
            "partition" => {
                self.partition = if v == "auto" {
                    None
                } else {
                    let (a, b) = v
                        .split_once(',')
                        .ok_or_else(|| Error::param(format!("partition: expected `auto` or `Nc,Mc`, got `{v}`")))?;
                    Some((positive(key, a.trim())?, positive(key, b.trim())?))
                }
            }
            other => return Err(Error::unknown("config key", other)),
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o.split_once('=').ok_or_else(|| Error::param(format!("override `{o}` is not key=value")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Reads `key = value` lines over the defaults. Blank lines and `#`
    /// comments are skipped; a line `preset = name` restarts from that preset.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = ArchConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key = value, got `{line}`") })?;
            let k = k.trim();
            let r = if k == "preset" { apply_preset(v.trim()).map(|c| cfg = c) } else { cfg.set(k, v) };
            r.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Current value of `key` in the syntax `set` accepts.
    pub fn get(&self, key: &str) -> Result<String> {
        let b = |x: bool| x.to_string();
        Ok(match key {
            "clock_hz" => self.clock_hz.to_string(),
            "elem_bytes" => self.elem_bytes.to_string(),
            "channels" | "dram.channels" => self.dram.channels.to_string(),
            "dram.bytes_per_cycle" => self.dram.bytes_per_cycle.to_string(),
            "dram.burst_bytes" => self.dram.burst_bytes.to_string(),
            "dram.latency" => self.dram.latency.to_string(),
            "dram.random_penalty" => self.dram.random_penalty.to_string(),
            "edge.prefetch_lanes" => self.edge.prefetch_lanes.to_string(),
            "edge.reduce_lanes" => self.edge.reduce_lanes.to_string(),
            "edge.crossbar_width" => self.edge.crossbar_width.to_string(),
            "edge.r0" => kebab(&self.edge.r0),
            "edge.read_cap" => self.edge.read_cap.unwrap_or(0).to_string(),
            "vertex.rows" => self.vertex.rows.to_string(),
            "vertex.cols" => self.vertex.cols.to_string(),
            "vertex.units" => self.vertex.units.to_string(),
            "vertex.blocks" => self.vertex.blocks.to_string(),
            "vertex.assign" => kebab(&self.vertex.assign),
            "vertex.block_mode" => kebab(&self.vertex.block_mode),
            "vertex.array" => kebab(&self.vertex.array),
            "vertex.latency" => self.vertex.latency.to_string(),
            "vertex.weights_on_chip" => b(self.vertex.weights_on_chip),
            "vertex.weight_bw" => self.vertex.weight_bw.to_string(),
            "vertex.tile_bw" => self.vertex.tile_bw.to_string(),
            "vertex.update_width" => self.vertex.update_width.to_string(),
            "buffers.nodeflow_kib" => self.buffers.nodeflow_kib.to_string(),
            "buffers.nodeflow_banks" => self.buffers.nodeflow_banks.to_string(),
            "buffers.tile_kib" => self.buffers.tile_kib.to_string(),
            "buffers.tile_banks" => self.buffers.tile_banks.to_string(),
            "buffers.weight_kib" => self.buffers.weight_kib.to_string(),
            "opt.split_sram" => b(self.opt.split_sram),
            "opt.pipeline_partitions" => b(self.opt.pipeline_partitions),
            "opt.pipeline_units" => b(self.opt.pipeline_units),
            "opt.cache_features" => b(self.opt.cache_features),
            "opt.preload_weights" => b(self.opt.preload_weights),
            "opt.pipeline_update" => b(self.opt.pipeline_update),
            "opt.tiling" => b(self.opt.tiling),
            "opt.tile_f" => self.opt.tile_f.to_string(),
            "opt.tile_m" => self.opt.tile_m.to_string(),
            "partition" => match self.partition {
                None => "auto".into(),
                Some((a, b)) => format!("{a},{b}"),
            },
            other => return Err(Error::unknown("config key", other)),
        })
    }

    /// Serializes every key; `parse_str` of the result reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in CONFIG_KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k).expect("listed key"));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.opt.tile_f == 0 || self.opt.tile_m == 0 {
            return Err(Error::param("tiling f and m must be >= 1"));
        }
        let sizes = [
            self.elem_bytes,
            self.dram.channels,
            self.dram.burst_bytes,
            self.edge.prefetch_lanes,
            self.edge.reduce_lanes,
            self.edge.crossbar_width,
            self.vertex.rows,
            self.vertex.cols,
            self.vertex.units,
            self.vertex.blocks,
            self.vertex.weight_bw,
            self.vertex.tile_bw,
            self.vertex.update_width,
            self.buffers.nodeflow_kib,
            self.buffers.nodeflow_banks,
            self.buffers.tile_kib,
            self.buffers.tile_banks,
            self.buffers.weight_kib,
        ];
        if sizes.contains(&0) || self.dram.bytes_per_cycle <= 0.0 || self.clock_hz <= 0.0 {
            return Err(Error::param("all sizes must be positive"));
        }
        Ok(())
    }

    pub fn nodeflow_bytes(&self) -> usize {
        self.buffers.nodeflow_kib * 1024
    }

    /// Capacity of one tile-buffer bank.
    pub fn tile_bank_bytes(&self) -> usize {
        self.buffers.tile_kib * 1024 / self.buffers.tile_banks
    }

    /// Peak multiply-accumulates per cycle over all matrix units.
    pub fn macs_per_cycle(&self) -> usize {
        self.vertex.rows * self.vertex.cols * self.vertex.units
    }

    /// Bytes/cycle into the tile buffer after SRAM sharing.
    pub fn effective_weight_bw(&self) -> usize {
        if self.opt.split_sram || !self.vertex.weights_on_chip {
            self.vertex.weight_bw
        } else {
            (self.vertex.weight_bw / 2).max(1)
        }
    }

    pub fn effective_tile_bw(&self) -> usize {
        if self.opt.split_sram {
            self.vertex.tile_bw
        } else {
            (self.vertex.tile_bw / 2).max(1)
        }
    }
}

fn kebab<T: Serialize>(x: &T) -> String {
    serde_json::to_value(x).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}
