//! Cycle-approximate performance model: architecture configuration, command
//! stream lowering, unit cost models and a list scheduler.

mod command;
mod config;
mod inference;
mod sim;
mod units;

pub use command::{
    build_command_stream, chunk_sizes, partition_plan, slice_width, Command, CommandKind, CommandStream, Phase, Unit,
};
pub use config::{
    ablation_step, apply_preset, breakdown_step, ArchConfig, ArrayKind, BlockMode, BufferConfig, DramConfig, EdgeConfig,
    R0Mode, Toggles, UnitAssign, VertexConfig, BREAKDOWN_STEPS, CONFIG_KEYS, PRESETS,
};
pub use inference::{run_timed, run_timed_inference, time_nodeflows};
pub use sim::{command_cost, simulate, CommandCost, TimingReport, UnitStats};
pub use units::{dram_cycles, edge_cycles, update_cycles, vertex_cost, VertexCost, EDGE_PIPELINE_DEPTH};
