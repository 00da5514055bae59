//! Experiment drivers behind the command-line tool: latency distributions,
//! parameter sweeps and preset comparisons over shared sampled workloads.

mod latency;
mod par;
mod spec;
mod sweep;

pub use latency::{
    latency_distribution, latency_of, neighborhood_size, percentile, sample_targets, target_nodeflows, LatencySummary,
    VertexRecord,
};
pub use par::{map_collect, map_collect_seq};
pub use spec::{DatasetSpec, ExperimentSpec};
pub use sweep::{
    ablation, breakdown, check_axes, compare_presets, prior_work, sweep, write_presets_csv, write_sweep_csv, Axis, PresetRow,
    SweepRow, Workload, ABLATION_STEPS, PRESET_CSV_HEADER,
};
