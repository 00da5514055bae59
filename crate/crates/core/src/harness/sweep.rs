use std::cmp::Ordering;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use super::latency::{latency_of, LatencySummary};
use super::par::map_collect;
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::greta::{build_model_program, ModelKind, ModelPlan};
use crate::nodeflow::LayerNodeflow;
use crate::timing::{ablation_step, apply_preset, breakdown_step, time_nodeflows, ArchConfig, Phase, BREAKDOWN_STEPS};

/// Sampled nodeflows shared by every point of an experiment.
#[derive(Debug, Clone)]
pub struct Workload {
    pub model: ModelKind,
    pub dims: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub targets: Vec<VertexId>,
    pub nfss: Vec<Vec<LayerNodeflow>>,
}

impl Workload {
    pub fn plan(&self) -> Result<ModelPlan> {
        build_model_program(self.model, &self.dims, &self.sample_sizes)
    }

    pub fn latency(&self, cfg: &ArchConfig) -> Result<LatencySummary> {
        latency_of(&self.plan()?, &self.targets, &self.nfss, cfg)
    }
}

/// One swept parameter: an architecture key or `model.hidden` / `model.output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl FromStr for Axis {
    type Err = Error;

    /// `key=v1,v2,...`; `a..b` expands to every integer in between.
    fn from_str(s: &str) -> Result<Self> {
        let (key, vals) = s.split_once('=').ok_or_else(|| Error::param(format!("sweep `{s}` is not key=v1,v2,...")))?;
        let mut values = Vec::new();
        for v in vals.split(',').map(str::trim).filter(|v| !v.is_empty()) {
            match v.split_once("..") {
                Some((a, b)) => {
                    let (a, b): (i64, i64) = (
                        a.parse().map_err(|_| Error::param(format!("bad range `{v}`")))?,
                        b.parse().map_err(|_| Error::param(format!("bad range `{v}`")))?,
                    );
                    values.extend((a..=b).map(|x| x.to_string()));
                }
                None => values.push(v.to_string()),
            }
        }
        if values.is_empty() {
            return Err(Error::param(format!("sweep axis `{key}` has no values")));
        }
        Ok(Axis { key: key.trim().to_string(), values })
    }
}

fn apply_axis(key: &str, value: &str, cfg: &mut ArchConfig, dims: &mut [usize]) -> Result<()> {
    let dim = |v: &str| v.parse::<usize>().ok().filter(|&d| d > 0).ok_or_else(|| Error::param(format!("{key}: bad dimension `{v}`")));
    let n = dims.len();
    match key {
        "model.hidden" if n > 2 => dims[1..n - 1].fill(dim(value)?),
        "model.output" => *dims.last_mut().expect("dims") = dim(value)?,
        k if k.starts_with("model.") => return Err(Error::unknown("sweep axis", key)),
        k => cfg.set(k, value)?,
    }
    Ok(())
}

/// Rejects an axis before any simulation runs.
pub fn check_axes(axes: &[Axis], base: &ArchConfig, dims: &[usize]) -> Result<()> {
    for a in axes {
        for v in &a.values {
            apply_axis(&a.key, v, &mut base.clone(), &mut dims.to_vec())
                .map_err(|e| Error::param(format!("invalid sweep axis `{}`: {e}", a.key)))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub values: Vec<String>,
    pub p99_us: f64,
    pub median_us: f64,
    /// Mean per-inference cycles of each phase.
    pub phases: Vec<(String, f64)>,
    /// Share of phase cycles spent in vertex-accumulate.
    pub vertex_fraction: f64,
}

fn cmp_value(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

/// Cartesian product of the axes, one simulation per point and target.
pub fn sweep(work: &Workload, base: &ArchConfig, axes: &[Axis]) -> Result<Vec<SweepRow>> {
    check_axes(axes, base, &work.dims)?;
    let mut points: Vec<Vec<String>> = vec![vec![]];
    for a in axes {
        points = points.into_iter().flat_map(|p| a.values.iter().map(move |v| [p.clone(), vec![v.clone()]].concat())).collect();
    }
    let mut rows = Vec::with_capacity(points.len());
    for point in points {
        let (mut cfg, mut dims) = (base.clone(), work.dims.clone());
        for (a, v) in axes.iter().zip(&point) {
            apply_axis(&a.key, v, &mut cfg, &mut dims)?;
        }
        let plan = build_model_program(work.model, &dims, &work.sample_sizes)?;
        let reports = map_collect(&work.nfss, |nfs| time_nodeflows(&plan, nfs, &cfg)).into_iter().collect::<Result<Vec<_>>>()?;
        let n = reports.len().max(1) as f64;
        let phases: Vec<(String, f64)> =
            Phase::ALL.iter().map(|&p| (p.name().to_string(), reports.iter().map(|r| r.phase(p) as f64).sum::<f64>() / n)).collect();
        let total: f64 = phases.iter().map(|p| p.1).sum();
        let vertex = phases.iter().find(|p| p.0 == Phase::VertexAccumulate.name()).map_or(0.0, |p| p.1);
        let summary = latency_of(&plan, &work.targets, &work.nfss, &cfg)?;
        rows.push(SweepRow {
            values: point,
            p99_us: summary.p99_us,
            median_us: summary.median_us,
            phases,
            vertex_fraction: if total > 0.0 { vertex / total } else { 0.0 },
        });
    }
    rows.sort_by(|a, b| a.values.iter().zip(&b.values).map(|(x, y)| cmp_value(x, y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal));
    Ok(rows)
}

pub fn write_sweep_csv(axes: &[Axis], rows: &[SweepRow], w: &mut impl Write) -> Result<()> {
    let mut header: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    header.extend(["p99_us", "median_us"].map(String::from));
    header.extend(Phase::ALL.iter().map(|p| format!("{}_cycles", p.name())));
    header.push("vertex_fraction".into());
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let mut cells = r.values.clone();
        cells.push(format!("{:.4}", r.p99_us));
        cells.push(format!("{:.4}", r.median_us));
        cells.extend(r.phases.iter().map(|p| format!("{:.1}", p.1)));
        cells.push(format!("{:.4}", r.vertex_fraction));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetRow {
    pub group: String,
    pub name: String,
    pub p99_us: f64,
    /// Latency of the group's reference divided by this row's latency.
    pub speedup: f64,
    /// Speedup over the previous row of a cumulative group.
    pub step_speedup: f64,
}

fn cumulative(group: &str, work: &Workload, steps: Vec<(String, ArchConfig)>) -> Result<Vec<PresetRow>> {
    let mut rows: Vec<PresetRow> = Vec::new();
    for (name, cfg) in steps {
        let p99 = work.latency(&cfg)?.p99_us;
        let first = rows.first().map_or(p99, |r| r.p99_us);
        let prev = rows.last().map_or(p99, |r| r.p99_us);
        rows.push(PresetRow { group: group.into(), name, p99_us: p99, speedup: first / p99, step_speedup: prev / p99 });
    }
    Ok(rows)
}

/// Baseline through each enabled feature, cumulatively.
pub fn breakdown(work: &Workload) -> Result<Vec<PresetRow>> {
    let steps = BREAKDOWN_STEPS.iter().enumerate().map(|(i, n)| Ok((n.to_string(), breakdown_step(i)?))).collect::<Result<_>>()?;
    cumulative("breakdown", work, steps)
}

pub const ABLATION_STEPS: [&str; 4] = ["unoptimized", "feature-caching", "partition-pipelining", "weight-preload"];

/// The schedule optimizations enabled one after another.
pub fn ablation(work: &Workload) -> Result<Vec<PresetRow>> {
    let steps = ABLATION_STEPS.iter().enumerate().map(|(i, n)| Ok((n.to_string(), ablation_step(i)?))).collect::<Result<_>>()?;
    cumulative("ablation", work, steps)
}

/// Every preset relative to the baseline, recomputed in this call.
pub fn prior_work(work: &Workload) -> Result<Vec<PresetRow>> {
    let base = work.latency(&apply_preset("baseline-emulation")?)?.p99_us;
    ["baseline-emulation", "graphicionado-like", "hygcn-like", "tpu-plus", "grip-default"]
        .iter()
        .map(|&n| {
            let p99 = work.latency(&apply_preset(n)?)?.p99_us;
            Ok(PresetRow { group: "prior-work".into(), name: n.into(), p99_us: p99, speedup: base / p99, step_speedup: base / p99 })
        })
        .collect()
}

/// Breakdown, ablation and prior-work rows in one table.
pub fn compare_presets(work: &Workload) -> Result<Vec<PresetRow>> {
    Ok([breakdown(work)?, ablation(work)?, prior_work(work)?].concat())
}

pub const PRESET_CSV_HEADER: &str = "group,name,p99_us,speedup,step_speedup";

pub fn write_presets_csv(rows: &[PresetRow], w: &mut impl Write) -> Result<()> {
    writeln!(w, "{PRESET_CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{:.4},{:.4},{:.4}", r.group, r.name, r.p99_us, r.speedup, r.step_speedup)?;
    }
    Ok(())
}
