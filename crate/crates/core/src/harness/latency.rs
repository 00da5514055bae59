use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::par::map_collect;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::greta::ModelPlan;
use crate::nodeflow::{build_nodeflow, LayerNodeflow};
use crate::timing::{time_nodeflows, ArchConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexRecord {
    pub target: VertexId,
    /// Distinct vertices the sampled nodeflow touches.
    pub neighborhood: usize,
    pub cycles: u64,
    pub latency_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencySummary {
    pub min_us: f64,
    pub median_us: f64,
    pub p99_us: f64,
    pub records: Vec<VertexRecord>,
}

/// Nearest-rank percentile of a sorted slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

impl LatencySummary {
    pub fn from_records(records: Vec<VertexRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::param("latency summary needs at least one sample"));
        }
        let mut lat: Vec<f64> = records.iter().map(|r| r.latency_us).collect();
        lat.sort_by(f64::total_cmp);
        Ok(LatencySummary { min_us: lat[0], median_us: percentile(&lat, 0.5), p99_us: percentile(&lat, 0.99), records })
    }

    pub const CSV_HEADER: &'static str = "target,neighborhood,cycles,latency_us";

    /// Per-vertex rows followed by `#`-prefixed aggregate lines.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            writeln!(w, "{},{},{},{:.4}", r.target, r.neighborhood, r.cycles, r.latency_us)?;
        }
        writeln!(w, "# min_us={:.4} median_us={:.4} p99_us={:.4}", self.min_us, self.median_us, self.p99_us)?;
        Ok(())
    }
}

/// `n` distinct uniform vertices (all of them if `n >= |V|`), sorted.
pub fn sample_targets(g: &Graph, n: usize, seed: u64) -> Vec<VertexId> {
    let total = g.num_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7461_7267_6574_7300);
    let mut t: Vec<VertexId> = sample(&mut rng, total, n.min(total)).into_iter().map(|v| v as VertexId).collect();
    t.sort_unstable();
    t
}

pub fn neighborhood_size(nfs: &[LayerNodeflow]) -> usize {
    nfs.first().map_or(0, LayerNodeflow::num_inputs)
}

/// Batch-of-one nodeflows for every target, seeded per target.
pub fn target_nodeflows(plan: &ModelPlan, g: &Graph, targets: &[VertexId], seed: u64) -> Result<Vec<Vec<LayerNodeflow>>> {
    map_collect(targets, |&t| build_nodeflow(g, &[t], &plan.sample_sizes, seed ^ u64::from(t), plan.include_self))
        .into_iter()
        .collect()
}

/// Times each prepared nodeflow set under `cfg`.
pub fn latency_of(plan: &ModelPlan, targets: &[VertexId], nfss: &[Vec<LayerNodeflow>], cfg: &ArchConfig) -> Result<LatencySummary> {
    let jobs: Vec<(VertexId, &Vec<LayerNodeflow>)> = targets.iter().copied().zip(nfss).collect();
    let records = map_collect(&jobs, |&(target, nfs)| {
        let rep = time_nodeflows(plan, nfs, cfg)?;
        Ok(VertexRecord { target, neighborhood: neighborhood_size(nfs), cycles: rep.total_cycles, latency_us: rep.latency_us })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    LatencySummary::from_records(records)
}

/// Samples `n` targets and measures one inference each.
pub fn latency_distribution(plan: &ModelPlan, g: &Graph, cfg: &ArchConfig, n: usize, seed: u64) -> Result<LatencySummary> {
    let targets = sample_targets(g, n, seed);
    let nfss = target_nodeflows(plan, g, &targets, seed)?;
    latency_of(plan, &targets, &nfss, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, SyntheticKind};
    use crate::greta::{build_model_program, ModelKind};

    #[test]
    fn nearest_rank() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&xs, 0.99), 99.0);
        assert_eq!(percentile(&xs, 0.5), 50.0);
        assert_eq!(percentile(&[3.0], 0.99), 3.0);
    }

    #[test]
    fn isolated_vertices_have_identical_latency() {
        let g = Graph::from_edges(20, &[]).unwrap();
        let plan = build_model_program(ModelKind::Gcn, &[32, 16, 8], &[4, 2]).unwrap();
        let s = latency_distribution(&plan, &g, &ArchConfig::default(), 10, 1).unwrap();
        assert_eq!(s.records.len(), 10);
        assert!(s.min_us == s.median_us && s.median_us == s.p99_us && s.min_us > 0.0);
    }

    #[test]
    fn ordered_summary_and_csv() {
        let g = generate_synthetic(SyntheticKind::PowerLaw, 300, 8, 2).unwrap();
        let plan = build_model_program(ModelKind::Gcn, &[32, 16, 8], &[6, 3]).unwrap();
        let s = latency_distribution(&plan, &g, &ArchConfig::default(), 40, 3).unwrap();
        assert!(s.min_us <= s.median_us && s.median_us <= s.p99_us);
        let one = latency_distribution(&plan, &g, &ArchConfig::default(), 1, 3).unwrap();
        assert!(one.min_us == one.median_us && one.median_us == one.p99_us);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("target,neighborhood,cycles,latency_us\n"));
        assert_eq!(text.lines().count(), 42);
    }
}
