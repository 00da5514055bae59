//! Bit-exact fixed-point execution of model plans, an independent float
//! reference, and error reporting between the two.

mod compare;
mod engine;
mod io;
mod oracle;

pub use compare::{compare_outputs, ErrorReport};
pub use engine::{exec_layer, exec_model, exec_program, program_nodeflow, Embeddings, ExecOptions, LayerContext, Routed};
pub use io::{read_embeddings, write_embeddings};
pub use oracle::{float_oracle, gcn_spmm, OracleWeights};

use crate::greta::FixedVec;

/// Per-output accumulators and results of one program run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecState {
    pub e_v: Vec<FixedVec>,
    pub a_v: Vec<FixedVec>,
    pub z_v: Vec<FixedVec>,
    /// Messages folded into each `e_v`; zero marks a vertex with no in-edges.
    pub counts: Vec<u32>,
}

impl ExecState {
    pub fn new(n: usize) -> Self {
        let empty = FixedVec::zeros(0, crate::greta::FEATURE_FORMAT);
        ExecState { e_v: vec![empty.clone(); n], a_v: vec![empty.clone(); n], z_v: vec![empty; n], counts: vec![0; n] }
    }

    pub fn isolated(&self) -> Vec<usize> {
        self.counts.iter().enumerate().filter(|(_, &c)| c == 0).map(|(i, _)| i).collect()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::graph::{FeatureStore, Graph};
    use crate::greta::*;
    use crate::nodeflow::{build_nodeflow, LayerNodeflow, NfEdge};

    fn q(xs: &[f64]) -> FixedVec {
        FixedVec::quantize(xs, FEATURE_FORMAT)
    }

    fn single_program(p: GretaProgram, weights: Vec<WeightMatrix>) -> (ModelPlan, WeightSet) {
        let specs = weights
            .iter()
            .enumerate()
            .map(|(i, w)| WeightSpec { name: format!("m{i}"), rows: w.rows, cols: w.cols, fmt: w.fmt, fan_in: w.cols })
            .collect();
        let plan = ModelPlan {
            model: ModelKind::Gcn,
            include_self: true,
            dims: vec![p.in_dim, p.out_dim],
            sample_sizes: vec![1],
            layers: vec![LayerPlan { in_dim: p.in_dim, out_dim: p.out_dim, programs: vec![p] }],
            weights: specs,
            luts: vec![],
            edge_dim: None,
        };
        plan.validate().unwrap();
        (plan, WeightSet { matrices: weights })
    }

    fn identity_program(d: usize) -> GretaProgram {
        GretaProgram {
            name: "id".into(),
            nodeflow: NodeflowSel::Layer,
            gather: GatherKind::IdentitySrc(INPUT_SLOT),
            reduce: ReduceKind::Sum,
            transform: TransformKind::Matmul { weight: 0, bias: None },
            activate: ActivateKind::Relu,
            route: Route::Output,
            in_dim: d,
            out_dim: d,
        }
    }

    #[test]
    fn identity_end_to_end() {
        let (plan, w) = single_program(identity_program(3), vec![WeightMatrix::identity(3, WEIGHT_FORMAT)]);
        let nf = LayerNodeflow::identity(vec![0, 1]);
        let input = vec![q(&[0.5, 1.0, 2.0]), q(&[0.0, 3.0, 7.0])];
        let out = exec_layer(&plan, 0, &nf, input.clone(), &w, &ExecOptions::default()).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn empty_edge_set_keeps_init() {
        let p = identity_program(2);
        let (plan, w) = single_program(p.clone(), vec![WeightMatrix::identity(2, WEIGHT_FORMAT)]);
        let nf = LayerNodeflow { inputs: vec![4], outputs: vec![4], edges: vec![], identity: false };
        let ctx = LayerContext {
            nf: &nf,
            tables: HashMap::from([(INPUT_SLOT, vec![q(&[1.0, 1.0])])]),
            edge_data: None,
            weights: &w,
            luts: &plan.luts,
        };
        let st = exec_program(&p, &ctx, &Routed::default(), &ExecOptions::default()).unwrap();
        assert_eq!(st.e_v[0], FixedVec::zeros(2, FEATURE_FORMAT));
        assert_eq!(st.isolated(), vec![0]);
    }

    #[test]
    fn single_edge_mean_copies_source() {
        let mut p = identity_program(2);
        p.reduce = ReduceKind::Mean;
        let (plan, w) = single_program(p, vec![WeightMatrix::identity(2, WEIGHT_FORMAT)]);
        let nf = LayerNodeflow::new(vec![0, 1], vec![0], vec![NfEdge { u: 1, v: 0, data: 0 }]).unwrap();
        let out = exec_layer(&plan, 0, &nf, vec![q(&[9.0, 9.0]), q(&[0.25, 1.5])], &w, &ExecOptions::default()).unwrap();
        assert_eq!(out[0], q(&[0.25, 1.5]));
    }

    #[test]
    fn partition_and_slicing_are_bit_identical() {
        let g = crate::graph::generate_synthetic(crate::graph::SyntheticKind::PowerLaw, 300, 8, 3).unwrap();
        let targets: Vec<u32> = (0..20).collect();
        for model in ModelKind::ALL {
            let plan = build_model_program(model, &[24, 16, 8], &[6, 4]).unwrap();
            let nfs = build_nodeflow(&g, &targets, &plan.sample_sizes, 11, plan.include_self).unwrap();
            let feats = FeatureStore::seeded_random(g.num_vertices(), 24, 2);
            let w = WeightSet::seeded(&plan.weights, 9);
            let base = exec_model(&plan, &nfs, &feats, &w, &ExecOptions::default()).unwrap();
            for opts in [
                ExecOptions { partition: Some((8, 8)), slice: None },
                ExecOptions { partition: Some((3, 5)), slice: Some(5) },
                ExecOptions { partition: None, slice: Some(1) },
            ] {
                assert_eq!(exec_model(&plan, &nfs, &feats, &w, &opts).unwrap(), base, "{model} {opts:?}");
            }
        }
    }

    #[test]
    fn gcn_chain_by_hand() {
        // Chain 0-1-2, target 1, self included; every layer sees {0,1,2}.
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap().symmetrized();
        let plan = build_model_program(ModelKind::Gcn, &[4, 3, 2], &[25, 10]).unwrap();
        let nfs = build_nodeflow(&g, &[1], &plan.sample_sizes, 0, true).unwrap();
        // Rows 0..3 carry 0.25, 0.5, 0.75 in every column.
        let vals: Vec<f64> = (0..3).flat_map(|r| std::iter::repeat_n(0.25 * (r + 1) as f64, 4)).collect();
        let feats = FeatureStore::from_f64(3, 4, vals).unwrap();
        // Identity-padded weights: W0 = I(3x4), W1 = I(2x3).
        let pad = |r: usize, c: usize| {
            let mut m = WeightMatrix::zeros(r, c, WEIGHT_FORMAT);
            for i in 0..r.min(c) {
                m.data[i * c + i] = WEIGHT_FORMAT.quantize(1.0);
            }
            m
        };
        let w = WeightSet { matrices: vec![pad(3, 4), pad(2, 3)] };
        let out = exec_model(&plan, &nfs, &feats, &w, &ExecOptions::default()).unwrap();
        // Layer 0: vertex 1 -> mean(.25,.5,.75) = .5; vertex 0 -> mean(.25,.5) = .375;
        // vertex 2 -> mean(.5,.75) = .625. Layer 1 at vertex 1: mean(.375,.5,.625) = .5.
        assert_eq!(out.vertices, vec![1]);
        assert_eq!(out.rows[0], q(&[0.5, 0.5]));
    }
}
