use std::collections::HashMap;

use super::ExecState;
use crate::error::{Error, Result};
use crate::graph::{FeatureStore, VertexId};
use crate::greta::{
    activate_apply, add_sat, gather_apply, FixedVec, GatherInputs, GretaProgram, Lut, MatvecAcc, ModelPlan,
    NodeflowSel, ReduceState, Route, Slot, TransformKind, WeightSet, FEATURE_FORMAT,
};
use crate::nodeflow::{partition_nodeflow, LayerNodeflow, NfEdge};

/// Schedule knobs. None of them changes results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecOptions {
    /// Block partition `(Nc, Mc)` applied to every program's nodeflow.
    pub partition: Option<(usize, usize)>,
    /// Feed `e_v` to the transform in slices of this many elements.
    pub slice: Option<usize>,
}

/// Per-layer vertex tables, indexed by input position. Outputs are the
/// first `|V|` inputs, so one index serves both sides.
pub struct LayerContext<'a> {
    pub nf: &'a LayerNodeflow,
    pub tables: HashMap<Slot, Vec<FixedVec>>,
    pub edge_data: Option<&'a [FixedVec]>,
    pub weights: &'a WeightSet,
    pub luts: &'a [Lut],
}

struct EdgeView<'a> {
    tables: &'a HashMap<Slot, Vec<FixedVec>>,
    u: usize,
    v: usize,
    edge: Option<&'a FixedVec>,
}

impl GatherInputs for EdgeView<'_> {
    fn src(&self, slot: Slot) -> Option<&FixedVec> {
        self.tables.get(&slot).and_then(|t| t.get(self.u))
    }
    fn dst(&self, slot: Slot) -> Option<&FixedVec> {
        self.tables.get(&slot).and_then(|t| t.get(self.v))
    }
    fn edge(&self) -> Option<&FixedVec> {
        self.edge
    }
}

/// Initial accumulators routed in from earlier programs.
#[derive(Debug, Clone, Default)]
pub struct Routed {
    pub edge_acc: Option<Vec<FixedVec>>,
    pub vertex_acc: Option<Vec<FixedVec>>,
}

/// The nodeflow a program iterates over.
pub fn program_nodeflow(p: &GretaProgram, nf: &LayerNodeflow) -> LayerNodeflow {
    match p.nodeflow {
        NodeflowSel::Layer => nf.clone(),
        NodeflowSel::IdentityInputs => LayerNodeflow::identity(nf.inputs.clone()),
        NodeflowSel::IdentityOutputs => LayerNodeflow::identity(nf.outputs.clone()),
    }
}

/// Edges in execution order, plus the column boundaries after which the
/// listed outputs are complete.
fn edge_schedule(nf: &LayerNodeflow, opts: &ExecOptions) -> Result<Vec<(Vec<NfEdge>, std::ops::Range<usize>)>> {
    match opts.partition {
        None => Ok(vec![(nf.edges.clone(), 0..nf.num_outputs())]),
        Some((nc, mc)) => {
            let p = partition_nodeflow(nf, nc, mc)?;
            Ok((0..p.num_cols)
                .map(|j| (p.column(j).flat_map(|b| b.edges.iter().copied()).collect(), p.output_range(j)))
                .collect())
        }
    }
}

/// Runs one program: edge-accumulate, then vertex-accumulate and update
/// for each completed output range.
pub fn exec_program(p: &GretaProgram, ctx: &LayerContext<'_>, routed: &Routed, opts: &ExecOptions) -> Result<ExecState> {
    let nf = program_nodeflow(p, ctx.nf);
    let n = nf.num_outputs();
    let mut state = ExecState::new(n);
    let e_init = |v: usize| match &routed.edge_acc {
        Some(seed) => ReduceState::seeded(p.reduce, &seed[v]),
        None => ReduceState::new(p.reduce, p.in_dim, FEATURE_FORMAT),
    };
    let mut acc: Vec<ReduceState> = (0..n).map(e_init).collect();

    for (edges, outputs) in edge_schedule(&nf, opts)? {
        for e in &edges {
            let view = EdgeView {
                tables: &ctx.tables,
                u: e.u as usize,
                v: e.v as usize,
                edge: ctx.edge_data.and_then(|d| d.get(e.data as usize)),
            };
            // Identity nodeflows index the same table position on both sides.
            let msg = gather_apply(&p.gather, &view)?;
            acc[e.v as usize].fold(&msg)?;
        }
        for v in outputs {
            let e_v = acc[v].finalize();
            let mut a_v = match &routed.vertex_acc {
                Some(init) => init[v].clone(),
                None => FixedVec::zeros(p.out_dim, FEATURE_FORMAT),
            };
            a_v = match p.transform {
                TransformKind::None => add_sat(&a_v, &e_v)?,
                TransformKind::Matmul { weight, bias } => {
                    if let Some(b) = bias {
                        a_v = add_sat(&a_v, &ctx.weights.get(b)?.as_vector())?;
                    }
                    let w = ctx.weights.get(weight)?;
                    if e_v.len() != w.cols {
                        return Err(Error::shape(format!("e_v length {} for {}x{} weights", e_v.len(), w.rows, w.cols)));
                    }
                    let mut m = MatvecAcc::new(&a_v, w, e_v.fmt)?;
                    let step = opts.slice.unwrap_or(w.cols).max(1);
                    for lo in (0..w.cols).step_by(step) {
                        let hi = (lo + step).min(w.cols);
                        m.accumulate(w, lo, &e_v.data[lo..hi]);
                    }
                    m.finish()
                }
            };
            let z_v = activate_apply(p.activate, &a_v, ctx.luts)?;
            state.counts[v] = acc[v].count;
            state.e_v[v] = e_v;
            state.a_v[v] = a_v;
            state.z_v[v] = z_v;
        }
    }
    Ok(state)
}

/// Runs every program of one layer and returns the layer output rows.
pub fn exec_layer(
    plan: &ModelPlan,
    layer: usize,
    nf: &LayerNodeflow,
    input: Vec<FixedVec>,
    weights: &WeightSet,
    opts: &ExecOptions,
) -> Result<Vec<FixedVec>> {
    let lp = &plan.layers[layer];
    if nf.inputs.len() < nf.outputs.len() || nf.inputs[..nf.outputs.len()] != nf.outputs[..] {
        return Err(Error::Invariant(format!("layer {layer}: outputs are not a prefix of inputs")));
    }
    if input.len() != nf.num_inputs() {
        return Err(Error::shape(format!("{} input rows for {} inputs", input.len(), nf.num_inputs())));
    }
    let mut ctx = LayerContext { nf, tables: HashMap::new(), edge_data: None, weights, luts: &plan.luts };
    ctx.tables.insert(crate::greta::INPUT_SLOT, input);
    let mut routed: Vec<Routed> = vec![Routed::default(); lp.programs.len()];
    let mut output = None;
    for (i, p) in lp.programs.iter().enumerate() {
        let st = exec_program(p, &ctx, &routed[i], opts)?;
        match p.route {
            Route::Output => output = Some(st.z_v),
            Route::Features(s) => {
                ctx.tables.insert(s, st.z_v);
            }
            Route::EdgeAcc(t) => merge(&mut routed[t].edge_acc, st.z_v)?,
            Route::VertexAcc(t) => merge(&mut routed[t].vertex_acc, st.z_v)?,
        }
    }
    output.ok_or_else(|| Error::Program(format!("layer {layer} produced no output")))
}

fn merge(slot: &mut Option<Vec<FixedVec>>, z: Vec<FixedVec>) -> Result<()> {
    match slot {
        None => *slot = Some(z),
        Some(prev) => {
            for (a, b) in prev.iter_mut().zip(&z) {
                *a = add_sat(a, b)?;
            }
        }
    }
    Ok(())
}

/// Final-layer rows for the nodeflow targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub vertices: Vec<VertexId>,
    pub rows: Vec<FixedVec>,
}

impl Embeddings {
    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(FixedVec::dequantize).collect()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, FixedVec::len)
    }

    pub fn to_store(&self) -> Result<FeatureStore> {
        let data = self.rows.iter().flat_map(|r| r.data.iter().copied()).collect();
        FeatureStore::from_fixed(self.rows.len(), self.dim(), FEATURE_FORMAT, data)
    }
}

/// Chains the layers of `plan`; layer `l + 1` reads the rows layer `l` produced.
pub fn exec_model(
    plan: &ModelPlan,
    nfs: &[LayerNodeflow],
    feats: &FeatureStore,
    weights: &WeightSet,
    opts: &ExecOptions,
) -> Result<Embeddings> {
    if nfs.len() != plan.num_layers() {
        return Err(Error::shape(format!("{} nodeflows for {} layers", nfs.len(), plan.num_layers())));
    }
    if feats.dim() != plan.dims[0] {
        return Err(Error::shape(format!("features are {} wide, model expects {}", feats.dim(), plan.dims[0])));
    }
    weights.check(&plan.weights)?;
    let mut rows: Vec<FixedVec> = nfs[0]
        .inputs
        .iter()
        .map(|&v| {
            if v as usize >= feats.rows() {
                return Err(Error::shape(format!("vertex {v} has no feature row")));
            }
            Ok(feats.row_fixed(v as usize, FEATURE_FORMAT))
        })
        .collect::<Result<_>>()?;
    for (l, nf) in nfs.iter().enumerate() {
        if l > 0 && nfs[l - 1].outputs != nf.inputs {
            return Err(Error::Invariant(format!("layer {l} inputs differ from layer {} outputs", l - 1)));
        }
        rows = exec_layer(plan, l, nf, rows, weights, opts)?;
    }
    Ok(Embeddings { vertices: nfs.last().unwrap().outputs.clone(), rows })
}
