use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lut::Lut;
use super::models::ModelKind;
use super::udf::{ActivateKind, GatherKind, Operand, ReduceKind, Slot, TransformKind, INPUT_SLOT};
use super::weights::WeightSpec;
use crate::error::{Error, Result};

/// Which bipartite structure a program iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeflowSel {
    /// The sampled layer nodeflow (U to V).
    Layer,
    /// Every input vertex connected to itself.
    IdentityInputs,
    /// Every output vertex connected to itself.
    IdentityOutputs,
}

/// Vertex set a program produces values for. Outputs are a prefix of inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Coverage {
    Outputs,
    Inputs,
}

impl NodeflowSel {
    pub fn produces(self) -> Coverage {
        match self {
            NodeflowSel::IdentityInputs => Coverage::Inputs,
            _ => Coverage::Outputs,
        }
    }

    fn src_needs(self) -> Coverage {
        match self {
            NodeflowSel::IdentityOutputs => Coverage::Outputs,
            _ => Coverage::Inputs,
        }
    }
}

/// Where a program's `z_v` goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// The layer result.
    Output,
    /// A per-layer feature table later programs may read.
    Features(Slot),
    /// Initial edge accumulator of a later program of the same layer.
    EdgeAcc(usize),
    /// Initial vertex accumulator of a later program of the same layer.
    VertexAcc(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GretaProgram {
    pub name: String,
    pub nodeflow: NodeflowSel,
    pub gather: GatherKind,
    pub reduce: ReduceKind,
    pub transform: TransformKind,
    pub activate: ActivateKind,
    pub route: Route,
    /// Length of `e_v`.
    pub in_dim: usize,
    /// Length of `a_v` and `z_v`.
    pub out_dim: usize,
}

impl GretaProgram {
    pub fn reads_source_features(&self) -> bool {
        self.gather.operands().iter().any(|o| matches!(o, Operand::Src(_)))
    }

    pub fn reads_dest_features(&self) -> bool {
        self.gather.operands().iter().any(|o| matches!(o, Operand::Dst(_)))
    }

    pub fn reads_edge_features(&self) -> bool {
        self.gather.operands().contains(&Operand::Edge)
    }

    pub fn weight_refs(&self) -> Vec<usize> {
        match self.transform {
            TransformKind::None => vec![],
            TransformKind::Matmul { weight, bias } => std::iter::once(weight).chain(bias).collect(),
        }
    }

    pub fn has_matmul(&self) -> bool {
        matches!(self.transform, TransformKind::Matmul { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub in_dim: usize,
    pub out_dim: usize,
    pub programs: Vec<GretaProgram>,
}

impl LayerPlan {
    pub fn output_program(&self) -> Option<usize> {
        self.programs.iter().position(|p| p.route == Route::Output)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPlan {
    pub model: ModelKind,
    /// Whether layer nodeflows carry a self edge per output.
    pub include_self: bool,
    pub dims: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub layers: Vec<LayerPlan>,
    pub weights: Vec<WeightSpec>,
    pub luts: Vec<Lut>,
    /// Edge-feature width, for plans whose gathers read edge data.
    pub edge_dim: Option<usize>,
}

impl ModelPlan {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_programs(&self) -> usize {
        self.layers.iter().map(|l| l.programs.len()).sum()
    }

    /// Checks routing acyclicity, slot coverage and every operand shape.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.layers.len() != self.sample_sizes.len() {
            return Err(Error::Program(format!(
                "{} layers for {} sample sizes",
                self.layers.len(),
                self.sample_sizes.len()
            )));
        }
        if self.dims.len() != self.layers.len() + 1 || self.dims.contains(&0) {
            return Err(Error::Program("dimension schedule must have K+1 positive entries".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if (layer.in_dim, layer.out_dim) != (self.dims[l], self.dims[l + 1]) {
                return Err(Error::Program(format!("layer {l} dims disagree with schedule")));
            }
            self.validate_layer(l, layer)?;
        }
        Ok(())
    }

    fn validate_layer(&self, l: usize, layer: &LayerPlan) -> Result<()> {
        let err = |i: usize, msg: String| Error::Program(format!("layer {l} program {i}: {msg}"));
        // slot -> (dim, coverage)
        let mut slots: HashMap<Slot, (usize, Coverage)> = HashMap::new();
        slots.insert(INPUT_SLOT, (layer.in_dim, Coverage::Inputs));
        // incoming routed accumulators: program -> (kind, dim, coverage)
        let mut incoming: HashMap<usize, Vec<(Route, usize, Coverage)>> = HashMap::new();
        let mut outputs = 0;

        for (i, p) in layer.programs.iter().enumerate() {
            if p.in_dim == 0 || p.out_dim == 0 {
                return Err(err(i, "zero-width vector".into()));
            }
            for op in p.gather.operands() {
                let dim = match op {
                    Operand::Src(s) => {
                        let &(d, c) = slots.get(&s).ok_or_else(|| err(i, format!("reads unwritten slot {s}")))?;
                        if c < p.nodeflow.src_needs() {
                            return Err(err(i, format!("slot {s} does not cover source vertices")));
                        }
                        d
                    }
                    Operand::Dst(s) => {
                        let &(d, c) = slots.get(&s).ok_or_else(|| err(i, format!("reads unwritten slot {s}")))?;
                        if c < p.nodeflow.produces() {
                            return Err(err(i, format!("slot {s} does not cover destination vertices")));
                        }
                        d
                    }
                    Operand::Edge => self.edge_dim.ok_or_else(|| err(i, "reads edge data but plan has none".into()))?,
                };
                if dim != p.in_dim {
                    return Err(err(i, format!("gather operand width {dim}, e_v width {}", p.in_dim)));
                }
            }
            match p.transform {
                TransformKind::None => {
                    if p.in_dim != p.out_dim {
                        return Err(err(i, "untransformed program must keep its width".into()));
                    }
                }
                TransformKind::Matmul { weight, bias } => {
                    let w = self.weights.get(weight).ok_or_else(|| Error::unknown("weight", weight.to_string()))?;
                    if (w.rows, w.cols) != (p.out_dim, p.in_dim) {
                        return Err(err(i, format!("weight {} is {}x{}, need {}x{}", w.name, w.rows, w.cols, p.out_dim, p.in_dim)));
                    }
                    if let Some(b) = bias {
                        let b = self.weights.get(b).ok_or_else(|| Error::unknown("weight", b.to_string()))?;
                        if (b.rows, b.cols) != (1, p.out_dim) {
                            return Err(err(i, format!("bias {} is {}x{}", b.name, b.rows, b.cols)));
                        }
                    }
                }
            }
            if let ActivateKind::Lut(id) = p.activate {
                if id >= self.luts.len() {
                    return Err(Error::unknown("lut", id.to_string()));
                }
            }
            for (route, dim, cov) in incoming.remove(&i).unwrap_or_default() {
                let want = if matches!(route, Route::EdgeAcc(_)) { p.in_dim } else { p.out_dim };
                if dim != want {
                    return Err(err(i, format!("routed accumulator width {dim}, expected {want}")));
                }
                if cov < p.nodeflow.produces() {
                    return Err(err(i, "routed accumulator does not cover its vertices".into()));
                }
            }
            match p.route {
                Route::Output => {
                    outputs += 1;
                    if p.out_dim != layer.out_dim {
                        return Err(err(i, "output width differs from layer width".into()));
                    }
                }
                Route::Features(s) => {
                    if s == INPUT_SLOT {
                        return Err(err(i, "programs may not overwrite the layer input".into()));
                    }
                    if slots.insert(s, (p.out_dim, p.nodeflow.produces())).is_some() {
                        return Err(err(i, format!("slot {s} written twice")));
                    }
                }
                Route::EdgeAcc(t) | Route::VertexAcc(t) => {
                    if t <= i || t >= layer.programs.len() {
                        return Err(err(i, format!("routes to program {t}, which is not a later program")));
                    }
                    incoming.entry(t).or_default().push((p.route, p.out_dim, p.nodeflow.produces()));
                }
            }
        }
        if outputs != 1 {
            return Err(Error::Program(format!("layer {l} has {outputs} output programs")));
        }
        Ok(())
    }
}
