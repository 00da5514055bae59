//! The model zoo, compiled to per-layer program sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fixed::FxFormat;
use super::lut::Lut;
use super::program::{GretaProgram, LayerPlan, ModelPlan, NodeflowSel, Route};
use super::udf::{ActivateKind, GatherKind, Operand, ReduceKind, TransformKind, WeightId, INPUT_SLOT};
use super::weights::WeightSpec;
use crate::error::{Error, Result};

pub const DEFAULT_DIMS: [usize; 3] = [602, 512, 256];
pub const DEFAULT_SAMPLE_SIZES: [usize; 2] = [25, 10];
pub const WEIGHT_FORMAT: FxFormat = FxFormat::Q2_14;
pub const FEATURE_FORMAT: FxFormat = FxFormat::Q4_12;
/// Gate sigmoid table exponents.
pub const GATE_LUT_A: i32 = 1;
pub const GATE_LUT_B: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gcn,
    GraphsageMax,
    Gin,
    Ggcn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Gcn, ModelKind::GraphsageMax, ModelKind::Gin, ModelKind::Ggcn];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gcn => "gcn",
            ModelKind::GraphsageMax => "graphsage-max",
            ModelKind::Gin => "gin",
            ModelKind::Ggcn => "ggcn",
        }
    }

    /// Whether layer nodeflows add a self edge to every output.
    pub fn include_self(self) -> bool {
        matches!(self, ModelKind::Gcn | ModelKind::Gin)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(ModelKind::Gcn),
            "graphsage-max" | "graphsage" | "sage" => Ok(ModelKind::GraphsageMax),
            "gin" => Ok(ModelKind::Gin),
            "ggcn" | "g-gcn" => Ok(ModelKind::Ggcn),
            _ => Err(Error::unknown("model", s)),
        }
    }
}

struct Builder {
    weights: Vec<WeightSpec>,
}

impl Builder {
    fn matrix(&mut self, name: String, out: usize, inp: usize) -> WeightId {
        self.weights.push(WeightSpec { name, rows: out, cols: inp, fmt: WEIGHT_FORMAT, fan_in: inp });
        self.weights.len() - 1
    }

    fn bias(&mut self, name: String, out: usize, fan_in: usize) -> WeightId {
        self.weights.push(WeightSpec { name, rows: 1, cols: out, fmt: FEATURE_FORMAT, fan_in });
        self.weights.len() - 1
    }

    fn matmul(&mut self, name: String, out: usize, inp: usize, with_bias: bool) -> TransformKind {
        let weight = self.matrix(format!("{name}.w"), out, inp);
        let bias = with_bias.then(|| self.bias(format!("{name}.b"), out, inp));
        TransformKind::Matmul { weight, bias }
    }
}

#[allow(clippy::too_many_arguments)]
fn prog(
    name: String,
    nodeflow: NodeflowSel,
    gather: GatherKind,
    reduce: ReduceKind,
    transform: TransformKind,
    activate: ActivateKind,
    route: Route,
    in_dim: usize,
    out_dim: usize,
) -> GretaProgram {
    GretaProgram { name, nodeflow, gather, reduce, transform, activate, route, in_dim, out_dim }
}

/// Compiles `model` for the dimension schedule `dims` (K+1 entries) and
/// per-layer sample sizes (K entries).
pub fn build_model_program(model: ModelKind, dims: &[usize], sample_sizes: &[usize]) -> Result<ModelPlan> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::param("dims need at least two positive entries"));
    }
    if sample_sizes.len() != dims.len() - 1 {
        return Err(Error::param(format!("{} sample sizes for {} layers", sample_sizes.len(), dims.len() - 1)));
    }
    let mut b = Builder { weights: Vec::new() };
    let mut luts = Vec::new();
    if model == ModelKind::Ggcn {
        luts.push(Lut::sigmoid(GATE_LUT_A, GATE_LUT_B)?);
    }
    let src = GatherKind::IdentitySrc(INPUT_SLOT);
    use ActivateKind::{Identity, Lut as LutAct, Relu};
    use NodeflowSel::{IdentityInputs, IdentityOutputs, Layer};
    use ReduceKind::{Max, Mean, Sum};

    let mut layers = Vec::with_capacity(dims.len() - 1);
    for l in 0..dims.len() - 1 {
        let (din, dout) = (dims[l], dims[l + 1]);
        let n = |s: &str| format!("l{l}.{s}");
        let programs = match model {
            ModelKind::Gcn => {
                vec![prog(n("gcn"), Layer, src, Mean, b.matmul(n("w"), dout, din, false), Relu, Route::Output, din, dout)]
            }
            ModelKind::GraphsageMax => vec![
                prog(n("self"), IdentityOutputs, src, Sum, b.matmul(n("self"), dout, din, false), Identity, Route::VertexAcc(2), din, dout),
                prog(n("pool"), IdentityInputs, src, Sum, b.matmul(n("pool"), dout, din, true), Relu, Route::Features(1), din, dout),
                prog(
                    n("neigh"),
                    Layer,
                    GatherKind::IdentitySrc(1),
                    Max,
                    b.matmul(n("neigh"), dout, dout, false),
                    Relu,
                    Route::Output,
                    dout,
                    dout,
                ),
            ],
            ModelKind::Gin => vec![
                prog(n("agg"), Layer, src, Sum, TransformKind::None, Identity, Route::Features(1), din, din),
                prog(n("mlp1"), IdentityOutputs, GatherKind::IdentitySrc(1), Sum, b.matmul(n("mlp1"), dout, din, true), Relu, Route::Features(2), din, dout),
                prog(n("mlp2"), IdentityOutputs, GatherKind::IdentitySrc(2), Sum, b.matmul(n("mlp2"), dout, dout, true), Relu, Route::Output, dout, dout),
            ],
            ModelKind::Ggcn => vec![
                prog(n("gate"), IdentityInputs, src, Sum, b.matmul(n("gate"), dout, din, true), LutAct(0), Route::Features(1), din, dout),
                prog(n("msg"), IdentityInputs, src, Sum, b.matmul(n("msg"), dout, din, false), Identity, Route::Features(2), din, dout),
                prog(n("self"), IdentityOutputs, src, Sum, b.matmul(n("self"), dout, din, true), Identity, Route::VertexAcc(3), din, dout),
                prog(
                    n("edge"),
                    Layer,
                    GatherKind::ElementwiseProduct(Operand::Src(1), Operand::Src(2)),
                    Sum,
                    TransformKind::None,
                    Relu,
                    Route::Output,
                    dout,
                    dout,
                ),
            ],
        };
        layers.push(LayerPlan { in_dim: din, out_dim: dout, programs });
    }
    let plan = ModelPlan {
        model,
        include_self: model.include_self(),
        dims: dims.to_vec(),
        sample_sizes: sample_sizes.to_vec(),
        layers,
        weights: b.weights,
        luts,
        edge_dim: None,
    };
    plan.validate()?;
    Ok(plan)
}
