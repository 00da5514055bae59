//! Fixed-point numerics, the four UDF families, LUT activation and the model zoo.

mod fixed;
mod lut;
mod models;
mod program;
mod udf;
mod weights;

pub use fixed::{rescale, round_shift, saturate_i16, FixedVec, FxFormat, FxScalar};
pub use lut::{Lut, Overflow, LEVEL1_ENTRIES, LEVEL2_ENTRIES, LUT_INPUT_FORMAT};
pub use models::{build_model_program, ModelKind, DEFAULT_DIMS, DEFAULT_SAMPLE_SIZES, FEATURE_FORMAT, WEIGHT_FORMAT};
pub use program::{Coverage, GretaProgram, LayerPlan, ModelPlan, NodeflowSel, Route};
pub use udf::*;
pub use weights::{WeightSet, WeightSpec};
