use std::path::PathBuf;
use std::str::FromStr;

use super::latency::{sample_targets, target_nodeflows};
use super::sweep::{Axis, Workload};
use crate::error::{Error, Result};
use crate::graph::{generate_synthetic, load_graph, Graph, GraphFormat, SyntheticKind};
use crate::greta::{build_model_program, ModelKind, ModelPlan, DEFAULT_DIMS, DEFAULT_SAMPLE_SIZES};
use crate::timing::{apply_preset, ArchConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSpec {
    File { path: PathBuf, format: GraphFormat },
    Synthetic { n: usize, degree: usize, kind: SyntheticKind },
}

impl FromStr for DatasetSpec {
    type Err = Error;

    /// Synthetic parameters as `n:deg:kind`, `kind` defaulting to power-law.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|_| Error::param(format!("synthetic spec `{s}`: bad number `{p}`")));
        match parts.as_slice() {
            [n, d] => Ok(DatasetSpec::Synthetic { n: num(n)?, degree: num(d)?, kind: SyntheticKind::PowerLaw }),
            [n, d, k] => Ok(DatasetSpec::Synthetic { n: num(n)?, degree: num(d)?, kind: k.parse()? }),
            _ => Err(Error::param(format!("synthetic spec `{s}` is not n:deg:kind"))),
        }
    }
}

impl DatasetSpec {
    pub fn load(&self, seed: u64) -> Result<Graph> {
        match self {
            DatasetSpec::File { path, format } => load_graph(path, *format),
            &DatasetSpec::Synthetic { n, degree, kind } => generate_synthetic(kind, n, degree, seed),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub model: ModelKind,
    pub dataset: DatasetSpec,
    pub preset: String,
    pub overrides: Vec<String>,
    pub sweep: Vec<Axis>,
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub sample_sizes: Vec<usize>,
}

impl ExperimentSpec {
    pub fn new(model: ModelKind, dataset: DatasetSpec) -> Self {
        ExperimentSpec {
            model,
            dataset,
            preset: "grip-default".into(),
            overrides: vec![],
            sweep: vec![],
            samples: 100,
            out: None,
            seed: 0,
            dims: DEFAULT_DIMS.to_vec(),
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
        }
    }

    pub fn arch(&self) -> Result<ArchConfig> {
        let mut cfg = apply_preset(&self.preset)?;
        cfg.apply_overrides(&self.overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn plan(&self) -> Result<ModelPlan> {
        build_model_program(self.model, &self.dims, &self.sample_sizes)
    }

    /// Samples targets and their nodeflows from `g`.
    pub fn workload(&self, g: &Graph) -> Result<Workload> {
        if self.samples == 0 {
            return Err(Error::param("samples must be >= 1"));
        }
        let plan = self.plan()?;
        let targets = sample_targets(g, self.samples, self.seed);
        let nfss = target_nodeflows(&plan, g, &targets, self.seed)?;
        Ok(Workload { model: self.model, dims: self.dims.clone(), sample_sizes: self.sample_sizes.clone(), targets, nfss })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_spec_parsing() {
        assert_eq!(
            "100:5:uniform".parse::<DatasetSpec>().unwrap(),
            DatasetSpec::Synthetic { n: 100, degree: 5, kind: SyntheticKind::UniformRandom }
        );
        assert!(matches!("100:5".parse::<DatasetSpec>().unwrap(), DatasetSpec::Synthetic { kind: SyntheticKind::PowerLaw, .. }));
        assert!("100".parse::<DatasetSpec>().is_err());
        assert!("a:5".parse::<DatasetSpec>().is_err());
    }

    #[test]
    fn overrides_apply_over_preset() {
        let mut s = ExperimentSpec::new(ModelKind::Gcn, "50:4".parse().unwrap());
        s.preset = "tpu-plus".into();
        s.overrides = vec!["opt.tile_f=32".into()];
        let c = s.arch().unwrap();
        assert_eq!((c.vertex.weights_on_chip, c.opt.tile_f), (false, 32));
        s.preset = "none".into();
        assert!(s.arch().is_err());
    }
}
