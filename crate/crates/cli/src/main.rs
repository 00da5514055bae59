use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grip_core::exec::{exec_model, write_embeddings};
use grip_core::graph::{attach_features, graph_stats, save_csr, FeatureSource, Graph, GraphFormat, VertexId};
use grip_core::greta::{ModelKind, WeightSet};
use grip_core::harness::{
    compare_presets, latency_distribution, sample_targets, sweep, write_presets_csv, write_sweep_csv, Axis, DatasetSpec,
    ExperimentSpec,
};
use grip_core::nodeflow::{build_nodeflow, write_nodeflows};
use grip_core::timing::{apply_preset, run_timed, ArchConfig, TimingReport};
use grip_core::Error;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "grip", version, about = "GNN inference accelerator simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load a graph file, print its statistics and optionally store it as binary CSR.
    Ingest(Common),
    /// Generate a synthetic graph and store it as binary CSR.
    Gen(Common),
    /// Write a seeded random feature matrix for a graph.
    Features {
        #[command(flatten)]
        common: Common,
        /// Feature width; defaults to the model input dimension.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Sample the nodeflows of a target batch and write them out.
    Nodeflow(Common),
    /// Functional and timed inference of a target batch.
    Run(Common),
    /// Per-vertex latency over uniformly sampled targets.
    LatencyDist(Common),
    /// One latency distribution per point of the sweep grid.
    Sweep(Common),
    /// Feature breakdown, schedule ablation and prior-work presets.
    ComparePresets(Common),
    /// Check an architecture configuration and print it in canonical form.
    ValidateConfig(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "gcn")]
    model: String,
    /// Graph file; binary CSR when the extension is .csr or .bin.
    #[arg(long, conflicts_with = "synthetic")]
    graph: Option<PathBuf>,
    /// Overrides the format guessed from the extension.
    #[arg(long)]
    graph_format: Option<String>,
    /// Synthetic graph as n:deg:kind.
    #[arg(long)]
    synthetic: Option<String>,
    /// Feature matrix file; seeded random features otherwise.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Configuration file applied before the preset overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "grip-default")]
    preset: String,
    /// key=value architecture override, repeatable.
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// key=v1,v2,... sweep axis, repeatable.
    #[arg(long = "sweep")]
    sweep: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; results go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Layer dimensions, input first.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Neighbors sampled per layer, outermost first.
    #[arg(long, value_delimiter = ',')]
    sample_sizes: Option<Vec<usize>>,
    /// Explicit targets for nodeflow and run; sampled from --samples otherwise.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<VertexId>>,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Format(_) | Error::Capacity(_) | Error::Shape(_) => 3,
            Error::Invariant(_) | Error::Schedule(_) => 4,
            Error::Parse { .. } | Error::Param(_) | Error::Unknown { .. } | Error::Program(_) => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn spec_error(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

impl Common {
    fn dataset(&self) -> CliResult<DatasetSpec> {
        match (&self.graph, &self.synthetic) {
            (Some(path), _) => {
                let format = match &self.graph_format {
                    Some(f) => f.parse()?,
                    None => match path.extension().and_then(|e| e.to_str()) {
                        Some("csr" | "bin") => GraphFormat::BinaryCsr,
                        _ => GraphFormat::EdgeList,
                    },
                };
                Ok(DatasetSpec::File { path: path.clone(), format })
            }
            (None, Some(s)) => Ok(s.parse()?),
            (None, None) => Err(spec_error("one of --graph or --synthetic is required")),
        }
    }

    fn spec(&self) -> CliResult<ExperimentSpec> {
        let model: ModelKind = self.model.parse()?;
        let mut s = ExperimentSpec::new(model, self.dataset()?);
        s.preset = self.preset.clone();
        s.overrides = self.set.clone();
        s.sweep = self.sweep.iter().map(|a| a.parse()).collect::<Result<Vec<Axis>, _>>()?;
        s.samples = self.samples;
        s.out = self.out.clone();
        s.seed = self.seed;
        if let Some(d) = &self.dims {
            s.dims = d.clone();
        }
        if let Some(k) = &self.sample_sizes {
            s.sample_sizes = k.clone();
        }
        Ok(s)
    }

    /// Config file or preset, then the overrides.
    fn arch(&self) -> CliResult<ArchConfig> {
        let mut cfg = match &self.config {
            Some(path) => ArchConfig::load(path)?,
            None => apply_preset(&self.preset)?,
        };
        cfg.apply_overrides(&self.set)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn targets(&self, g: &Graph) -> CliResult<Vec<VertexId>> {
        match &self.targets {
            Some(t) => {
                if let Some(&bad) = t.iter().find(|&&v| v as usize >= g.num_vertices()) {
                    return Err(spec_error(format!("target {bad} out of range for {} vertices", g.num_vertices())));
                }
                Ok(t.clone())
            }
            None => Ok(sample_targets(g, self.samples, self.seed)),
        }
    }
}

/// Writes `name` under the output directory, or to stdout.
fn emit(out: Option<&Path>, name: &str, body: &[u8]) -> CliResult {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), body)?;
        }
        None => std::io::stdout().write_all(body)?,
    }
    Ok(())
}

fn json(v: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn require_out<'a>(c: &'a Common, what: &str) -> CliResult<&'a Path> {
    c.out.as_deref().ok_or_else(|| spec_error(format!("{what} needs --out")))
}

#[derive(Serialize)]
struct RunReport<'a> {
    model: String,
    preset: &'a str,
    dims: &'a [usize],
    sample_sizes: &'a [usize],
    targets: &'a [VertexId],
    timing: TimingReport,
}

fn run(cmd: Cmd) -> CliResult {
    match cmd {
        Cmd::Ingest(c) => {
            let spec = c.spec()?;
            let g = spec.dataset.load(c.seed)?;
            let stats = graph_stats(&g, &spec.sample_sizes, c.seed, 32)?;
            if let Some(dir) = &c.out {
                fs::create_dir_all(dir)?;
                save_csr(&g, dir.join("graph.csr"))?;
            }
            std::io::stdout().write_all(&json(&stats))?;
        }
        Cmd::Gen(c) => {
            if c.synthetic.is_none() {
                return Err(spec_error("gen needs --synthetic n:deg:kind"));
            }
            let g = c.spec()?.dataset.load(c.seed)?;
            let dir = require_out(&c, "gen")?;
            fs::create_dir_all(dir)?;
            save_csr(&g, dir.join("graph.csr"))?;
            println!("{} vertices, {} edges", g.num_vertices(), g.num_edges());
        }
        Cmd::Features { common: c, dim } => {
            let spec = c.spec()?;
            let g = spec.dataset.load(c.seed)?;
            let store = attach_features(&g, dim.unwrap_or(spec.dims[0]), &FeatureSource::SeededRandom(c.seed))?;
            let dir = require_out(&c, "features")?;
            fs::create_dir_all(dir)?;
            store.save(dir.join("features.bin"))?;
        }
        Cmd::Nodeflow(c) => {
            let spec = c.spec()?;
            let plan = spec.plan()?;
            let g = spec.dataset.load(c.seed)?;
            let targets = c.targets(&g)?;
            let nfs = build_nodeflow(&g, &targets, &plan.sample_sizes, c.seed, plan.include_self)?;
            let mut buf = Vec::new();
            write_nodeflows(&nfs, &mut buf)?;
            emit(Some(require_out(&c, "nodeflow")?), "nodeflow.bin", &buf)?;
            for (i, nf) in nfs.iter().enumerate() {
                println!("layer {i}: {} inputs, {} outputs, {} edges", nf.num_inputs(), nf.num_outputs(), nf.num_edges());
            }
        }
        Cmd::Run(c) => {
            let spec = c.spec()?;
            let cfg = c.arch()?;
            let plan = spec.plan()?;
            let g = spec.dataset.load(c.seed)?;
            let targets = c.targets(&g)?;
            let source = c.features.clone().map_or(FeatureSource::SeededRandom(c.seed), FeatureSource::File);
            let feats = attach_features(&g, plan.dims[0], &source)?;
            let weights = WeightSet::seeded(&plan.weights, c.seed);
            let nfs = build_nodeflow(&g, &targets, &plan.sample_sizes, c.seed, plan.include_self)?;
            let (emb, timing) = run_timed(&plan, &nfs, &feats, &weights, &cfg)?;
            // Cross-check against the unscheduled execution.
            if exec_model(&plan, &nfs, &feats, &weights, &Default::default())? != emb {
                return Err(Error::Invariant("scheduled and unscheduled embeddings differ".into()).into());
            }
            let dir = require_out(&c, "run")?;
            let mut buf = Vec::new();
            write_embeddings(&emb.to_store()?, &mut buf)?;
            emit(Some(dir), "embeddings.bin", &buf)?;
            let report = RunReport {
                model: spec.model.to_string(),
                preset: &spec.preset,
                dims: &plan.dims,
                sample_sizes: &plan.sample_sizes,
                targets: &targets,
                timing,
            };
            emit(Some(dir), "report.json", &json(&report))?;
        }
        Cmd::LatencyDist(c) => {
            let spec = c.spec()?;
            let cfg = c.arch()?;
            let g = spec.dataset.load(c.seed)?;
            let summary = latency_distribution(&spec.plan()?, &g, &cfg, spec.samples, c.seed)?;
            match c.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    summary.write_csv(&mut buf)?;
                    emit(c.out.as_deref(), "latency.csv", &buf)?;
                }
                Format::Json => emit(c.out.as_deref(), "latency.json", &json(&summary))?,
            }
        }
        Cmd::Sweep(c) => {
            let spec = c.spec()?;
            if spec.sweep.is_empty() {
                return Err(spec_error("sweep needs at least one --sweep key=v1,v2,..."));
            }
            let cfg = c.arch()?;
            grip_core::harness::check_axes(&spec.sweep, &cfg, &spec.dims)?;
            let g = spec.dataset.load(c.seed)?;
            let rows = sweep(&spec.workload(&g)?, &cfg, &spec.sweep)?;
            match c.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_sweep_csv(&spec.sweep, &rows, &mut buf)?;
                    emit(c.out.as_deref(), "sweep.csv", &buf)?;
                }
                Format::Json => emit(c.out.as_deref(), "sweep.json", &json(&rows))?,
            }
        }
        Cmd::ComparePresets(c) => {
            let spec = c.spec()?;
            let g = spec.dataset.load(c.seed)?;
            let rows = compare_presets(&spec.workload(&g)?)?;
            match c.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_presets_csv(&rows, &mut buf)?;
                    emit(c.out.as_deref(), "presets.csv", &buf)?;
                }
                Format::Json => emit(c.out.as_deref(), "presets.json", &json(&rows))?,
            }
        }
        Cmd::ValidateConfig(c) => {
            let cfg = c.arch()?;
            emit(c.out.as_deref(), "config.txt", cfg.to_text().as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
