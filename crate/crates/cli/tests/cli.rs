use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn grip(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grip")).args(args).current_dir(cwd).output().expect("spawn grip")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: [&str; 6] = ["--dims", "32,16,8", "--sample-sizes", "6,3", "--samples", "12"];

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    [base, extra].concat()
}

#[test]
fn run_on_chain_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("chain.txt"), "0 1\n1 0\n1 2\n2 1\n").unwrap();
    let before = fs::read(dir.path().join("chain.txt")).unwrap();
    for out in ["a", "b"] {
        ok(&grip(&with(&["run", "--graph", "chain.txt", "--targets", "0,1,2", "--out", out], &SMALL), dir.path()));
    }
    for f in ["embeddings.bin", "report.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read(dir.path().join("chain.txt")).unwrap(), before);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/report.json")).unwrap()).unwrap();
    assert_eq!(report["dims"], serde_json::json!([32, 16, 8]));
    assert!(report["timing"]["total_cycles"].as_u64().unwrap() > 0);
}

#[test]
fn default_dims_echo_in_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&grip(&["run", "--synthetic", "300:6", "--targets", "5", "--out", "o"], dir.path()));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(report["dims"], serde_json::json!([602, 512, 256]));
    assert_eq!(report["sample_sizes"], serde_json::json!([25, 10]));
}

#[test]
fn golden_csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let syn = ["--synthetic", "200:6:power-law"];
    let lat = ok(&grip(&with(&with(&["latency-dist"], &syn), &SMALL), dir.path()));
    assert_eq!(lat.lines().next().unwrap(), "target,neighborhood,cycles,latency_us");
    assert!(lat.lines().last().unwrap().starts_with("# min_us="));
    let sw = ok(&grip(&with(&with(&["sweep", "--sweep", "opt.tile_m=2,1", "--sweep", "channels=1,2"], &syn), &SMALL), dir.path()));
    let lines: Vec<&str> = sw.lines().collect();
    assert_eq!(
        lines[0],
        "opt.tile_m,channels,p99_us,median_us,load_cycles,edge_accumulate_cycles,vertex_accumulate_cycles,update_cycles,vertex_fraction"
    );
    let keys: Vec<&str> = lines[1..].iter().map(|l| &l[..3]).collect();
    assert_eq!(keys, ["1,1", "1,2", "2,1", "2,2"]);
    let cp = ok(&grip(&with(&with(&["compare-presets"], &syn), &SMALL), dir.path()));
    assert_eq!(cp.lines().next().unwrap(), "group,name,p99_us,speedup,step_speedup");
    assert!(cp.lines().any(|l| l.starts_with("prior-work,grip-default,")));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for fmt in ["csv", "json"] {
        let args = with(&["latency-dist", "--synthetic", "300:8:uniform", "--seed", "7", "--format", fmt], &SMALL);
        assert_eq!(ok(&grip(&args, dir.path())), ok(&grip(&args, dir.path())));
    }
}

#[test]
fn file_outputs_and_stage_commands() {
    let dir = tempfile::tempdir().unwrap();
    ok(&grip(&["gen", "--synthetic", "120:4", "--out", "g"], dir.path()));
    let stats = ok(&grip(&["ingest", "--graph", "g/graph.csr", "--sample-sizes", "4,2"], dir.path()));
    assert!(stats.contains("\"num_vertices\": 120"), "{stats}");
    ok(&grip(&["features", "--graph", "g/graph.csr", "--dim", "16", "--out", "f"], dir.path()));
    ok(&grip(&["nodeflow", "--graph", "g/graph.csr", "--targets", "1,2", "--sample-sizes", "4,2", "--out", "n"], dir.path()));
    assert!(dir.path().join("n/nodeflow.bin").exists());
    let run = ["run", "--graph", "g/graph.csr", "--features", "f/features.bin", "--dims", "16,8,4", "--sample-sizes", "4,2"];
    ok(&grip(&with(&run, &["--targets", "3", "--out", "r"]), dir.path()));
    ok(&grip(&["latency-dist", "--synthetic", "120:4", "--samples", "5", "--sample-sizes", "4,2", "--dims", "16,8,4", "--out", "l"], dir.path()));
    assert!(fs::read_to_string(dir.path().join("l/latency.csv")).unwrap().starts_with("target,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| grip(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["sweep", "--synthetic", "50:3", "--sweep", "no.such=1"]), 2);
    assert_eq!(code(&["latency-dist", "--synthetic", "50:3", "--preset", "nope"]), 2);
    assert_eq!(code(&["validate-config", "--set", "vertex.rows=0"]), 2);
    assert_eq!(code(&["run", "--graph", "absent.txt", "--out", "o"]), 3);
    fs::write(dir.path().join("bad.csr"), b"garbage").unwrap();
    assert_eq!(code(&["ingest", "--graph", "bad.csr"]), 3);
    assert_eq!(code(&["bogus-subcommand"]), 2);
    assert_eq!(code(&["validate-config"]), 0);
}

#[test]
fn validate_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&grip(&["validate-config", "--preset", "tpu-plus", "--set", "opt.tile_f=32"], dir.path()));
    fs::write(dir.path().join("c.txt"), &text).unwrap();
    assert_eq!(ok(&grip(&["validate-config", "--config", "c.txt"], dir.path())), text);
}
