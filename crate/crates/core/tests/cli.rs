//! The binary end to end: exit codes, determinism, self-consumption of
//! every emitted JSON, and atomic output.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dos_consensus::benchmark::{self, AReading};
use dos_consensus::cli::reproduce::Summary;
use dos_consensus::cli::{exit_code, BatchSummary, ExperimentConfig, GeneratedSignal, OutputPaths, RunRecord, SimOptions};
use dos_consensus::dos::DoSBudget;
use dos_consensus::error::Error;
use dos_consensus::matops::Matrix;
use dos_consensus::synthesis::{DesignOptions, DesignReport, Plant};
use dos_consensus::topology::{Graph, GraphSpec};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dos-consensus")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, cfg: &ExperimentConfig) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn benchmark_config() -> ExperimentConfig {
    ExperimentConfig {
        plant: benchmark::leaderless_plant(AReading::Reconciled),
        graph: GraphSpec::from_graph(&benchmark::graph(), None),
        budget: DoSBudget::new(1.0, 20.0, 0.1, 100.0).unwrap(),
        dos: None,
        design: DesignOptions::default().with_gamma1(0.8).with_d0(0.785),
        report: None,
        sim: SimOptions::default(),
        output: OutputPaths::default(),
    }
}

fn small_config() -> ExperimentConfig {
    let plant = Plant::new(
        Matrix::from_rows(&[[1.02, 0.1], [0.0, 0.97]]).unwrap(),
        Matrix::identity(2),
        Matrix::diag(&[0.3, 0.3]),
        0.1,
        1.0,
        0.5,
    )
    .unwrap();
    let ring = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
    ExperimentConfig {
        plant,
        graph: GraphSpec::from_graph(&ring, None),
        budget: DoSBudget::new(1.0, 2.5, 0.1, 15.0).unwrap(),
        dos: None,
        design: DesignOptions::default(),
        report: None,
        sim: SimOptions {
            horizon_steps: 45,
            ..SimOptions::default()
        },
        output: OutputPaths::default(),
    }
}

#[test]
fn synthesize_reports_tolerance_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &benchmark_config());
    let a = bin(&["synthesize", "--config", &cfg]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = bin(&["synthesize", "--config", &cfg]);
    assert_eq!(a.stdout, b.stdout);
    let report: DesignReport = serde_json::from_slice(&a.stdout).unwrap();
    assert!((report.dos_tolerance() - 0.1048).abs() < 1e-3);
    assert_eq!(serde_json::to_vec_pretty(&report).unwrap(), a.stdout[..a.stdout.len() - 1]);

    let out = dir.path().join("report.json");
    let c = bin(&["synthesize", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&c), 0);
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
}

#[test]
fn synthesize_leader_follower() {
    let dir = TempDir::new().unwrap();
    let mut c = benchmark_config();
    c.plant = benchmark::leader_follower_plant(AReading::Reconciled);
    c.graph.leader_gains = Some(benchmark::LEADER_GAINS.to_vec());
    c.design = DesignOptions::default().with_gamma1(0.965).with_d0(0.96);
    let cfg = write_config(dir.path(), "cfg.json", &c);
    let o = bin(&["synthesize", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: DesignReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(matches!(report, DesignReport::LeaderFollower(_)));
    assert!((report.dos_tolerance() - 0.0169).abs() < 5e-4);
}

#[test]
fn zero_gain_on_unstable_plant_exits_3() {
    let dir = TempDir::new().unwrap();
    let mut c = small_config();
    c.plant.k = Matrix::zeros(2, 2);
    let cfg = write_config(dir.path(), "cfg.json", &c);
    let o = bin(&["synthesize", "--config", &cfg]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("rho(J(1))"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn schema_violations_exit_2_with_location() {
    let dir = TempDir::new().unwrap();
    let mut v = serde_json::to_value(small_config()).unwrap();
    v["sim"]["horizon"] = 10.into();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let o = bin(&["synthesize", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("unknown field `horizon`") && msg.contains("line"), "{msg}");

    std::fs::write(&p, "{ \"plant\": ").unwrap();
    assert_eq!(code(&bin(&["synthesize", "--config", p.to_str().unwrap()])), 2);

    let mut c = small_config();
    c.graph.edges.push((1, 9, 1.0));
    let cfg = write_config(dir.path(), "graph.json", &c);
    assert_eq!(code(&bin(&["synthesize", "--config", &cfg])), 2);

    assert_eq!(code(&bin(&["synthesize"])), 2);
    assert_eq!(code(&bin(&["no-such-command"])), 2);
}

#[test]
fn gen_dos_contract() {
    let dir = TempDir::new().unwrap();
    let args = ["gen-dos", "--eta", "1.5", "--tau-d", "1.5", "--kappa", "0.1", "--T", "13.33", "--delta", "0.1"];
    let run = |extra: &[&str]| bin(&[&args[..], extra].concat());
    let a = run(&["--horizon", "12", "--seed", "4"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, run(&["--horizon", "12", "--seed", "4"]).stdout);
    let g: GeneratedSignal = serde_json::from_slice(&a.stdout).unwrap();
    assert!(g.verdict.passed());
    assert!(g.summary.starts_with("|Ξ(0,12)| = "));
    assert_eq!(serde_json::to_vec_pretty(&g).unwrap(), a.stdout[..a.stdout.len() - 1]);
    assert_ne!(a.stdout, run(&["--horizon", "12", "--seed", "5"]).stdout);

    let empty: GeneratedSignal = serde_json::from_slice(&run(&["--horizon", "0"]).stdout).unwrap();
    assert!(empty.signal.is_empty());

    let out = dir.path().join("dos.json");
    let infeasible = bin(&[
        "gen-dos", "--eta", "1", "--tau-d", "0.15", "--kappa", "0", "--T", "3", "--delta", "0.1", "--horizon", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&infeasible), 3);
    assert!(!out.exists());

    // Budget, period, horizon and seed from a config file.
    let cfg = write_config(dir.path(), "cfg.json", &small_config());
    let o = bin(&["gen-dos", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let g: GeneratedSignal = serde_json::from_slice(&o.stdout).unwrap();
    assert!((g.horizon - 4.5).abs() < 1e-12);
    assert_eq!(g.delta, 0.1);
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn simulate_writes_trace_and_audit() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &small_config());
    let trace = dir.path().join("run.csv");
    let o = bin(&["simulate", "--config", &cfg, "--out", trace.to_str().unwrap(), "--seed", "3", "--full-state"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = read_csv(&trace);
    assert_eq!(header[..7], ["k", "t", "dos_flag", "theta", "max_qarg_inf", "overflow", "delta_inf"]);
    assert_eq!(header.len(), 7 + 8);
    assert_eq!(rows.len(), 46);
    // Seventeen significant digits survive a round trip.
    let theta: f64 = rows[5][3].parse().unwrap();
    assert_eq!(format!("{theta:.16e}"), rows[5][3]);

    let audit_path = dir.path().join("run.audit.json");
    let text = std::fs::read(&audit_path).unwrap();
    let rec: RunRecord = serde_json::from_slice(&text).unwrap();
    assert_eq!(rec.seed, 3);
    assert!(rec.verdict.passed());
    assert_eq!(rec.audit.overflow_count, 0);
    assert!(rec.audit.clean());
    assert_eq!(serde_json::to_vec_pretty(&rec).unwrap(), text[..text.len() - 1]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 overflows"));

    let again = dir.path().join("again.csv");
    let o = bin(&["simulate", "--config", &cfg, "--out", again.to_str().unwrap(), "--seed", "3", "--full-state"]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&trace).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn simulate_zero_states_and_given_design() {
    let dir = TempDir::new().unwrap();
    let mut c = small_config();
    c.sim.initial_states = Some(vec![vec![0.0, 0.0]; 4]);
    let cfg = write_config(dir.path(), "cfg.json", &c);
    let report = dir.path().join("design.json");
    assert_eq!(code(&bin(&["synthesize", "--config", &cfg, "--out", report.to_str().unwrap()])), 0);

    let trace = dir.path().join("zero.csv");
    let o = bin(&[
        "simulate", "--config", &cfg, "--design", report.to_str().unwrap(), "--out", trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = read_csv(&trace);
    assert!(rows.iter().all(|r| r[6].parse::<f64>().unwrap() == 0.0));

    // A leader-follower design cannot drive a leaderless graph.
    let mut lf = benchmark_config();
    lf.plant = benchmark::leader_follower_plant(AReading::Reconciled);
    lf.graph.leader_gains = Some(benchmark::LEADER_GAINS.to_vec());
    lf.design = DesignOptions::default();
    let lf_cfg = write_config(dir.path(), "lf.json", &lf);
    let lf_report = dir.path().join("lf_design.json");
    assert_eq!(code(&bin(&["synthesize", "--config", &lf_cfg, "--out", lf_report.to_str().unwrap()])), 0);
    let o = bin(&[
        "simulate", "--config", &cfg, "--design", lf_report.to_str().unwrap(), "--out", trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn overflow_is_data_not_failure() {
    let dir = TempDir::new().unwrap();
    let mut c = small_config();
    c.sim.r = Some(1);
    c.sim.horizon_steps = 40;
    c.sim.initial_states = Some(vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![0.5, 0.5], vec![-0.5, 0.0]]);
    let cfg = write_config(dir.path(), "cfg.json", &c);
    let trace = dir.path().join("starved.csv");
    let o = bin(&["simulate", "--config", &cfg, "--out", trace.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rec: RunRecord = serde_json::from_slice(&std::fs::read(dir.path().join("starved.audit.json")).unwrap()).unwrap();
    assert!(rec.audit.overflow_count > 0);
}

#[test]
fn failed_simulation_leaves_no_files() {
    let dir = TempDir::new().unwrap();
    let mut c = small_config();
    c.sim.theta0 = Some(1e-9);
    let cfg = write_config(dir.path(), "cfg.json", &c);
    let trace = dir.path().join("never.csv");
    let o = bin(&["simulate", "--config", &cfg, "--out", trace.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let files: Vec<PathBuf> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files, vec![dir.path().join("cfg.json")]);

    let missing = dir.path().join("no/such/dir/run.csv");
    let o = bin(&["simulate", "--config", &cfg, "--out", missing.to_str().unwrap()]);
    assert_ne!(code(&o), 0);
}

#[test]
fn batch_runs_are_keyed_by_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", &small_config());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = bin(&["simulate", "--config", &cfg, "--runs", "4", "--seed-base", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = std::fs::read(out_a.join("batch.json")).unwrap();
    let summary: BatchSummary = serde_json::from_slice(&text).unwrap();
    assert_eq!(summary.entries.iter().map(|e| e.seed).collect::<Vec<_>>(), vec![7, 8, 9, 10]);
    assert_eq!(summary.clean_runs, 4);
    for name in ["run_7.csv", "run_10.audit.json", "batch.json"] {
        assert_eq!(std::fs::read(out_a.join(name)).unwrap(), std::fs::read(out_b.join(name)).unwrap());
    }

    // The batch's run 8 is the single run with seed 8.
    let single = dir.path().join("single.csv");
    assert_eq!(code(&bin(&["simulate", "--config", &cfg, "--seed", "8", "--out", single.to_str().unwrap()])), 0);
    assert_eq!(std::fs::read(&single).unwrap(), std::fs::read(out_a.join("run_8.csv")).unwrap());

    assert_eq!(code(&bin(&["simulate", "--config", &cfg, "--runs", "2"])), 2);
}

#[test]
fn reproduce_prints_and_writes_summary() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("summary.json");
    let o = bin(&["reproduce", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("rho(A)") && text.contains("M search"));
    let s: Summary = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let row = |q: &str, reading: Option<&str>| {
        s.rows.iter().find(|r| r.quantity == q && r.reading.as_deref() == reading).unwrap().pass
    };
    assert!(row("rho(A)", Some("reconciled")));
    assert!(!row("rho(A)", Some("printed")));
    assert!(row("dos_tolerance(0.8, 6.7244)", None));
    assert!(row("bits(10223)", None) && row("bits(15150)", None));
}

#[test]
fn exit_code_contract() {
    assert_eq!(exit_code(&Error::Config("x".into())), 2);
    assert_eq!(exit_code(&Error::Graph("x".into())), 2);
    assert_eq!(exit_code(&Error::Precondition("x".into())), 3);
    assert_eq!(exit_code(&Error::InfeasibleBudget { load: 1.2 }), 3);
    assert_eq!(exit_code(&Error::Inconsistency("x".into())), 4);
    assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 1);
}
