//! Command-line surface. Every command reads its inputs from flags and a
//! JSON config and writes files atomically, so a failed command leaves no
//! partial output behind.

pub mod config;
pub mod reproduce;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, OutputPaths, SimOptions};

use crate::dos::{generate, verify_signal, DoSBudget, DoSSignal, DoSStats, Verdict};
use crate::error::{Error, Result};
use crate::sim::{audit, run, AuditReport, SimTrace};
use crate::synthesis::DesignReport;

#[derive(Debug, Parser)]
#[command(name = "dos-consensus", version, about = "Quantized consensus under denial-of-service attacks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize zoom factors, quantizer range and DoS tolerance.
    Synthesize(SynthesizeArgs),
    /// Generate a DoS signal that respects a budget.
    GenDos(GenDosArgs),
    /// Simulate the closed loop and audit the trace.
    Simulate(SimulateArgs),
    /// Recompute the benchmark's reported numbers.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenDosArgs {
    /// Supplies the budget, sampling period, horizon and seed unless
    /// overridden below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long = "tau-d")]
    pub tau_d: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Sampling period, used for the feasibility check.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Horizon in seconds.
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Trace CSV path, or the output directory in batch mode.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add one column per state component to the trace.
    #[arg(long)]
    pub full_state: bool,
    /// A report written by `synthesize`, used instead of synthesizing.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Number of independent runs with seeds `seed-base .. seed-base + runs`.
    #[arg(long, requires = "seed_base")]
    pub runs: Option<u64>,
    #[arg(long, requires = "runs")]
    pub seed_base: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Also write the summary as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Output of `gen-dos`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedSignal {
    pub budget: DoSBudget,
    pub delta: f64,
    pub horizon: f64,
    pub seed: u64,
    pub signal: DoSSignal,
    pub verdict: Verdict,
    pub stats: DoSStats,
    pub summary: String,
}

/// Audit file of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub seed: u64,
    pub dos: DoSSignal,
    /// The signal checked against the configured budget.
    pub verdict: Verdict,
    pub audit: AuditReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchEntry {
    pub seed: u64,
    pub trace: String,
    pub audit: String,
    pub overflow_count: usize,
    pub envelope_violations: usize,
    pub final_error: f64,
    pub clean: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSummary {
    pub runs: u64,
    pub seed_base: u64,
    pub clean_runs: usize,
    pub entries: Vec<BatchEntry>,
}

/// Process exit status for an error: 2 for malformed input, 3 when the
/// mathematics rules the request out, 4 for a broken internal invariant.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Json(_)
        | Error::Config(_)
        | Error::Dimension(_)
        | Error::NotSquare { .. }
        | Error::NonFinite { .. }
        | Error::Parameter(_)
        | Error::Graph(_) => 2,
        Error::Precondition(_) | Error::InfeasibleBudget { .. } | Error::Certificate(_) | Error::NoConvergence(_) => 3,
        Error::Inconsistency(_) => 4,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synthesize(a) => cmd_synthesize(&a, out, err),
        Command::GenDos(a) => cmd_gen_dos(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Reproduce(a) => cmd_reproduce(&a, out),
    }
}

pub fn cmd_synthesize(a: &SynthesizeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let report = cfg.synthesize()?;
    let bytes = to_json(&report)?;
    match a.out.as_ref().or(cfg.output.report.as_ref()) {
        Some(p) => write_atomic(p, &bytes)?,
        None => out.write_all(&bytes)?,
    }
    for c in report.checks().iter().filter(|c| !c.passed) {
        writeln!(err, "warning: check '{}' failed: {}", c.name, c.detail)?;
    }
    Ok(())
}

pub fn cmd_gen_dos(a: &GenDosArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let base = cfg.as_ref().map(|c| c.budget);
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
        flag.or(from)
            .ok_or_else(|| Error::Config(format!("--{name} is required without --config")))
    };
    let eta = pick(a.eta, base.map(|b| b.eta), "eta")?;
    let tau_d = pick(a.tau_d, base.map(|b| b.tau_d), "tau-d")?;
    let kappa = pick(a.kappa, base.map(|b| b.kappa), "kappa")?;
    let t = pick(a.t, base.map(|b| b.t), "T")?;
    let delta = pick(a.delta, cfg.as_ref().map(|c| c.plant.delta), "delta")?;
    let horizon = pick(a.horizon, cfg.as_ref().map(|c| c.horizon_seconds()), "horizon")?;
    let seed = a.seed.or(cfg.as_ref().map(|c| c.sim.seed)).unwrap_or(0);
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Parameter(format!("delta must be > 0, got {delta}")));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::Parameter(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let load = 1.0 / t + delta / tau_d;
    if t > 0.0 && tau_d > 0.0 && load >= 1.0 {
        return Err(Error::InfeasibleBudget { load });
    }
    let budget = DoSBudget::new(eta, tau_d, kappa, t)?;

    let signal = generate(&budget, horizon, seed);
    let stats = DoSStats::from_signal(&signal, horizon);
    let g = GeneratedSignal {
        verdict: verify_signal(&signal, &budget, horizon),
        summary: stats.to_string(),
        budget,
        delta,
        horizon,
        seed,
        signal,
        stats,
    };
    let bytes = to_json(&g)?;
    match &a.out {
        Some(p) => write_atomic(p, &bytes),
        None => Ok(out.write_all(&bytes)?),
    }
}

struct RunOutput {
    seed: u64,
    trace: SimTrace,
    record: RunRecord,
}

fn simulate_one(cfg: &ExperimentConfig, design: &DesignReport, seed: u64) -> Result<RunOutput> {
    let sc = cfg.sim_config(design, seed)?;
    let trace = run(&sc)?;
    let report = audit(&trace, design)?;
    if !report.consistency.passed() || report.theta_rule_violations > 0 {
        return Err(Error::Inconsistency(format!(
            "seed {seed}: {} recursion mismatches (first at step {:?}), {} reset violations, {} theta rule violations",
            report.consistency.failures,
            report.consistency.first_failure,
            report.consistency.reset_violations,
            report.theta_rule_violations
        )));
    }
    let verdict = verify_signal(&sc.dos, &cfg.budget, cfg.horizon_seconds());
    Ok(RunOutput {
        seed,
        trace,
        record: RunRecord {
            seed,
            dos: sc.dos,
            verdict,
            audit: report,
        },
    })
}

fn csv_bytes(t: &SimTrace, full_state: bool) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf, full_state)?;
    Ok(buf)
}

/// `<dir>/<stem>.audit.json` next to a trace path.
pub fn audit_path_for(trace: &Path) -> PathBuf {
    let stem = trace.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trace".into());
    trace.with_file_name(format!("{stem}.audit.json"))
}

fn load_design(path: &Path) -> Result<DesignReport> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let given = a.design.as_deref().map(load_design).transpose()?;
    let design = cfg.resolve_design(given)?;

    if let (Some(runs), Some(base)) = (a.runs, a.seed_base) {
        let dir = a
            .out
            .clone()
            .ok_or_else(|| Error::Config("batch mode needs --out DIR".into()))?;
        let end = base
            .checked_add(runs)
            .ok_or_else(|| Error::Config("seed range overflows u64".into()))?;
        let results: Vec<RunOutput> = (base..end)
            .into_par_iter()
            .map(|seed| simulate_one(&cfg, &design, seed))
            .collect::<Result<_>>()?;
        let mut files = Vec::with_capacity(results.len() * 2 + 1);
        let mut entries = Vec::with_capacity(results.len());
        for r in &results {
            let trace = format!("run_{}.csv", r.seed);
            let audit = format!("run_{}.audit.json", r.seed);
            files.push((dir.join(&trace), csv_bytes(&r.trace, a.full_state)?));
            files.push((dir.join(&audit), to_json(&r.record)?));
            let au = &r.record.audit;
            entries.push(BatchEntry {
                seed: r.seed,
                trace,
                audit,
                overflow_count: au.overflow_count,
                envelope_violations: au.envelope_violations,
                final_error: au.final_error,
                clean: au.clean(),
            });
        }
        let summary = BatchSummary {
            runs,
            seed_base: base,
            clean_runs: entries.iter().filter(|e| e.clean).count(),
            entries,
        };
        files.push((dir.join("batch.json"), to_json(&summary)?));
        std::fs::create_dir_all(&dir)?;
        for (p, bytes) in &files {
            write_atomic(p, bytes)?;
        }
        writeln!(out, "{} runs, {} clean, written to {}", runs, summary.clean_runs, dir.display())?;
        return Ok(());
    }

    let seed = a.seed.unwrap_or(cfg.sim.seed);
    let trace_path = a
        .out
        .clone()
        .or_else(|| cfg.output.trace.clone())
        .ok_or_else(|| Error::Config("no trace path: pass --out or set output.trace".into()))?;
    let audit_path = cfg.output.audit.clone().unwrap_or_else(|| audit_path_for(&trace_path));
    let r = simulate_one(&cfg, &design, seed)?;
    let csv = csv_bytes(&r.trace, a.full_state)?;
    let json = to_json(&r.record)?;
    write_atomic(&trace_path, &csv)?;
    write_atomic(&audit_path, &json)?;
    let au = &r.record.audit;
    writeln!(
        out,
        "{} steps, {} overflows, {} envelope violations; {}",
        au.steps, au.overflow_count, au.envelope_violations, au.dos_summary
    )?;
    Ok(())
}

pub fn cmd_reproduce(a: &ReproduceArgs, out: &mut dyn Write) -> Result<()> {
    let s = reproduce::summary()?;
    if let Some(p) = &a.out {
        write_atomic(p, &to_json(&s)?)?;
    }
    out.write_all(s.render().as_bytes())?;
    Ok(())
}
