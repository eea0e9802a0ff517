//! Batch runner behind the `sphere-cq` binary.
//!
//! `run <config>` executes every configured method and writes, per method,
//! `<prefix>-<method>.csv` (the trace) and `<prefix>-<method>.json` (the
//! summary). `compare <config>` needs `method = both`, runs the two methods
//! from the same start point and also writes `<prefix>-compare.json`.
//!
//! Exit codes: 0 when every run converged, 2 when some run stopped at the
//! iteration cap, 1 on any error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{MethodChoice, RunConfig};
use crate::iteration::{run, Method, Problem, RunOutcome, StopReason, TraceRecord};
use crate::sphere::distance;

#[derive(Debug, Parser)]
#[command(name = "sphere-cq", version, about = "CQ and shrinking projection runs on the sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured method(s) and write traces and summaries.
    Run(RunArgs),
    /// Run both methods from the same start and write a comparison.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file.
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config output prefix.
    #[arg(long, value_name = "PREFIX")]
    pub out: Option<PathBuf>,
}

/// One summary object per method run.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub method: Method,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub final_point: Vec<f64>,
    pub final_residuals: Vec<f64>,
    #[serde(rename = "dist_to_known_PF", skip_serializing_if = "Option::is_none")]
    pub dist_to_known_pf: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodComparison {
    pub method: Method,
    pub stop_reason: StopReason,
    pub iterations: usize,
    /// Step at which the stop rule was met, if it was.
    pub iterations_to_tolerance: Option<usize>,
    pub final_max_residual: f64,
    pub total_solver_sweeps: usize,
    #[serde(rename = "dist_to_known_PF", skip_serializing_if = "Option::is_none")]
    pub dist_to_known_pf: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub seed: u64,
    pub methods: Vec<MethodComparison>,
    /// Geodesic distance between the two final points.
    pub final_point_distance: f64,
}

/// Trace as CSV: `n, dist_x1_xn, step_len, res_1..res_r, constraint_count,
/// solver_sweeps`, floats with 17 significant digits.
pub fn trace_csv(trace: &[TraceRecord], r: usize) -> String {
    let mut out = String::from("n,dist_x1_xn,step_len");
    for i in 1..=r {
        write!(out, ",res_{i}").unwrap();
    }
    out.push_str(",constraint_count,solver_sweeps\n");
    for rec in trace {
        write!(out, "{},{:.16e},{:.16e}", rec.n, rec.dist_x1_xn, rec.step_len).unwrap();
        for res in &rec.residuals {
            write!(out, ",{res:.16e}").unwrap();
        }
        writeln!(out, ",{},{}", rec.constraint_count, rec.solver_sweeps).unwrap();
    }
    out
}

pub fn summarize(p: &Problem, method: Method, outcome: &RunOutcome) -> crate::Result<Summary> {
    Ok(Summary {
        method,
        stop_reason: outcome.stop_reason,
        iterations: outcome.trace.last().map_or(0, |r| r.n),
        final_point: outcome.final_point.coords().to_vec(),
        final_residuals: p.family().residuals(&outcome.final_point)?,
        dist_to_known_pf: p
            .known_projection()
            .map(|pf| distance(&pf, &outcome.final_point)),
    })
}

fn output_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(format!("-{suffix}"));
    PathBuf::from(name)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s
}

struct MethodRun {
    method: Method,
    outcome: RunOutcome,
    summary: Summary,
}

/// Runs the methods on separate threads; results come back in input order.
fn run_methods(p: &Problem, cfg: &RunConfig, methods: &[Method]) -> anyhow::Result<Vec<MethodRun>> {
    let results: Vec<crate::Result<MethodRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = methods
            .iter()
            .map(|&method| {
                scope.spawn(move || {
                    let outcome = run(p, method, &cfg.stop)?;
                    let summary = summarize(p, method, &outcome)?;
                    Ok(MethodRun {
                        method,
                        outcome,
                        summary,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    });
    methods
        .iter()
        .zip(results)
        .map(|(m, r)| r.with_context(|| format!("{m} run failed")))
        .collect()
}

fn load(args: &RunArgs) -> anyhow::Result<(RunConfig, u64, PathBuf, Problem)> {
    let cfg = RunConfig::from_file(&args.config)
        .with_context(|| format!("invalid config {}", args.config.display()))?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let prefix = args.out.clone().unwrap_or_else(|| cfg.output.clone());
    let problem = cfg.problem(seed).context("building the problem")?;
    Ok((cfg, seed, prefix, problem))
}

fn write_runs(prefix: &Path, r: usize, runs: &[MethodRun]) -> anyhow::Result<()> {
    for mr in runs {
        let m = mr.method.as_str();
        write_file(&output_path(prefix, &format!("{m}.csv")), &trace_csv(&mr.outcome.trace, r))?;
        write_file(&output_path(prefix, &format!("{m}.json")), &to_json(&mr.summary))?;
    }
    Ok(())
}

fn report(runs: &[MethodRun]) -> i32 {
    for mr in runs {
        let s = &mr.summary;
        let pf = s
            .dist_to_known_pf
            .map_or(String::new(), |d| format!(", distance to P_F x1 {d:.3e}"));
        println!("{}: {} after {} iterations{pf}", s.method, s.stop_reason, s.iterations);
    }
    if runs
        .iter()
        .all(|mr| mr.summary.stop_reason == StopReason::Converged)
    {
        0
    } else {
        2
    }
}

pub fn cmd_run(args: &RunArgs) -> anyhow::Result<i32> {
    let (cfg, _, prefix, problem) = load(args)?;
    let runs = run_methods(&problem, &cfg, &cfg.method.methods())?;
    write_runs(&prefix, cfg.mappings.len(), &runs)?;
    Ok(report(&runs))
}

pub fn cmd_compare(args: &RunArgs) -> anyhow::Result<i32> {
    let (cfg, seed, prefix, problem) = load(args)?;
    if cfg.method != MethodChoice::Both {
        bail!("method: compare requires `method = both`");
    }
    let runs = run_methods(&problem, &cfg, &cfg.method.methods())?;
    write_runs(&prefix, cfg.mappings.len(), &runs)?;
    let methods = runs
        .iter()
        .map(|mr| MethodComparison {
            method: mr.method,
            stop_reason: mr.summary.stop_reason,
            iterations: mr.summary.iterations,
            iterations_to_tolerance: (mr.summary.stop_reason == StopReason::Converged)
                .then_some(mr.summary.iterations),
            final_max_residual: mr.summary.final_residuals.iter().copied().fold(0.0, f64::max),
            total_solver_sweeps: mr.outcome.trace.iter().map(|t| t.solver_sweeps).sum(),
            dist_to_known_pf: mr.summary.dist_to_known_pf,
        })
        .collect();
    let comparison = Comparison {
        seed,
        methods,
        final_point_distance: distance(&runs[0].outcome.final_point, &runs[1].outcome.final_point),
    };
    write_file(&output_path(&prefix, "compare.json"), &to_json(&comparison))?;
    let code = report(&runs);
    println!("final points differ by {:.3e}", comparison.final_point_distance);
    Ok(code)
}

/// Parses `args` (program name first), dispatches, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
