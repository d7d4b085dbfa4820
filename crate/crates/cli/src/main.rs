//! Command line front end: solves a configured scenario and writes its
//! artifacts, or runs the built-in property checks.

mod config;
mod output;
mod selftest;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use transport_control::solvers::{solve, SolverStatus};

use crate::config::RunConfig;

/// Exit status of a run that hit `max_iter`.
const EXIT_MAX_ITER: u8 = 2;
/// Exit status of a run classified as diverged.
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "transport-control", version, about = "Optimal control with a Wasserstein prior")]
struct Cli {
    /// Log filter, e.g. `info` or `transport_control=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario described by a JSON file.
    Run {
        config: PathBuf,
        /// Output directory; overrides `outputs` in the file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check derivatives, transport costs and mass balance on small instances.
    Selftest {
        #[arg(long, hide = true, default_value_t = 1.0, allow_negative_numbers = true)]
        theta_sign: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).format_timestamp(None).init();
    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Selftest { theta_sign } => selftest(selftest::Options { theta_sign }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(path: &PathBuf, out: Option<PathBuf>) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let cfg = RunConfig::from_json(&text)?;
    let solver = cfg.solver()?;
    let scenario = cfg.scenario()?.build().context("cannot build scenario")?;
    info!("{} sites, {} mesh nodes", scenario.problem.n(), scenario.system.mesh().num_nodes());
    let report = solve(&scenario.problem, &solver)?;
    let ev = scenario.problem.evaluate(&report.xi)?;
    let dir = out.or(cfg.outputs).unwrap_or_else(|| PathBuf::from("out"));
    output::write_all(&dir, &scenario, &report, &ev)?;
    println!(
        "{}: {} after {} iterations, |r|_inf = {:.3e}, J = {:.6e}, outputs in {}",
        report.method.as_str(),
        report.status.as_str(),
        report.iterations,
        report.residual_inf,
        report.j,
        dir.display()
    );
    Ok(match report.status {
        SolverStatus::Converged => ExitCode::SUCCESS,
        SolverStatus::MaxIterations => ExitCode::from(EXIT_MAX_ITER),
        SolverStatus::Diverged => ExitCode::from(EXIT_DIVERGED),
    })
}

fn selftest(opts: selftest::Options) -> Result<ExitCode> {
    let checks = selftest::run(opts)?;
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if checks.iter().all(|c| c.pass) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
