//! Command-line front end: scenario files in, time series and JSON
//! summaries out.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver instability,
//! 4 monitor or verification failure.

mod config;
mod run;
mod suites;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

pub use config::{
    DensityRecipe, DirichletMonitor, GridSection, InitialSection, MonitorSection, NameSection, OutputSection,
    PhysicsSection, ScenarioConfig, ScenarioSection, SolverChoice, SolverSection, StationaryConfig,
    StationarySection, VelocityRecipe,
};
pub use run::{failure_summary, predict, records_csv, run_scenario, stationary, write_atomic, Outcome, Status, CSV_HEADER};
pub use suites::{verify_suite, Suite, SuiteCheck, SuiteReport};

use crate::error::Result;
use crate::weights::{make_weight, verify_weight_seeded, DomainDescriptor, WeightField, DEFAULT_SAMPLES, DEFAULT_SEED};

/// Overrides the configured output directory when set.
pub const OUTPUT_DIR_ENV: &str = "QHD_LAB_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "qhd-lab", version, about = "Quantum hydrodynamics and NLS scenarios with blow-up monitors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solvers and monitors of a scenario file.
    Run { config: PathBuf },
    /// Run a built-in verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Initial-data report of a scenario file.
    Predict { config: PathBuf },
    /// Build and verify the canonical weight of a domain.
    Weights {
        #[arg(value_enum)]
        domain: DomainChoice,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Shoot a stationary profile.
    Stationary { config: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainChoice {
    Ball,
    Cylinder,
    Box,
    Interval,
}

impl DomainChoice {
    /// Ball `|x| ≤ 1`; cylinder `[−1, 1] × [0, 1]^{d−1}`; box `[0, 1]^d`
    /// with Dirichlet ends on the first axis.
    pub fn descriptor(self, dim: usize) -> Result<DomainDescriptor> {
        match self {
            DomainChoice::Ball => DomainDescriptor::ball(dim),
            DomainChoice::Cylinder => DomainDescriptor::cylinder(vec![(0.0, 1.0); dim.saturating_sub(1)]),
            DomainChoice::Box => DomainDescriptor::box_domain(vec![(0.0, 1.0); dim], 0),
            DomainChoice::Interval => Ok(DomainDescriptor::unit_interval()),
        }
    }
}

/// The configured directory unless the environment overrides it.
pub fn output_dir(configured: &str) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(configured))
}

/// Construction and verification report of a domain's weight.
pub fn weights_report(domain: DomainChoice, dim: usize, samples: usize, seed: u64) -> Result<(serde_json::Value, bool)> {
    let dom = domain.descriptor(dim)?;
    let w = make_weight(&dom)?;
    let centre: Vec<f64> = dom.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
    let d = dom.dim;
    let hess = w.hessian(&centre);
    let laplacian: f64 = (0..d).map(|i| hess[i * d + i]).sum();
    let report = verify_weight_seeded(&w, samples, seed);
    let passed = report.passed();
    let doc = json!({
        "domain": dom,
        "laplacian": laplacian,
        "g": w.g(&centre),
        "monge_ampere_determinant": w.monge_ampere_determinant(),
        "seed": seed,
        "report": report,
        "passed": passed,
    });
    Ok((doc, passed))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn finish(outcome: Outcome) -> i32 {
    for f in &outcome.files {
        println!("{}", f.display());
    }
    if outcome.status != Status::Success {
        if let Some(failed) = outcome.summary["monitors"]["failed"].as_array() {
            for f in failed {
                eprintln!("failed: {}", f.as_str().unwrap_or_default());
            }
        }
    }
    outcome.status.code()
}

fn report_error(e: &crate::Error) -> i32 {
    eprintln!("error: {e}");
    Status::of_error(e).code()
}

fn run_verb(path: &Path) -> i32 {
    let cfg = match ScenarioConfig::load(path) {
        Ok(c) => c,
        Err(e) => return report_error(&e),
    };
    let dir = output_dir(&cfg.output.dir);
    match run_scenario(&cfg, &dir) {
        Ok(o) => finish(o),
        Err(e) => {
            let path = dir.join(format!("{}.summary.json", cfg.prefix()));
            let doc = failure_summary(&cfg.scenario.name, &e);
            if let Ok(s) = serde_json::to_string_pretty(&doc) {
                let _ = write_atomic(&path, s.as_bytes());
            }
            report_error(&e)
        }
    }
}

/// Executes one command and returns the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { config } => run_verb(&config),
        Command::Verify { suite, seed } => {
            let r = verify_suite(suite, seed);
            print_json(&serde_json::to_value(&r).unwrap_or_default());
            if r.passed {
                0
            } else {
                Status::MonitorFailure.code()
            }
        }
        Command::Predict { config } => match ScenarioConfig::load(&config)
            .and_then(|cfg| predict(&cfg, &output_dir(&cfg.output.dir)))
        {
            Ok(o) => {
                print_json(&o.summary["hypotheses"]);
                o.status.code()
            }
            Err(e) => report_error(&e),
        },
        Command::Weights { domain, dim, samples, seed } => match weights_report(domain, dim, samples, seed) {
            Ok((doc, passed)) => {
                print_json(&doc);
                if passed {
                    0
                } else {
                    Status::MonitorFailure.code()
                }
            }
            Err(e) => report_error(&e),
        },
        Command::Stationary { config } => match StationaryConfig::load(&config)
            .and_then(|cfg| stationary(&cfg, &output_dir(&cfg.output.dir)))
        {
            Ok(o) => finish(o),
            Err(e) => report_error(&e),
        },
    }
}
