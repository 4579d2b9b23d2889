// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

//! `qouhc`: verification suites, norm tables and optimal-time estimates for
//! quantum Ornstein-Uhlenbeck semigroups on truncated Fock space.

mod config;
mod report;
mod suites;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{parse_tol, Format, KindArg, Suite, SuiteConfig};
use report::Report;

#[derive(Parser)]
#[command(
    name = "qouhc",
    version,
    about = "Numerical checks for quantum Ornstein-Uhlenbeck hypercontractivity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite over the parameter grid.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// L_p(rho) norms of the eigenbasis elements and of the witness.
    Norms {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Bisection estimate of the optimal hypercontractivity time.
    OptimalTime {
        /// Zero-mean class or all elements.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Concatenate JSON reports into one.
    ReportMerge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        no_timestamp: bool,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Comma-separated inverse temperatures.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Comma-separated exponents (at least 2).
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Fock-space truncation dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Largest total degree m+n of the eigenbasis.
    #[arg(long)]
    degree_cap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override `key=value`; a bare number sets the bisection tolerance.
    #[arg(long, value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    /// Random samples per supremum.
    #[arg(long)]
    budget: Option<usize>,
    /// Coordinate-ascent steps per sample.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads across grid points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Omit the timestamp and all wall times, for byte-identical reports.
    #[arg(long)]
    no_timestamp: bool,
    /// JSON file with the configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self, suite: Option<Suite>, kind: Option<KindArg>) -> Result<SuiteConfig, String> {
        let mut c = match &self.config {
            Some(path) => SuiteConfig::load(path)?,
            None => SuiteConfig::default(),
        };
        if suite.is_some() {
            c.suite = suite;
        }
        if let Some(v) = &self.beta {
            c.beta_grid = v.clone();
        }
        if let Some(v) = &self.p {
            c.p_grid = v.clone();
        }
        if let Some(v) = self.dim {
            c.dim = v;
        }
        if let Some(v) = self.degree_cap {
            c.degree_cap = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        for (k, v) in &self.tol {
            c.tol.insert(k.clone(), *v);
        }
        if let Some(v) = self.budget {
            c.budget = v;
        }
        if let Some(v) = self.steps {
            c.ascent_steps = v;
        }
        if let Some(v) = &self.out {
            c.output_path = Some(v.display().to_string());
        }
        if let Some(v) = self.format {
            c.format = v;
        }
        if let Some(k) = kind {
            c.kind = k;
        }
        c.validate()?;
        Ok(c)
    }
}

fn emit(report: &Report, format: Format, out: Option<&str>) -> Result<(), String> {
    match out {
        Some(path) => {
            let mut f =
                std::fs::File::create(path).map_err(|e| format!("cannot create {path}: {e}"))?;
            report
                .write(format, &mut f)
                .map_err(|e| format!("cannot write {path}: {e}"))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report
                .write(format, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|e| e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    let start = Instant::now();
    let (name, cfg, common, checks) = match cli.command {
        Command::ReportMerge {
            inputs,
            out,
            format,
            no_timestamp,
        } => {
            let mut reports = Vec::new();
            for path in &inputs {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                reports.push(
                    serde_json::from_str::<Report>(&text)
                        .map_err(|e| format!("invalid report {}: {e}", path.display()))?,
                );
            }
            let mut merged = Report::merge(reports);
            merged.finalize(!no_timestamp);
            emit(
                &merged,
                format,
                out.as_ref().map(|p| p.display().to_string()).as_deref(),
            )?;
            return Ok(merged.all_passed());
        }
        Command::Verify { suite, common } => {
            let cfg = common.resolve(Some(suite), None)?;
            let checks = suites::run_verify(suite, &cfg, common.jobs);
            ("verify", cfg, common, checks)
        }
        Command::Norms { common } => {
            let cfg = common.resolve(None, None)?;
            let checks = suites::run_norms(&cfg, common.jobs);
            ("norms", cfg, common, checks)
        }
        Command::OptimalTime { kind, common } => {
            let cfg = common.resolve(None, kind)?;
            let checks = suites::run_optimal_time(&cfg, common.jobs);
            ("optimal-time", cfg, common, checks)
        }
    };
    let config = serde_json::to_value(&cfg).map_err(|e| e.to_string())?;
    let mut report = Report::new(name, config, checks, start.elapsed().as_secs_f64());
    report.finalize(!common.no_timestamp);
    emit(&report, cfg.format, cfg.output_path.as_deref())?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!(
            "FAILED {} {}",
            c.id,
            serde_json::to_string(&c.inputs).unwrap_or_default()
        );
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
