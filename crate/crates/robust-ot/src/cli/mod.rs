//! Command-line surface of the `robust-ot` binary.
//!
//! Exit codes: 0 success, 2 parse error, 3 shape error, 4 non-convergence,
//! 5 configuration error.

pub mod bench;
pub mod contraction;
pub mod io;
pub mod marginals;
pub mod report;
pub mod solve;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{Regularization, ScheduleMode, SolverConfig, StopRule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopArg {
    /// Fixed iteration count: k_required for --epsilon, --max-iter for --eta.
    Theorem,
    /// Stop once a full round moves the potentials by at most --tol.
    Residual,
}

/// Flags shared by every command.
#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel sweeps.
    #[arg(long, env = "ROBUST_OT_THREADS")]
    pub threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Omit wall times and the timestamp so reports are byte-identical.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, conflicts_with = "eta", required_unless_present = "eta")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = StopArg::Theorem)]
    pub stop: StopArg,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

/// Iteration budget of `--stop residual` when `--max-iter` is absent.
pub const DEFAULT_RESIDUAL_BUDGET: usize = 1_000_000;

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig> {
        let reg = match (self.epsilon, self.eta) {
            (Some(e), None) => Regularization::Epsilon(e),
            (None, Some(e)) => Regularization::Eta(e),
            _ => return Err(Error::Config("pass exactly one of --epsilon and --eta".into())),
        };
        let mut config = match (self.stop, reg) {
            (StopArg::Theorem, Regularization::Epsilon(eps)) => {
                let c = SolverConfig::theorem(self.tau, eps);
                match self.max_iter {
                    Some(m) => c.with_max_iter(m),
                    None => c,
                }
            }
            (StopArg::Theorem, Regularization::Eta(eta)) => {
                let iters = self
                    .max_iter
                    .ok_or_else(|| Error::Config("--eta with --stop theorem needs --max-iter".into()))?;
                SolverConfig::manual(self.tau, eta, iters)
            }
            (StopArg::Residual, reg) => SolverConfig {
                regularization: reg,
                schedule: ScheduleMode::Manual,
                ..SolverConfig::manual(self.tau, 1.0, self.max_iter.unwrap_or(DEFAULT_RESIDUAL_BUDGET))
            }
            .with_stop(StopRule::DualResidual(self.tol)),
        };
        config.trace_stride = None;
        Ok(config)
    }

    pub fn snapshot(&self, threads: Option<usize>) -> serde_json::Value {
        json!({
            "tau": self.tau,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "max_iter": self.max_iter,
            "stop": match self.stop { StopArg::Theorem => "theorem", StopArg::Residual => "residual" },
            "tol": self.tol,
            "threads": threads,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "robust-ot", version, about = "Robust optimal transport solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem from CSV inputs and write a JSON report.
    Solve(solve::SolveArgs),
    /// Theoretical against empirical iteration counts over an ε sweep.
    BenchIters(bench::BenchArgs),
    /// Marginals of the ROT, RSOT and UOT solutions for two histograms.
    CompareMarginals(marginals::MarginalArgs),
    /// Contraction ratios of the barycenter iteration.
    Contraction(contraction::ContractionArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Solve(a) => &a.common,
            Command::BenchIters(a) => &a.common,
            Command::CompareMarginals(a) => &a.common,
            Command::Contraction(a) => &a.common,
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // A pool that already exists (a second call in one process) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn execute(command: &Command) -> Result<()> {
    init_threads(command.common().threads)?;
    match command {
        Command::Solve(a) => solve::cmd_solve(a),
        Command::BenchIters(a) => bench::cmd_bench_iters(a),
        Command::CompareMarginals(a) => marginals::cmd_compare_marginals(a),
        Command::Contraction(a) => contraction::cmd_contraction(a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("robust-ot").chain(args.iter().copied()))
    }

    #[test]
    fn epsilon_and_eta_conflict() {
        assert!(parse(&["solve", "rsot", "--epsilon", "0.1", "--eta", "0.1"]).is_err());
        assert!(parse(&["solve", "rsot"]).is_err());
        assert!(parse(&["solve", "rsot", "--eta", "0.1"]).is_ok());
    }

    #[test]
    fn config_mapping() {
        let Command::Solve(s) = parse(&["solve", "rsot", "--eta", "0.1"]).unwrap().command else {
            unreachable!()
        };
        assert!(matches!(s.solver.config(), Err(Error::Config(_))));
        let Command::Solve(s) = parse(&["solve", "rot", "--eta", "0.1", "--stop", "residual", "--tol", "1e-6"])
            .unwrap()
            .command
        else {
            unreachable!()
        };
        let c = s.solver.config().unwrap();
        assert_eq!(c.stop, StopRule::DualResidual(1e-6));
        assert_eq!(c.max_iter, DEFAULT_RESIDUAL_BUDGET);
        assert_eq!(c.regularization, Regularization::Eta(0.1));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["robust-ot", "solve", "rsot"]), 2);
        assert_eq!(run(["robust-ot", "--help"]), 0);
        assert_eq!(run(["robust-ot", "solve", "rsot", "--eta", "0.1"]), 5);
    }
}
