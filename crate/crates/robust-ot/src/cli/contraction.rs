//! `contraction`: the ratios R_uv and R_uu of the barycenter iteration
//! measured against a reference run ten times longer.

use rayon::prelude::*;

use crate::barycenter::{solve_rsbp, solve_rsbp_observed, BarycenterProblem, ContractionTracker};
use crate::cli::io::{emit, format_float};
use crate::cli::CommonArgs;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::rng::{random_weights, stream, uniform_cost, uniform_simplex};

/// Denominators below this are treated as converged and give no ratio.
pub const MIN_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Clone, clap::Args)]
pub struct ContractionArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,10")]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.01)]
    pub eta: f64,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Iterations per trial; the reference runs ten times as many.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionRow {
    pub m: usize,
    pub trial: usize,
    pub k: usize,
    pub r_uv: Option<f64>,
    pub r_uu: Option<f64>,
}

/// Costs uniform on [0.01, 1], random measures and weights.
pub fn contraction_instance(m: usize, n: usize, seed: u64, trial: usize) -> Result<BarycenterProblem> {
    let mut rng = stream(&format!("contraction-m{m}"), seed, trial as u64);
    let costs = (0..m).map(|_| uniform_cost(n, 0.01, 1.0, &mut rng)).collect();
    let measures = (0..m).map(|_| uniform_simplex(n, 0.0, 1.0, &mut rng)).collect();
    let weights = random_weights(m, &mut rng);
    BarycenterProblem::new(costs, measures, weights)
}

pub fn trial_ratios(problem: &BarycenterProblem, tau: f64, eta: f64, iters: usize) -> Result<ContractionTracker> {
    let reference = solve_rsbp(problem, &SolverConfig::manual(tau, eta, 10 * iters).with_trace_stride(0))?.potentials;
    let mut tracker = ContractionTracker::new(reference, MIN_DENOMINATOR);
    solve_rsbp_observed(
        problem,
        &SolverConfig::manual(tau, eta, iters).with_trace_stride(0),
        &mut tracker,
    )?;
    Ok(tracker)
}

/// Rows ordered by m, trial, then k. R_uu starts at k = 2.
pub fn run_contraction(
    ms: &[usize],
    n: usize,
    tau: f64,
    eta: f64,
    trials: usize,
    iters: usize,
    seed: u64,
) -> Result<Vec<ContractionRow>> {
    if trials == 0 || n == 0 || ms.contains(&0) {
        return Err(Error::Config("trials, n and m must be positive".into()));
    }
    let jobs: Vec<(usize, usize)> = ms.iter().flat_map(|&m| (0..trials).map(move |t| (m, t))).collect();
    let per_job: Vec<Vec<ContractionRow>> = jobs
        .par_iter()
        .map(|&(m, trial)| {
            let p = contraction_instance(m, n, seed, trial)?;
            let t = trial_ratios(&p, tau, eta, iters)?;
            let uu: std::collections::HashMap<usize, Option<f64>> = t.ratios.r_uu.iter().copied().collect();
            Ok(t.ratios
                .r_uv
                .iter()
                .map(|&(k, r_uv)| ContractionRow {
                    m,
                    trial,
                    k,
                    r_uv,
                    r_uu: uu.get(&k).copied().flatten(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Largest (R_uv, R_uu) over the rows for one m.
pub fn max_ratios(rows: &[ContractionRow], m: usize) -> (Option<f64>, Option<f64>) {
    let pick = |f: fn(&ContractionRow) -> Option<f64>| {
        rows.iter().filter(|r| r.m == m).filter_map(f).reduce(f64::max)
    };
    (pick(|r| r.r_uv), pick(|r| r.r_uu))
}

pub fn rows_csv(rows: &[ContractionRow]) -> String {
    let mut s = String::from("m,trial,k,r_uv,r_uu\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.m,
            r.trial,
            r.k,
            r.r_uv.map(format_float).unwrap_or_default(),
            r.r_uu.map(format_float).unwrap_or_default()
        ));
    }
    s
}

pub fn cmd_contraction(args: &ContractionArgs) -> Result<()> {
    let rows = run_contraction(&args.m, args.n, args.tau, args.eta, args.trials, args.iters, args.common.seed)?;
    emit(args.common.out.as_deref(), &rows_csv(&rows))
}
