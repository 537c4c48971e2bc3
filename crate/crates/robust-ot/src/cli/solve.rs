//! `solve`: one RSOT, ROT, UOT or barycenter problem from CSV inputs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::barycenter::{solve_rsbp, BarycenterProblem};
use crate::cli::io::{emit, matrix_csv, read_cost, read_matrix, read_measure, read_vector, vector_csv};
use crate::cli::report::{to_json, RunManifest};
use crate::cli::{CommonArgs, SolverArgs};
use crate::config::{SolveReport, StopReason, StopRule};
use crate::error::{Error, Result};
use crate::lowrank::{solve_nys, NysProblem, PointCloud};
use crate::measure::{DiscreteMeasure, TransportPlan};
use crate::rot::{solve_rot, solve_uot};
use crate::rsot::solve_rsot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveKind {
    Rsot,
    Rot,
    Uot,
    Barycenter,
}

impl SolveKind {
    pub fn name(self) -> &'static str {
        match self {
            SolveKind::Rsot => "rsot",
            SolveKind::Rot => "rot",
            SolveKind::Uot => "uot",
            SolveKind::Barycenter => "barycenter",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct SolveArgs {
    pub kind: SolveKind,
    /// Cost matrix; repeat once per measure for the barycenter.
    #[arg(long = "cost")]
    pub costs: Vec<PathBuf>,
    /// Point cloud (one point per row) for the low-rank kernel path,
    /// squared Euclidean cost.
    #[arg(long, conflicts_with = "costs")]
    pub points: Option<PathBuf>,
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Barycenter input measure; repeat once per measure.
    #[arg(long = "measure")]
    pub measures: Vec<PathBuf>,
    /// Barycenter weights; uniform when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// CSV dump of the plan. For the barycenter, plan i goes to
    /// `<stem>_<i>.<ext>`.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// CSV dump of the barycenter weights.
    #[arg(long)]
    pub barycenter: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Serialize)]
struct LowRankInfo {
    rank: usize,
    diag_err: f64,
    factor_storage: usize,
    dense_fallback: bool,
    eps_prime: f64,
    threshold: f64,
    z: f64,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    manifest: RunManifest,
    report: &'a SolveReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    lowrank: Option<LowRankInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    barycenter: Option<Vec<f64>>,
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

fn same_len(n: usize, what: &Path, len: usize, reference: &str) -> Result<()> {
    if len != n {
        return Err(Error::Shape(format!(
            "{}: length {len} does not match {reference} (n = {n})",
            what.display()
        )));
    }
    Ok(())
}

fn indexed_path(base: &Path, i: usize) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{i}"),
    };
    base.with_file_name(name)
}

fn dump_plan(path: Option<&Path>, x: &TransportPlan) -> Result<()> {
    if let Some(p) = path {
        emit(Some(p), &matrix_csv(x.entries(), x.n()))?;
    }
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let config = args.solver.config()?;
    let mut manifest = RunManifest::new(
        &format!("solve {}", args.kind.name()),
        args.common.seed,
        args.solver.snapshot(args.common.threads),
        !args.common.no_timings,
    );
    let mut lowrank = None;
    let mut bary = None;
    let (mut report, plans) = match args.kind {
        SolveKind::Barycenter => {
            if args.costs.is_empty() || args.costs.len() != args.measures.len() {
                return Err(Error::Config(format!(
                    "the barycenter needs one --cost per --measure, got {} and {}",
                    args.costs.len(),
                    args.measures.len()
                )));
            }
            let mut costs = Vec::new();
            let mut measures = Vec::new();
            for (c, p) in args.costs.iter().zip(&args.measures) {
                manifest.add_input(c)?;
                manifest.add_input(p)?;
                let cost = read_cost(c)?;
                let m = read_measure(p)?;
                same_len(cost.n(), p, m.len(), &c.display().to_string())?;
                if let Some(first) = costs.first().map(|x: &crate::measure::CostMatrix| x.n()) {
                    same_len(first, c, cost.n(), &args.costs[0].display().to_string())?;
                }
                costs.push(cost);
                measures.push(m);
            }
            let m = costs.len();
            let weights = match &args.weights {
                Some(w) => {
                    manifest.add_input(w)?;
                    let w_vals = read_vector(w)?;
                    same_len(m, w, w_vals.len(), "the number of measures")?;
                    w_vals
                }
                None => vec![1.0 / m as f64; m],
            };
            let problem = BarycenterProblem::new(costs, measures, weights)?;
            let sol = solve_rsbp(&problem, &config)?;
            if let Some(p) = &args.barycenter {
                emit(Some(p), &vector_csv(sol.barycenter.weights()))?;
            }
            bary = Some(sol.barycenter.weights().to_vec());
            (sol.report, sol.plans)
        }
        kind => {
            let a_path = need(&args.a, "a")?;
            let b_path = need(&args.b, "b")?;
            let a = read_measure(a_path)?;
            let b = read_measure(b_path)?;
            if let Some(points) = &args.points {
                manifest.add_input(points)?;
                manifest.add_input(a_path)?;
                manifest.add_input(b_path)?;
                let cloud = PointCloud::new(read_matrix(points)?)?;
                same_len(cloud.len(), a_path, a.len(), &points.display().to_string())?;
                same_len(cloud.len(), b_path, b.len(), &points.display().to_string())?;
                let problem = match kind {
                    SolveKind::Rsot => NysProblem::Rsot,
                    SolveKind::Rot => NysProblem::Rot,
                    _ => return Err(Error::Config("the low-rank path solves rsot and rot only".into())),
                };
                let eps = args
                    .solver
                    .epsilon
                    .ok_or_else(|| Error::Config("the low-rank path needs --epsilon".into()))?;
                let sol = solve_nys(&cloud, &a, &b, problem, eps, config.tau, args.common.seed)?;
                lowrank = Some(LowRankInfo {
                    rank: sol.rank,
                    diag_err: sol.diag_err,
                    factor_storage: sol.factor_storage,
                    dense_fallback: sol.dense_fallback,
                    eps_prime: sol.budget.eps_prime,
                    threshold: sol.budget.threshold,
                    z: sol.budget.z,
                });
                (sol.report, vec![sol.plan])
            } else {
                let c_path = match args.costs.as_slice() {
                    [c] => c,
                    [] => return Err(Error::Config("--cost or --points is required".into())),
                    _ => return Err(Error::Config("pass exactly one --cost".into())),
                };
                manifest.add_input(c_path)?;
                manifest.add_input(a_path)?;
                manifest.add_input(b_path)?;
                let cost = read_cost(c_path)?;
                check_pair(&cost, a_path, &a, b_path, &b, c_path)?;
                let (x, _, report) = match kind {
                    SolveKind::Rsot => solve_rsot(&cost, &a, &b, &config)?,
                    SolveKind::Rot => solve_rot(&cost, &a, &b, &config)?,
                    _ => solve_uot(&cost, &a, &b, &config)?,
                };
                (report, vec![x])
            }
        }
    };
    if args.common.no_timings {
        report.wall_time = Default::default();
    }
    match (&args.plan, args.kind) {
        (Some(p), SolveKind::Barycenter) => {
            for (i, x) in plans.iter().enumerate() {
                dump_plan(Some(&indexed_path(p, i)), x)?;
            }
        }
        (p, _) => dump_plan(p.as_deref(), &plans[0])?,
    }
    let out = SolveOutput {
        manifest,
        report: &report,
        lowrank,
        barycenter: bary,
    };
    emit(args.common.out.as_deref(), &to_json(&out)?)?;
    if let StopRule::DualResidual(tol) = config.stop {
        if report.stop_reason != StopReason::DualResidual {
            return Err(Error::NonConvergence(format!(
                "dual residual above {tol:e} after {} iterations",
                report.iterations_run
            )));
        }
    }
    Ok(())
}

fn check_pair(
    cost: &crate::measure::CostMatrix,
    a_path: &Path,
    a: &DiscreteMeasure,
    b_path: &Path,
    b: &DiscreteMeasure,
    c_path: &Path,
) -> Result<()> {
    let name = c_path.display().to_string();
    same_len(cost.n(), a_path, a.len(), &name)?;
    same_len(cost.n(), b_path, b.len(), &name)
}
