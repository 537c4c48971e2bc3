//! `bench-iters`: theoretical iteration counts against the first iteration
//! from which the iterates stay ε-close to a reference value.
//!
//! The objective is recorded every `stride` iterations, with
//! `stride = 2⌈k_theory / (2·records)⌉`, and at k = 0. With an oracle
//! reference the run stops at `4·k_theory`, or earlier once the window since
//! the last violation covers `max(k_emp, min_tail)` further iterations.
//! Without an oracle the reference is the objective at `4·k_theory`.

use rayon::prelude::*;
use serde::Serialize;

use crate::barycenter::{rsbp_schedule, BarycenterProblem, IbpIteration, PotentialFamily};
use crate::cli::io::{emit, format_float};
use crate::cli::CommonArgs;
use crate::config::{RunPlan, Scheme, SolveReport};
use crate::error::{Error, Result};
use crate::gibbs::DenseGibbs;
use crate::measure::{CostMatrix, DiscreteMeasure, DualPotentials};
use crate::oracle::{oracle_rot_with, oracle_rsbp_with, oracle_rsot_with, OracleOptions};
use crate::rng::{random_weights, stream, uniform_cost, uniform_simplex};
use crate::rot::{rot_schedule, UotIteration};
use crate::rsot::{rsot_schedule, RsotIteration};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchKind {
    Rsot,
    Rot,
    Rsbp,
}

impl BenchKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchKind::Rsot => "rsot",
            BenchKind::Rot => "rot",
            BenchKind::Rsbp => "rsbp",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = BenchKind::Rsot)]
    pub kind: BenchKind,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Number of measures for rsbp.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, value_delimiter = ',', default_value = "5e-2,5e-3,5e-4,5e-5")]
    pub epsilons: Vec<f64>,
    /// Number of seeds, starting at --seed.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// Use the objective at the horizon as reference instead of the oracle.
    #[arg(long)]
    pub no_oracle: bool,
    /// Largest n accepted by the oracle.
    #[arg(long, default_value_t = 12)]
    pub oracle_max_n: usize,
    #[arg(long, default_value_t = 2000)]
    pub records: usize,
    #[arg(long, default_value_t = 10_000)]
    pub min_tail: usize,
    /// Cap on the horizon, below 4·k_theory.
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub kind: BenchKind,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    /// `None` selects the long-run reference.
    pub oracle_max_n: Option<usize>,
    pub records: usize,
    pub min_tail: usize,
    pub max_iter: Option<usize>,
}

impl BenchSettings {
    /// The RSOT experiment: n = 100, τ = 1, ε from 5e-2 to 5e-5, ten seeds.
    pub fn rsot_sweep() -> Self {
        Self {
            kind: BenchKind::Rsot,
            n: 100,
            m: 2,
            tau: 1.0,
            epsilons: vec![5e-2, 5e-3, 5e-4, 5e-5],
            seeds: (0..10).collect(),
            oracle_max_n: Some(100),
            records: 2000,
            min_tail: 10_000,
            max_iter: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.seeds.is_empty() || self.epsilons.is_empty() {
            return Err(Error::Config("n, seeds and epsilons must be nonempty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::Config(format!("epsilon must be positive, got {e}")));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.records == 0 {
            return Err(Error::Config("records must be positive".into()));
        }
        if self.kind == BenchKind::Rsbp && self.m == 0 {
            return Err(Error::Config("m must be positive".into()));
        }
        if let Some(max_n) = self.oracle_max_n {
            if self.n > max_n {
                return Err(Error::Config(format!(
                    "n = {} exceeds the oracle limit {max_n}; raise --oracle-max-n or pass --no-oracle",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub kind: BenchKind,
    pub n: usize,
    pub tau: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub k_theory: usize,
    /// `None` when the last recorded iterate is not ε-close.
    pub k_emp: Option<usize>,
    pub f_ref: f64,
    pub horizon: usize,
}

impl BenchRow {
    /// k_theory / k_emp; absent for k_emp of zero or none.
    pub fn ratio(&self) -> Option<f64> {
        self.k_emp.filter(|k| *k > 0).map(|k| self.k_theory as f64 / k as f64)
    }
}

enum Instance {
    Pair { cost: CostMatrix, a: DiscreteMeasure, b: DiscreteMeasure },
    Family(BarycenterProblem),
}

fn instance(s: &BenchSettings, seed: u64) -> Result<Instance> {
    let mut rng = stream("bench-iters", seed, 0);
    let n = s.n;
    Ok(match s.kind {
        BenchKind::Rsot | BenchKind::Rot => Instance::Pair {
            cost: uniform_cost(n, 1.0, 50.0, &mut rng),
            a: uniform_simplex(n, 0.1, 1.0, &mut rng),
            b: uniform_simplex(n, 0.1, 1.0, &mut rng),
        },
        BenchKind::Rsbp => {
            let costs = (0..s.m).map(|_| uniform_cost(n, 0.01, 0.1, &mut rng)).collect();
            let measures = (0..s.m).map(|_| uniform_simplex(n, 0.0, 1.0, &mut rng)).collect();
            let weights = random_weights(s.m, &mut rng);
            Instance::Family(BarycenterProblem::new(costs, measures, weights)?)
        }
    })
}

fn oracle_value(s: &BenchSettings, inst: &Instance, max_n: usize) -> Result<f64> {
    let opts = OracleOptions {
        max_n,
        max_n_barycenter: max_n,
        restarts: 1,
        ..OracleOptions::default()
    };
    Ok(match (s.kind, inst) {
        (BenchKind::Rsot, Instance::Pair { cost, a, b }) => oracle_rsot_with(cost, a, b, s.tau, &opts)?.objective,
        (BenchKind::Rot, Instance::Pair { cost, a, b }) => oracle_rot_with(cost, a, b, s.tau, &opts)?.objective,
        (_, Instance::Family(p)) => oracle_rsbp_with(p, s.tau, &opts)?.objective,
        _ => unreachable!("instance matches kind"),
    })
}

/// Objective samples (k, f) with a stopping rule consulted at each record.
fn scan<S: Scheme>(
    scheme: &mut S,
    mut state: S::State,
    mut report: SolveReport,
    stride: usize,
    cap: usize,
    mut stop: impl FnMut(usize, f64) -> bool,
) -> Result<Vec<(usize, f64)>> {
    let mut samples = Vec::new();
    let mut k = 0;
    loop {
        scheme.record(k, &state, &mut report)?;
        let f = report.objective_trace.last().expect("record pushes a point").f;
        samples.push((k, f));
        if k >= cap || stop(k, f) {
            return Ok(samples);
        }
        let next = (k + stride).min(cap);
        while k < next {
            scheme.step(&mut state, k);
            k += 1;
        }
        if !S::is_finite(&state) {
            return Err(Error::NonFinite { iteration: k });
        }
    }
}

/// First recorded k from which every later sample is within ε of f_ref.
pub fn empirical_count(samples: &[(usize, f64)], f_ref: f64, epsilon: f64) -> Option<usize> {
    match samples.iter().rposition(|(_, f)| !(f - f_ref <= epsilon)) {
        None => samples.first().map(|s| s.0),
        Some(i) => samples.get(i + 1).map(|s| s.0),
    }
}

fn point(s: &BenchSettings, inst: &Instance, seed: u64, epsilon: f64, f_ref: Option<f64>) -> Result<BenchRow> {
    let (k_theory, eta) = match inst {
        Instance::Pair { cost, a, b } => match s.kind {
            BenchKind::Rsot => {
                let sc = rsot_schedule(s.n, epsilon, s.tau, cost, a, b)?;
                (sc.k_required, sc.eta)
            }
            _ => {
                let sc = rot_schedule(s.n, epsilon, s.tau, cost, a, b)?;
                (sc.k_required, sc.eta)
            }
        },
        Instance::Family(p) => {
            let sc = rsbp_schedule(p, epsilon, s.tau)?;
            (sc.k_required, sc.eta)
        }
    };
    let k_theory = k_theory + k_theory % 2;
    let stride = (2 * k_theory.div_ceil(2 * s.records)).max(2);
    let cap = s.max_iter.map_or(4 * k_theory, |m| m.min(4 * k_theory));
    let plan = RunPlan {
        eta,
        epsilon: Some(epsilon),
        iterations: cap,
        schedule: None,
    };
    let report = SolveReport::new(s.kind.name(), s.tau, &plan);
    let mut candidate: Option<usize> = None;
    let min_tail = s.min_tail;
    let stop = |k: usize, f: f64| -> bool {
        let Some(r) = f_ref else { return false };
        if f - r <= epsilon {
            let c = *candidate.get_or_insert(k);
            k >= c + c.max(min_tail)
        } else {
            candidate = None;
            false
        }
    };
    let samples = match inst {
        Instance::Pair { cost, a, b } => {
            let kernel = DenseGibbs::new(cost, eta);
            let state = DualPotentials::zeros(s.n);
            if s.kind == BenchKind::Rsot {
                let mut it = RsotIteration::new(&kernel, cost, a, b, s.tau);
                scan(&mut it, state, report, stride, cap, stop)?
            } else {
                let mut it = UotIteration::new(&kernel, cost, a, b, s.tau, true);
                scan(&mut it, state, report, stride, cap, stop)?
            }
        }
        Instance::Family(p) => {
            let mut it = IbpIteration::new(p, eta, s.tau);
            scan(&mut it, PotentialFamily::zeros(p.m(), p.n()), report, stride, cap, stop)?
        }
    };
    let horizon = samples.last().map_or(0, |x| x.0);
    let f_ref = f_ref.unwrap_or_else(|| samples.last().map_or(f64::NAN, |x| x.1));
    Ok(BenchRow {
        kind: s.kind,
        n: s.n,
        tau: s.tau,
        epsilon,
        seed,
        k_theory,
        k_emp: empirical_count(&samples, f_ref, epsilon),
        f_ref,
        horizon,
    })
}

/// Runs every (ε, seed) point in parallel. Rows are ordered by the sweep
/// order of ε, then by seed.
pub fn bench_iters(s: &BenchSettings) -> Result<Vec<BenchRow>> {
    s.validate()?;
    let instances: Vec<(u64, Instance, Option<f64>)> = s
        .seeds
        .par_iter()
        .map(|&seed| {
            let inst = instance(s, seed)?;
            let f_ref = s.oracle_max_n.map(|max_n| oracle_value(s, &inst, max_n)).transpose()?;
            Ok((seed, inst, f_ref))
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(f64, usize)> = s
        .epsilons
        .iter()
        .flat_map(|&e| (0..instances.len()).map(move |i| (e, i)))
        .collect();
    jobs.par_iter()
        .map(|&(eps, i)| {
            let (seed, inst, f_ref) = &instances[i];
            point(s, inst, *seed, eps, *f_ref)
        })
        .collect()
}

/// Mean ratio per ε in sweep order, over rows that have one.
pub fn mean_ratios(rows: &[BenchRow], epsilons: &[f64]) -> Vec<(f64, Option<f64>)> {
    epsilons
        .iter()
        .map(|&e| {
            let r: Vec<f64> = rows.iter().filter(|r| r.epsilon == e).filter_map(|r| r.ratio()).collect();
            (e, (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64))
        })
        .collect()
}

pub fn rows_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("kind,n,tau,epsilon,seed,k_theory,k_emp,ratio\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.kind.name(),
            r.n,
            format_float(r.tau),
            format_float(r.epsilon),
            r.seed,
            r.k_theory,
            r.k_emp.map(|k| k.to_string()).unwrap_or_default(),
            r.ratio().map(format_float).unwrap_or_default()
        ));
    }
    s
}

pub fn cmd_bench_iters(args: &BenchArgs) -> Result<()> {
    let settings = BenchSettings {
        kind: args.kind,
        n: args.n,
        m: args.m,
        tau: args.tau,
        epsilons: args.epsilons.clone(),
        seeds: (args.common.seed..args.common.seed + args.seeds).collect(),
        oracle_max_n: (!args.no_oracle).then_some(args.oracle_max_n),
        records: args.records,
        min_tail: args.min_tail,
        max_iter: args.max_iter,
    };
    let rows = bench_iters(&settings)?;
    emit(args.common.out.as_deref(), &rows_csv(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_count_cases() {
        let s = [(0, 5.0), (2, 0.5), (4, 2.0), (6, 0.1), (8, 0.1)];
        assert_eq!(empirical_count(&s, 0.0, 1.0), Some(6));
        assert_eq!(empirical_count(&s, 0.0, 10.0), Some(0));
        assert_eq!(empirical_count(&s[..3], 0.0, 1.0), None);
    }

    #[test]
    fn degenerate_sweep_point_has_no_ratio() {
        let s = BenchSettings {
            n: 3,
            epsilons: vec![1e3],
            seeds: vec![0],
            oracle_max_n: Some(12),
            ..BenchSettings::rsot_sweep()
        };
        let rows = bench_iters(&s).unwrap();
        assert_eq!(rows[0].k_emp, Some(0));
        assert_eq!(rows[0].ratio(), None);
        assert!(rows_csv(&rows).lines().nth(1).unwrap().ends_with(",0,"));
    }

    #[test]
    fn oracle_limit_is_a_config_error() {
        let s = BenchSettings {
            oracle_max_n: Some(12),
            ..BenchSettings::rsot_sweep()
        };
        assert!(matches!(bench_iters(&s), Err(Error::Config(_))));
    }
}
