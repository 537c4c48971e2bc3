//! Robust semi-constrained barycenters on a fixed support, solved with
//! iterative Bregman projections on the mass-free objective and
//! normalized per plan afterwards.

use std::time::Instant;

use crate::config::{drive, DualPoint, Guarantee, Observer, RunPlan, ScheduleMode, ScheduleSummary, Scheme, Silent, SolveReport, SolverConfig, TracePoint};
use crate::divergence::{entropy, generalized_kl};
use crate::error::{Error, Result};
use crate::gibbs::{DenseGibbs, GibbsBackend};
use crate::measure::{CostMatrix, DiscreteMeasure, TransportPlan};
use crate::objective::transport_cost;
use crate::rsot::{check_schedule_inputs, log_kernel_mass, PROBABILITY_TOL};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterProblem {
    costs: Vec<CostMatrix>,
    measures: Vec<DiscreteMeasure>,
    weights: Vec<f64>,
    n: usize,
}

impl BarycenterProblem {
    pub fn new(costs: Vec<CostMatrix>, measures: Vec<DiscreteMeasure>, weights: Vec<f64>) -> Result<Self> {
        let m = costs.len();
        if m == 0 {
            return Err(Error::InvalidInput("a barycenter needs at least one measure".into()));
        }
        if measures.len() != m || weights.len() != m {
            return Err(Error::Shape(format!(
                "{} costs, {} measures and {} weights",
                m,
                measures.len(),
                weights.len()
            )));
        }
        let n = costs[0].n();
        if let Some(i) = costs.iter().position(|c| c.n() != n) {
            return Err(Error::Shape(format!("cost {i} is {}x{}, expected {n}x{n}", costs[i].n(), costs[i].n())));
        }
        if let Some(i) = measures.iter().position(|p| p.len() != n) {
            return Err(Error::Shape(format!("measure {i} has {} weights, expected {n}", measures[i].len())));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput(format!("weight {i} = {} is not positive", weights[i])));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self {
            costs,
            measures,
            weights,
            n,
        })
    }

    pub fn costs(&self) -> &[CostMatrix] {
        &self.costs
    }

    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.costs.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsbpSchedule {
    pub u_const: f64,
    pub eta: f64,
    pub r_rsbp: f64,
    pub k_required: usize,
    /// The iteration bound is proved for two measures only.
    pub guarantee_valid: bool,
}

impl RsbpSchedule {
    pub fn summary(&self) -> ScheduleSummary {
        ScheduleSummary {
            u_const: self.u_const,
            eta: self.eta,
            r_bound: self.r_rsbp,
            k1: None,
            k2: None,
            k_required: self.k_required,
            guarantee_valid: self.guarantee_valid,
        }
    }
}

pub fn rsbp_schedule(problem: &BarycenterProblem, epsilon: f64, tau: f64) -> Result<RsbpSchedule> {
    let n = problem.n();
    check_schedule_inputs(n, epsilon, tau)?;
    let log_n = (n as f64).ln();
    let u_const = (2.0 + 2.0 * log_n).max(2.0 * epsilon).max(3.0 * epsilon * log_n / tau);
    let eta = epsilon / u_const;
    let r_rsbp: f64 = problem
        .costs
        .iter()
        .zip(&problem.measures)
        .map(|(c, p)| {
            let cmax = c.max_entry();
            log_n.max(cmax / eta - log_n) + p.log_sup_norm() + (eta + tau) / (eta * tau) * cmax
        })
        .sum();
    let bound = 2.0 + 2.0 * (tau / eta + 1.0) * (4.0 * r_rsbp * tau * tau / (eta * eta)).ln();
    let mut k_required = bound.ceil().max(2.0) as usize;
    k_required += k_required % 2;
    Ok(RsbpSchedule {
        u_const,
        eta,
        r_rsbp,
        k_required,
        guarantee_valid: problem.m() == 2,
    })
}

/// Potentials (u_i, v_i) for every measure in the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFamily {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl PotentialFamily {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            u: vec![vec![0.0; n]; m],
            v: vec![vec![0.0; n]; m],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).flatten().all(|x| x.is_finite())
    }

    /// max_i max{‖u_i − u_i'‖∞, ‖v_i − v_i'‖∞}
    pub fn sup_distance(&self, other: &Self) -> f64 {
        let d = |x: &[Vec<f64>], y: &[Vec<f64>]| {
            x.iter()
                .zip(y)
                .map(|(a, b)| crate::measure::sup_diff(a, b))
                .fold(0.0, f64::max)
        };
        d(&self.u, &other.u).max(d(&self.v, &other.v))
    }

    /// Σ_i max{‖u_i − u_i*‖∞, ‖v_i − v_i*‖∞}
    pub fn summed_error(&self, reference: &Self) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .zip(reference.u.iter().zip(&reference.v))
            .map(|((u, v), (ur, vr))| crate::measure::sup_diff(u, ur).max(crate::measure::sup_diff(v, vr)))
            .sum()
    }

    /// ‖Σ_i ω_i v_i‖∞
    pub fn weighted_v_sum(&self, weights: &[f64]) -> f64 {
        let n = self.v.first().map_or(0, |v| v.len());
        (0..n)
            .map(|j| self.v.iter().zip(weights).map(|(v, w)| w * v[j]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) struct IbpIteration<'a> {
    problem: &'a BarycenterProblem,
    kernels: Vec<DenseGibbs<'a>>,
    log_p: Vec<Vec<f64>>,
    tau: f64,
    eta: f64,
    damping: f64,
    lse: Vec<Vec<f64>>,
    center: Vec<f64>,
}

impl<'a> IbpIteration<'a> {
    pub(crate) fn new(problem: &'a BarycenterProblem, eta: f64, tau: f64) -> Self {
        Self {
            problem,
            kernels: problem.costs.iter().map(|c| DenseGibbs::new(c, eta)).collect(),
            log_p: problem.measures.iter().map(|p| p.log_weights()).collect(),
            tau,
            eta,
            damping: eta * tau / (eta + tau),
            lse: vec![vec![0.0; problem.n]; problem.m()],
            center: vec![0.0; problem.n],
        }
    }

    fn raw_plans(&self, state: &PotentialFamily) -> Result<Vec<TransportPlan>> {
        self.kernels
            .iter()
            .zip(state.u.iter().zip(&state.v))
            .map(|(k, (u, v))| k.plan(u, v, false))
            .collect()
    }

    fn normalized_plans(&self, state: &PotentialFamily) -> Result<Vec<TransportPlan>> {
        self.kernels
            .iter()
            .zip(state.u.iter().zip(&state.v))
            .map(|(k, (u, v))| k.plan(u, v, true))
            .collect()
    }

    fn dual_value(&self, state: &PotentialFamily) -> f64 {
        self.kernels
            .iter()
            .zip(&self.problem.measures)
            .zip(&self.problem.weights)
            .zip(state.u.iter().zip(&state.v))
            .map(|(((k, p), w), (u, v))| {
                let relax: f64 = u.iter().zip(p.weights()).map(|(ui, pi)| pi * (-ui / self.tau).exp()).sum();
                w * (self.eta * log_kernel_mass(k, u, v).exp() + self.tau * relax)
            })
            .sum()
    }
}

impl Scheme for IbpIteration<'_> {
    type State = PotentialFamily;

    fn step(&mut self, state: &mut PotentialFamily, k: usize) {
        if k % 2 == 0 {
            for (i, kernel) in self.kernels.iter().enumerate() {
                kernel.row_lse(&state.v[i], &mut self.lse[i]);
                for ((u, lp), l) in state.u[i].iter_mut().zip(&self.log_p[i]).zip(&self.lse[i]) {
                    *u = self.damping * (lp - l);
                }
            }
        } else {
            for (i, kernel) in self.kernels.iter().enumerate() {
                kernel.col_lse(&state.u[i], &mut self.lse[i]);
            }
            self.center.iter_mut().for_each(|c| *c = 0.0);
            for (l, w) in self.lse.iter().zip(&self.problem.weights) {
                for (c, x) in self.center.iter_mut().zip(l) {
                    *c += w * x;
                }
            }
            for (v, l) in state.v.iter_mut().zip(&self.lse) {
                for ((vj, lj), cj) in v.iter_mut().zip(l).zip(&self.center) {
                    *vj = self.eta * (cj - lj);
                }
            }
        }
    }

    fn is_finite(state: &PotentialFamily) -> bool {
        state.is_finite()
    }

    fn distance(a: &PotentialFamily, b: &PotentialFamily) -> f64 {
        a.sup_distance(b)
    }

    fn record(&mut self, k: usize, state: &PotentialFamily, report: &mut SolveReport) -> Result<()> {
        let plans = self.normalized_plans(state)?;
        let f = rsbp_objective(&plans, self.problem, self.tau)?;
        report.objective_trace.push(TracePoint {
            iteration: k,
            f,
            g: rsbp_entropic_objective(&plans, self.problem, self.tau, self.eta)?,
        });
        report.dual_trace.push(DualPoint {
            iteration: k,
            h: self.dual_value(state),
        });
        Ok(())
    }
}

/// One iteration. Even k applies the damped u-rule per measure, odd k the
/// weighted centering of the v_i.
pub fn robust_ibp_step(
    state: &PotentialFamily,
    k: usize,
    problem: &BarycenterProblem,
    eta: f64,
    tau: f64,
) -> Result<PotentialFamily> {
    check_family(state, problem)?;
    let mut it = IbpIteration::new(problem, eta, tau);
    let mut next = state.clone();
    it.step(&mut next, k);
    Ok(next)
}

fn check_family(state: &PotentialFamily, problem: &BarycenterProblem) -> Result<()> {
    let ok = state.u.len() == problem.m()
        && state.v.len() == problem.m()
        && state.u.iter().chain(&state.v).all(|x| x.len() == problem.n());
    if ok {
        Ok(())
    } else {
        Err(Error::Shape("potential family does not match the problem".into()))
    }
}

fn check_plans(plans: &[TransportPlan], problem: &BarycenterProblem) -> Result<()> {
    if plans.len() != problem.m() || plans.iter().any(|x| x.n() != problem.n()) {
        return Err(Error::Shape(format!(
            "expected {} plans of size {}x{}",
            problem.m(),
            problem.n(),
            problem.n()
        )));
    }
    Ok(())
}

/// Σ ω_i [⟨C_i, X_i⟩ + τ KL(X_i 1‖p_i)]
pub fn rsbp_objective(plans: &[TransportPlan], problem: &BarycenterProblem, tau: f64) -> Result<f64> {
    check_plans(plans, problem)?;
    let mut total = 0.0;
    for ((x, c), (p, w)) in plans.iter().zip(&problem.costs).zip(problem.measures.iter().zip(&problem.weights)) {
        total += w * (transport_cost(x, c) + tau * generalized_kl(x.row_marginal(), p.weights())?);
    }
    Ok(total)
}

/// Σ ω_i [⟨C_i, X_i⟩ + τ KL(X_i 1‖p_i) − η H(X_i)]
pub fn rsbp_entropic_objective(plans: &[TransportPlan], problem: &BarycenterProblem, tau: f64, eta: f64) -> Result<f64> {
    let f = rsbp_objective(plans, problem, tau)?;
    let h: f64 = plans.iter().zip(&problem.weights).map(|(x, w)| w * entropy(x)).sum();
    Ok(f - eta * h)
}

#[derive(Debug, Clone)]
pub struct RsbpSolution {
    /// Plans of the mass-free problem, B(u_i, v_i; C_i).
    pub raw_plans: Vec<TransportPlan>,
    /// Raw plans divided by their own mass.
    pub plans: Vec<TransportPlan>,
    /// Column marginal of the first normalized plan.
    pub barycenter: DiscreteMeasure,
    pub potentials: PotentialFamily,
    pub report: SolveReport,
}

pub fn solve_rsbp(problem: &BarycenterProblem, config: &SolverConfig) -> Result<RsbpSolution> {
    solve_rsbp_observed(problem, config, &mut Silent)
}

pub fn solve_rsbp_observed(
    problem: &BarycenterProblem,
    config: &SolverConfig,
    observer: &mut dyn Observer<PotentialFamily>,
) -> Result<RsbpSolution> {
    let plan = config.resolve(|eps| Ok(rsbp_schedule(problem, eps, config.tau)?.summary()))?;
    if config.schedule == ScheduleMode::TheoremSchedule {
        if let Some(i) = problem.measures.iter().position(|p| (p.mass() - 1.0).abs() > PROBABILITY_TOL) {
            return Err(Error::Config(format!(
                "the theorem schedule needs probability vectors; measure {i} has mass {}",
                problem.measures[i].mass()
            )));
        }
    }
    run_rsbp(problem, config, &plan, observer)
}

fn run_rsbp(
    problem: &BarycenterProblem,
    config: &SolverConfig,
    plan: &RunPlan,
    observer: &mut dyn Observer<PotentialFamily>,
) -> Result<RsbpSolution> {
    let start = Instant::now();
    let mut report = SolveReport::new("rsbp", config.tau, plan);
    let mut scheme = IbpIteration::new(problem, plan.eta, config.tau);
    let mut state = PotentialFamily::zeros(problem.m(), problem.n());
    let stride = config.stride_for(plan.iterations);
    report.iterations_run = drive(&mut scheme, &mut state, plan.iterations, config.stop, stride, &mut report, observer)?;
    let raw_plans = scheme.raw_plans(&state)?;
    let plans = scheme.normalized_plans(&state)?;
    let first = plans[0].col_marginal().to_vec();
    let spread = plans
        .iter()
        .flat_map(|x| x.col_marginal().iter().zip(&first).map(|(c, f)| (c - f).abs()))
        .fold(0.0, f64::max);
    let barycenter = DiscreteMeasure::new(first.clone()).or_else(|_| DiscreteMeasure::smoothed(first))?;
    let last = *report.objective_trace.last().expect("final iterate is recorded");
    report.objective = last.f;
    report.entropic_objective = last.g;
    report.dual_objective = report.dual_trace.last().expect("final iterate is recorded").h;
    report.marginal_spread = Some(spread);
    report.marginal_residual = spread;
    report.unnormalized_mass = Some(raw_plans.iter().map(|x| x.mass()).zip(&problem.weights).map(|(x, w)| w * x).sum());
    let valid = config.schedule == ScheduleMode::TheoremSchedule
        && report.iterations_run >= plan.iterations
        && problem.m() == 2;
    report.guarantee = Guarantee::new(valid, "f_rsbp", plan.epsilon);
    if problem.m() != 2 {
        report.notes.push("iteration bound proved for two measures only; schedule is hypothetical".into());
    }
    report.wall_time = start.elapsed();
    Ok(RsbpSolution {
        raw_plans,
        plans,
        barycenter,
        potentials: state,
        report,
    })
}

/// Ratio sequences R_uv and R_uu at even k.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContractionRatios {
    /// (k, Σ‖u_i^{k+1} − u_i*‖∞ / Σ‖v_i^k − v_i*‖∞)
    pub r_uv: Vec<(usize, Option<f64>)>,
    /// (k, Σ‖u_i^{k+1} − u_i*‖∞ / Σ‖u_i^{k−1} − u_i*‖∞), from k = 2
    pub r_uu: Vec<(usize, Option<f64>)>,
}

/// Streams iterates and accumulates [`ContractionRatios`] without keeping
/// the trace.
#[derive(Debug, Clone)]
pub struct ContractionTracker {
    reference: PotentialFamily,
    min_denominator: f64,
    pending_v: Option<(usize, f64)>,
    last_u: Option<(usize, f64)>,
    pub ratios: ContractionRatios,
}

impl ContractionTracker {
    pub fn new(reference: PotentialFamily, min_denominator: f64) -> Self {
        Self {
            reference,
            min_denominator,
            pending_v: None,
            last_u: None,
            ratios: ContractionRatios::default(),
        }
    }

    fn ratio(&self, num: f64, den: f64) -> Option<f64> {
        (den >= self.min_denominator).then(|| num / den)
    }

    /// `state` is the iterate after `k` iterations.
    pub fn push(&mut self, k: usize, state: &PotentialFamily) {
        let sum = |x: &[Vec<f64>], r: &[Vec<f64>]| -> f64 {
            x.iter().zip(r).map(|(a, b)| crate::measure::sup_diff(a, b)).sum()
        };
        if k % 2 == 0 {
            self.pending_v = Some((k, sum(&state.v, &self.reference.v)));
            return;
        }
        let du = sum(&state.u, &self.reference.u);
        if let Some((kv, dv)) = self.pending_v.take() {
            if kv + 1 == k {
                let r = self.ratio(du, dv);
                self.ratios.r_uv.push((kv, r));
                if let Some((ku, prev)) = self.last_u {
                    if ku + 2 == k {
                        let r = self.ratio(du, prev);
                        self.ratios.r_uu.push((kv, r));
                    }
                }
            }
        }
        self.last_u = Some((k, du));
    }
}

impl Observer<PotentialFamily> for ContractionTracker {
    fn observe(&mut self, iteration: usize, state: &PotentialFamily) {
        self.push(iteration, state)
    }
}

/// `trace[k]` is the iterate after k iterations. Ratios with denominator
/// below 1e−300 are reported as `None`.
pub fn contraction_diagnostics(trace: &[PotentialFamily], reference: &PotentialFamily) -> ContractionRatios {
    contraction_diagnostics_with_floor(trace, reference, 1e-300)
}

pub fn contraction_diagnostics_with_floor(
    trace: &[PotentialFamily],
    reference: &PotentialFamily,
    min_denominator: f64,
) -> ContractionRatios {
    let mut t = ContractionTracker::new(reference.clone(), min_denominator);
    for (k, s) in trace.iter().enumerate() {
        t.push(k, s);
    }
    t.ratios
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_problem(m: usize) -> BarycenterProblem {
        let c = CostMatrix::from_rows(&[vec![0.0, 0.4, 0.9], vec![0.4, 0.0, 0.3], vec![0.9, 0.3, 0.0]]).unwrap();
        let ps = [[0.2, 0.3, 0.5], [0.6, 0.3, 0.1], [0.1, 0.8, 0.1]];
        BarycenterProblem::new(
            vec![c; m],
            (0..m).map(|i| DiscreteMeasure::new(ps[i % 3].to_vec()).unwrap()).collect(),
            vec![1.0 / m as f64; m],
        )
        .unwrap()
    }

    #[test]
    fn problem_validation() {
        let c = CostMatrix::zeros(2);
        let p = DiscreteMeasure::uniform(2);
        assert!(BarycenterProblem::new(vec![c.clone()], vec![p.clone()], vec![0.9]).is_err());
        assert!(matches!(
            BarycenterProblem::new(vec![c.clone(), CostMatrix::zeros(3)], vec![p.clone(), p.clone()], vec![0.5, 0.5]),
            Err(Error::Shape(_))
        ));
        assert!(BarycenterProblem::new(vec![c], vec![p], vec![1.0]).is_ok());
    }

    #[test]
    fn schedule_arithmetic_and_flag() {
        let n = 10;
        let c = CostMatrix::from_fn(n, |i, j| 0.01 * (1 + (i + j) % 9) as f64).unwrap();
        let p = DiscreteMeasure::uniform(n);
        let two = BarycenterProblem::new(vec![c.clone(); 2], vec![p.clone(); 2], vec![0.5; 2]).unwrap();
        let three = BarycenterProblem::new(vec![c; 3], vec![p; 3], vec![1.0 / 3.0; 3]).unwrap();
        let s2 = rsbp_schedule(&two, 1e-3, 1.0).unwrap();
        assert!((s2.u_const - (2.0 + 2.0 * 10f64.ln())).abs() < 1e-12);
        assert!((s2.eta - 1.51396e-4).abs() < 1e-9);
        assert_eq!(s2.k_required % 2, 0);
        assert!(s2.guarantee_valid);
        let s3 = rsbp_schedule(&three, 1e-3, 1.0).unwrap();
        assert!(!s3.guarantee_valid);
        assert_eq!(s3.u_const, s2.u_const);
        assert_eq!(s3.eta, s2.eta);
    }

    #[test]
    fn identical_pairs_keep_v_zero() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = DiscreteMeasure::new(vec![0.3, 0.7]).unwrap();
        let problem = BarycenterProblem::new(vec![c.clone(), c], vec![p.clone(), p], vec![0.5, 0.5]).unwrap();
        let mut s = PotentialFamily::zeros(2, 2);
        for k in 0..20 {
            s = robust_ibp_step(&s, k, &problem, 0.1, 1.0).unwrap();
            assert!(s.v.iter().flatten().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn odd_steps_center_and_equalize() {
        for m in [2, 3, 10] {
            let problem = simple_problem(m);
            let mut s = PotentialFamily::zeros(m, 3);
            for k in 0..12 {
                s = robust_ibp_step(&s, k, &problem, 0.05, 1.0).unwrap();
                if k % 2 == 1 {
                    assert!(s.weighted_v_sum(problem.weights()) <= 1e-12);
                    let cols: Vec<Vec<f64>> = (0..m)
                        .map(|i| {
                            crate::gibbs::materialize_plan(&s.u[i], &s.v[i], &problem.costs()[i], 0.05, false)
                                .unwrap()
                                .col_marginal()
                                .to_vec()
                        })
                        .collect();
                    for c in &cols[1..] {
                        for (x, y) in c.iter().zip(&cols[0]) {
                            assert!((x - y).abs() <= 1e-10 * y.abs());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_plans_have_zero_objective() {
        let problem = simple_problem(2);
        let plans: Vec<_> = problem.measures().iter().map(|p| TransportPlan::diagonal(p.weights()).unwrap()).collect();
        assert!(rsbp_objective(&plans, &problem, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn single_term_reduces_to_rsot() {
        let problem = simple_problem(1);
        let x = TransportPlan::from_rows(&[vec![0.1, 0.1, 0.0], vec![0.2, 0.1, 0.1], vec![0.0, 0.3, 0.1]]).unwrap();
        let f = rsbp_objective(std::slice::from_ref(&x), &problem, 0.7).unwrap();
        let g = crate::objective::objective_rsot(&x, &problem.costs()[0], &problem.measures()[0], 0.7).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn equal_measures_give_that_measure() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let p = DiscreteMeasure::new(vec![0.2, 0.5, 0.3]).unwrap();
        let problem = BarycenterProblem::new(vec![c.clone(), c], vec![p.clone(), p.clone()], vec![0.5, 0.5]).unwrap();
        let sol = solve_rsbp(&problem, &SolverConfig::theorem(1.0, 1e-2)).unwrap();
        assert!(sol.report.objective <= 1e-2);
        for (q, r) in sol.barycenter.weights().iter().zip(p.weights()) {
            assert!((q - r).abs() < 1e-2);
        }
    }

    #[test]
    fn tracker_pairs_iterates() {
        let problem = simple_problem(2);
        let mut trace = vec![PotentialFamily::zeros(2, 3)];
        for k in 0..40 {
            trace.push(robust_ibp_step(&trace[k], k, &problem, 0.05, 0.5).unwrap());
        }
        let reference = trace.last().unwrap().clone();
        let r = contraction_diagnostics(&trace[..30], &reference);
        assert_eq!(r.r_uv.first().unwrap().0, 0);
        assert_eq!(r.r_uu.first().unwrap().0, 2);
        assert_eq!(r.r_uv.len(), 15);
        assert_eq!(r.r_uu.len(), 14);
    }
}
