//! Robust semi-constrained OT: the column marginal is enforced exactly,
//! the row marginal is relaxed by τ·KL.

use std::time::Instant;

use crate::config::{drive, Guarantee, Observer, RunPlan, ScheduleSummary, Scheme, Silent, SolveReport, SolverConfig, ScheduleMode, TracePoint, DualPoint};
use crate::divergence::entropy;
use crate::error::{Error, Result};
use crate::gibbs::{lse, DenseGibbs, GibbsBackend};
use crate::measure::{CostMatrix, DiscreteMeasure, DualPotentials, TransportPlan};
use crate::objective::objective_rsot;

/// Mass tolerance for inputs accepted by the theorem schedules.
pub(crate) const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RsotSchedule {
    pub u_const: f64,
    pub eta: f64,
    pub r_bound: f64,
    pub k1: f64,
    pub k2: f64,
    pub k_required: usize,
}

impl RsotSchedule {
    pub fn summary(&self) -> ScheduleSummary {
        ScheduleSummary {
            u_const: self.u_const,
            eta: self.eta,
            r_bound: self.r_bound,
            k1: Some(self.k1),
            k2: Some(self.k2),
            k_required: self.k_required,
            guarantee_valid: true,
        }
    }
}

pub(crate) fn check_schedule_inputs(n: usize, epsilon: f64, tau: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput("the schedule needs n >= 2".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

pub(crate) fn check_problem(cost: &CostMatrix, measures: &[(&str, &DiscreteMeasure)]) -> Result<()> {
    for (name, m) in measures {
        if m.len() != cost.n() {
            return Err(Error::Shape(format!(
                "measure {name} has {} weights but the cost is {}x{}",
                m.len(),
                cost.n(),
                cost.n()
            )));
        }
    }
    Ok(())
}

/// max{‖log a‖∞, ‖log b‖∞} + max{log n, ‖C‖∞/η − log n}
pub fn r_bound(eta: f64, max_cost: f64, a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    let log_n = (a.len() as f64).ln();
    a.log_sup_norm().max(b.log_sup_norm()) + log_n.max(max_cost / eta - log_n)
}

pub fn rsot_schedule(
    n: usize,
    epsilon: f64,
    tau: f64,
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
) -> Result<RsotSchedule> {
    check_schedule_inputs(n, epsilon, tau)?;
    if cost.n() != n {
        return Err(Error::Shape(format!("schedule for n = {n} given a {}x{} cost", cost.n(), cost.n())));
    }
    check_problem(cost, &[("a", a), ("b", b)])?;
    Ok(rsot_schedule_from_bound(n, epsilon, tau, |eta| r_bound(eta, cost.max_entry(), a, b)))
}

pub(crate) fn rsot_schedule_from_bound(n: usize, epsilon: f64, tau: f64, r: impl Fn(f64) -> f64) -> RsotSchedule {
    let log_n = (n as f64).ln();
    let u_const = (3.0 * log_n).max(epsilon / tau);
    let eta = epsilon / u_const;
    let r_bound = r(eta);
    let k1 = (8.0 * r_bound * (2.0 * tau + eta) / (3.0 * eta)).ln() / (eta / tau).ln_1p();
    let k2 = (1.0 + tau / eta)
        * (3.0 * tau * r_bound * (2.0 * (eta + tau) + 3.0 * r_bound * (2.0 * tau + eta)) / (eta * eta * log_n)).ln();
    let k_required = (1.0 + 2.0 * k1.max(k2)).ceil().max(1.0) as usize;
    RsotSchedule {
        u_const,
        eta,
        r_bound,
        k1,
        k2,
        k_required,
    }
}

/// One iteration. Even k updates u with the damped rule, odd k updates v.
pub fn rsot_step(
    state: &DualPotentials,
    k: usize,
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    eta: f64,
    tau: f64,
) -> Result<DualPotentials> {
    check_problem(cost, &[("a", a), ("b", b)])?;
    if state.u.len() != cost.n() || state.v.len() != cost.n() {
        return Err(Error::Shape("potentials do not match the cost size".into()));
    }
    let kernel = DenseGibbs::new(cost, eta);
    let mut it = RsotIteration::new(&kernel, cost, a, b, tau);
    let mut next = state.clone();
    it.step(&mut next, k);
    Ok(next)
}

/// η‖B(u,v)‖₁ + τ⟨e^{−u/τ}, a⟩ − ⟨v, b⟩
pub fn dual_value_rsot(
    u: &[f64],
    v: &[f64],
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    eta: f64,
    tau: f64,
) -> Result<f64> {
    check_problem(cost, &[("a", a), ("b", b)])?;
    if u.len() != cost.n() || v.len() != cost.n() {
        return Err(Error::Shape("potentials do not match the cost size".into()));
    }
    let kernel = DenseGibbs::new(cost, eta);
    Ok(dual_value(&kernel, u, v, a.weights(), b.weights(), tau))
}

pub(crate) fn log_kernel_mass<B: GibbsBackend>(backend: &B, u: &[f64], v: &[f64]) -> f64 {
    let eta = backend.eta();
    let mut rows = vec![0.0; backend.n()];
    backend.row_lse(v, &mut rows);
    for (r, ui) in rows.iter_mut().zip(u) {
        *r += ui / eta;
    }
    lse(&rows)
}

fn dual_value<B: GibbsBackend>(backend: &B, u: &[f64], v: &[f64], a: &[f64], b: &[f64], tau: f64) -> f64 {
    let mass = log_kernel_mass(backend, u, v).exp();
    let relax: f64 = u.iter().zip(a).map(|(ui, ai)| ai * (-ui / tau).exp()).sum();
    let linear: f64 = v.iter().zip(b).map(|(vj, bj)| vj * bj).sum();
    backend.eta() * mass + tau * relax - linear
}

/// Optimal entropic value predicted from the dual optimum:
/// ⟨v*, b⟩ − (η + τ)β + τα, which is −η − τ(1 − α) + ⟨v*, b⟩ when β = 1.
pub fn rsot_value_from_dual(v: &[f64], a: &DiscreteMeasure, b: &DiscreteMeasure, eta: f64, tau: f64) -> f64 {
    let linear: f64 = v.iter().zip(b.weights()).map(|(vj, bj)| vj * bj).sum();
    linear - (eta + tau) * b.mass() + tau * a.mass()
}

pub(crate) struct RsotIteration<'a, B> {
    backend: &'a B,
    eval_cost: &'a CostMatrix,
    a: &'a DiscreteMeasure,
    b: &'a DiscreteMeasure,
    log_a: Vec<f64>,
    log_b: Vec<f64>,
    tau: f64,
    eta: f64,
    damping: f64,
    buf: Vec<f64>,
}

impl<'a, B: GibbsBackend> RsotIteration<'a, B> {
    pub(crate) fn new(
        backend: &'a B,
        eval_cost: &'a CostMatrix,
        a: &'a DiscreteMeasure,
        b: &'a DiscreteMeasure,
        tau: f64,
    ) -> Self {
        let eta = backend.eta();
        Self {
            backend,
            eval_cost,
            a,
            b,
            log_a: a.log_weights(),
            log_b: b.log_weights(),
            tau,
            eta,
            damping: eta * tau / (eta + tau),
            buf: vec![0.0; backend.n()],
        }
    }

    pub(crate) fn plan(&self, state: &DualPotentials) -> Result<TransportPlan> {
        self.backend.plan(&state.u, &state.v, false)
    }
}

impl<B: GibbsBackend> Scheme for RsotIteration<'_, B> {
    type State = DualPotentials;

    fn step(&mut self, state: &mut DualPotentials, k: usize) {
        if k % 2 == 0 {
            self.backend.row_lse(&state.v, &mut self.buf);
            for ((u, la), l) in state.u.iter_mut().zip(&self.log_a).zip(&self.buf) {
                *u = self.damping * (la - l);
            }
        } else {
            self.backend.col_lse(&state.u, &mut self.buf);
            for ((v, lb), l) in state.v.iter_mut().zip(&self.log_b).zip(&self.buf) {
                *v = self.eta * (lb - l);
            }
        }
    }

    fn is_finite(state: &DualPotentials) -> bool {
        state.is_finite()
    }

    fn distance(a: &DualPotentials, b: &DualPotentials) -> f64 {
        a.sup_distance(b)
    }

    fn record(&mut self, k: usize, state: &DualPotentials, report: &mut SolveReport) -> Result<()> {
        let plan = self.plan(state)?;
        let f = objective_rsot(&plan, self.eval_cost, self.a, self.tau)?;
        report.objective_trace.push(TracePoint {
            iteration: k,
            f,
            g: f - self.eta * entropy(&plan),
        });
        report.dual_trace.push(DualPoint {
            iteration: k,
            h: dual_value(self.backend, &state.u, &state.v, self.a.weights(), self.b.weights(), self.tau),
        });
        Ok(())
    }
}

pub fn solve_rsot(
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    config: &SolverConfig,
) -> Result<(TransportPlan, DualPotentials, SolveReport)> {
    solve_rsot_observed(cost, a, b, config, &mut Silent)
}

/// As [`solve_rsot`], passing every iterate to `observer`.
pub fn solve_rsot_observed(
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    config: &SolverConfig,
    observer: &mut dyn Observer<DualPotentials>,
) -> Result<(TransportPlan, DualPotentials, SolveReport)> {
    check_problem(cost, &[("a", a), ("b", b)])?;
    let plan = config.resolve(|eps| Ok(rsot_schedule(cost.n(), eps, config.tau, cost, a, b)?.summary()))?;
    let kernel = DenseGibbs::new(cost, plan.eta);
    run_rsot(&kernel, cost, a, b, config, &plan, observer)
}

pub(crate) fn require_probabilities(config: &SolverConfig, measures: &[(&str, &DiscreteMeasure)]) -> Result<()> {
    if config.schedule != ScheduleMode::TheoremSchedule {
        return Ok(());
    }
    for (name, m) in measures {
        if (m.mass() - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::Config(format!(
                "the theorem schedule needs probability vectors; {name} has mass {}",
                m.mass()
            )));
        }
    }
    Ok(())
}

pub(crate) fn run_rsot<B: GibbsBackend>(
    backend: &B,
    eval_cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    config: &SolverConfig,
    plan: &RunPlan,
    observer: &mut dyn Observer<DualPotentials>,
) -> Result<(TransportPlan, DualPotentials, SolveReport)> {
    require_probabilities(config, &[("a", a), ("b", b)])?;
    let start = Instant::now();
    let mut report = SolveReport::new("rsot", config.tau, plan);
    let mut scheme = RsotIteration::new(backend, eval_cost, a, b, config.tau);
    let mut state = DualPotentials::zeros(backend.n());
    let stride = config.stride_for(plan.iterations);
    report.iterations_run = drive(&mut scheme, &mut state, plan.iterations, config.stop, stride, &mut report, observer)?;
    let x = scheme.plan(&state)?;
    let last = *report.objective_trace.last().expect("final iterate is recorded");
    report.objective = last.f;
    report.entropic_objective = last.g;
    report.dual_objective = report.dual_trace.last().expect("final iterate is recorded").h;
    report.marginal_residual = x.col_marginal().iter().zip(b.weights()).map(|(c, bj)| (c - bj).abs()).sum();
    report.guarantee = Guarantee::new(
        config.schedule == ScheduleMode::TheoremSchedule && report.iterations_run >= plan.iterations,
        "f_rsot",
        plan.epsilon,
    );
    report.wall_time = start.elapsed();
    Ok((x, state, report))
}
