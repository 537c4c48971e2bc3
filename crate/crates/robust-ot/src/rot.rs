//! Robust unconstrained OT: both marginals relaxed by τ·KL, plan mass
//! fixed to one. Solved through the unbalanced problem followed by
//! normalization.

use std::time::Instant;

use crate::config::{drive, DualPoint, Guarantee, Observer, RunPlan, ScheduleMode, ScheduleSummary, Scheme, Silent, SolveReport, SolverConfig, TracePoint};
use crate::divergence::entropy;
use crate::error::{Error, Result};
use crate::gibbs::{DenseGibbs, GibbsBackend};
use crate::measure::{CostMatrix, DiscreteMeasure, DualPotentials, TransportPlan};
use crate::objective::{objective_rot, objective_uot};
use crate::rsot::{check_problem, check_schedule_inputs, log_kernel_mass, r_bound, require_probabilities};

#[derive(Debug, Clone, PartialEq)]
pub struct RotSchedule {
    pub u_const: f64,
    pub eta: f64,
    pub k_required: usize,
    pub r_bound: f64,
    /// The accuracy guarantee is stated for 0 < ε < 1.
    pub guarantee_valid: bool,
}

impl RotSchedule {
    pub fn summary(&self) -> ScheduleSummary {
        ScheduleSummary {
            u_const: self.u_const,
            eta: self.eta,
            r_bound: self.r_bound,
            k1: None,
            k2: None,
            k_required: self.k_required,
            guarantee_valid: self.guarantee_valid,
        }
    }
}

/// max{3(τ+2)/(4(τ+1)) + 2 log n, 2ε, 5ε log n / τ}
pub fn rot_u_const(n: usize, epsilon: f64, tau: f64) -> f64 {
    let log_n = (n as f64).ln();
    (3.0 * (tau + 2.0) / (4.0 * (tau + 1.0)) + 2.0 * log_n)
        .max(2.0 * epsilon)
        .max(5.0 * epsilon * log_n / tau)
}

pub fn rot_schedule(
    n: usize,
    epsilon: f64,
    tau: f64,
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
) -> Result<RotSchedule> {
    check_schedule_inputs(n, epsilon, tau)?;
    if cost.n() != n {
        return Err(Error::Shape(format!("schedule for n = {n} given a {}x{} cost", cost.n(), cost.n())));
    }
    check_problem(cost, &[("a", a), ("b", b)])?;
    Ok(rot_schedule_from_bound(n, epsilon, tau, |eta| r_bound(eta, cost.max_entry(), a, b)))
}

pub(crate) fn rot_schedule_from_bound(n: usize, epsilon: f64, tau: f64, r: impl Fn(f64) -> f64) -> RotSchedule {
    let u_const = rot_u_const(n, epsilon, tau);
    let eta = epsilon / u_const;
    let r_bound = r(eta);
    let k = 1.0 + (tau / eta + 1.0) * (8.0 * r_bound * tau * (tau + 1.0) / (eta * eta)).ln();
    RotSchedule {
        u_const,
        eta,
        k_required: k.ceil().max(1.0) as usize,
        r_bound,
        guarantee_valid: epsilon < 1.0,
    }
}

/// One iteration with both updates damped by ητ/(η+τ).
pub fn uot_sinkhorn_step(
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
    let mut it = UotIteration::new(&kernel, cost, a, b, tau, false);
    let mut next = state.clone();
    it.step(&mut next, k);
    Ok(next)
}

/// η‖B(u,v)‖₁ + τ⟨e^{−u/τ}, a⟩ + τ⟨e^{−v/τ}, b⟩
pub fn dual_value_uot(
    u: &[f64],
    v: &[f64],
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    eta: f64,
    tau: f64,
) -> Result<f64> {
    check_dual_args(u, v, cost, a, b)?;
    let kernel = DenseGibbs::new(cost, eta);
    Ok(eta * log_kernel_mass(&kernel, u, v).exp() + relax_terms(u, v, a, b, tau))
}

/// η log‖B(u,v)‖₁ + τ⟨e^{−u/τ}, a⟩ + τ⟨e^{−v/τ}, b⟩
pub fn dual_value_rot(
    u: &[f64],
    v: &[f64],
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    eta: f64,
    tau: f64,
) -> Result<f64> {
    check_dual_args(u, v, cost, a, b)?;
    let kernel = DenseGibbs::new(cost, eta);
    Ok(eta * log_kernel_mass(&kernel, u, v) + relax_terms(u, v, a, b, tau))
}

fn check_dual_args(u: &[f64], v: &[f64], cost: &CostMatrix, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<()> {
    check_problem(cost, &[("a", a), ("b", b)])?;
    if u.len() != cost.n() || v.len() != cost.n() {
        return Err(Error::Shape("potentials do not match the cost size".into()));
    }
    Ok(())
}

fn relax_terms(u: &[f64], v: &[f64], a: &DiscreteMeasure, b: &DiscreteMeasure, tau: f64) -> f64 {
    let ta: f64 = u.iter().zip(a.weights()).map(|(x, w)| w * (-x / tau).exp()).sum();
    let tb: f64 = v.iter().zip(b.weights()).map(|(x, w)| w * (-x / tau).exp()).sum();
    tau * (ta + tb)
}

/// Sup-norm defects of B1/‖B‖₁ = e^{−u/τ} ⊙ a and Bᵀ1/‖B‖₁ = e^{−v/τ} ⊙ b.
pub fn check_rot_stationarity(
    u: &[f64],
    v: &[f64],
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    eta: f64,
    tau: f64,
) -> Result<(f64, f64)> {
    check_dual_args(u, v, cost, a, b)?;
    let m = crate::gibbs::log_gibbs_marginals(u, v, cost, eta)?;
    let defect = |log_marg: &[f64], pot: &[f64], w: &[f64]| {
        log_marg
            .iter()
            .zip(pot)
            .zip(w)
            .map(|((l, p), wi)| ((l - m.log_mass).exp() - wi * (-p / tau).exp()).abs())
            .fold(0.0, f64::max)
    };
    Ok((defect(&m.log_row, u, a.weights()), defect(&m.log_col, v, b.weights())))
}

/// Optimal entropic ROT value implied by the unbalanced optimum mass x:
/// τ(α + β − 2) − η − (2τ + η) log x.
pub fn rot_value_from_uot_mass(mass: f64, a: &DiscreteMeasure, b: &DiscreteMeasure, eta: f64, tau: f64) -> f64 {
    tau * (a.mass() + b.mass() - 2.0) - eta - (2.0 * tau + eta) * mass.ln()
}

pub(crate) struct UotIteration<'a, B> {
    backend: &'a B,
    eval_cost: &'a CostMatrix,
    a: &'a DiscreteMeasure,
    b: &'a DiscreteMeasure,
    log_a: Vec<f64>,
    log_b: Vec<f64>,
    tau: f64,
    eta: f64,
    damping: f64,
    normalize: bool,
    buf: Vec<f64>,
}

impl<'a, B: GibbsBackend> UotIteration<'a, B> {
    pub(crate) fn new(
        backend: &'a B,
        eval_cost: &'a CostMatrix,
        a: &'a DiscreteMeasure,
        b: &'a DiscreteMeasure,
        tau: f64,
        normalize: bool,
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
            normalize,
            buf: vec![0.0; backend.n()],
        }
    }
}

impl<B: GibbsBackend> Scheme for UotIteration<'_, B> {
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
                *v = self.damping * (lb - l);
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
        let plan = self.backend.plan(&state.u, &state.v, self.normalize)?;
        let f = if self.normalize {
            objective_rot(&plan, self.eval_cost, self.a, self.b, self.tau)?
        } else {
            objective_uot(&plan, self.eval_cost, self.a, self.b, self.tau)?
        };
        report.objective_trace.push(TracePoint {
            iteration: k,
            f,
            g: f - self.eta * entropy(&plan),
        });
        let mass = log_kernel_mass(self.backend, &state.u, &state.v).exp();
        report.dual_trace.push(DualPoint {
            iteration: k,
            h: self.eta * mass + relax_terms(&state.u, &state.v, self.a, self.b, self.tau),
        });
        Ok(())
    }
}

/// Returns the normalized plan and potentials shifted by τ log x so that
/// they satisfy the stationarity conditions checked by
/// [`check_rot_stationarity`]. The report's dual trace holds the
/// unbalanced dual, which the iteration descends.
pub fn solve_rot(
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    config: &SolverConfig,
) -> Result<(TransportPlan, DualPotentials, SolveReport)> {
    solve_rot_observed(cost, a, b, config, &mut Silent)
}

pub fn solve_rot_observed(
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    config: &SolverConfig,
    observer: &mut dyn Observer<DualPotentials>,
) -> Result<(TransportPlan, DualPotentials, SolveReport)> {
    check_problem(cost, &[("a", a), ("b", b)])?;
    let plan = config.resolve(|eps| Ok(rot_schedule(cost.n(), eps, config.tau, cost, a, b)?.summary()))?;
    let kernel = DenseGibbs::new(cost, plan.eta);
    run_uot(&kernel, cost, a, b, config, &plan, true, observer)
}

/// The unbalanced problem itself: raw plan B(u, v) and its potentials.
/// Uses the same η and iteration count as [`solve_rot`]; no accuracy
/// guarantee is attached.
pub fn solve_uot(
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    config: &SolverConfig,
) -> Result<(TransportPlan, DualPotentials, SolveReport)> {
    solve_uot_observed(cost, a, b, config, &mut Silent)
}

pub fn solve_uot_observed(
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    config: &SolverConfig,
    observer: &mut dyn Observer<DualPotentials>,
) -> Result<(TransportPlan, DualPotentials, SolveReport)> {
    check_problem(cost, &[("a", a), ("b", b)])?;
    let plan = config.resolve(|eps| Ok(rot_schedule(cost.n(), eps, config.tau, cost, a, b)?.summary()))?;
    let kernel = DenseGibbs::new(cost, plan.eta);
    run_uot(&kernel, cost, a, b, config, &plan, false, observer)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_uot<B: GibbsBackend>(
    backend: &B,
    eval_cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    config: &SolverConfig,
    plan: &RunPlan,
    normalize: bool,
    observer: &mut dyn Observer<DualPotentials>,
) -> Result<(TransportPlan, DualPotentials, SolveReport)> {
    if normalize {
        require_probabilities(config, &[("a", a), ("b", b)])?;
    }
    let start = Instant::now();
    let name = if normalize { "rot" } else { "uot" };
    let mut report = SolveReport::new(name, config.tau, plan);
    let mut scheme = UotIteration::new(backend, eval_cost, a, b, config.tau, normalize);
    let mut state = DualPotentials::zeros(backend.n());
    let stride = config.stride_for(plan.iterations);
    report.iterations_run = drive(&mut scheme, &mut state, plan.iterations, config.stop, stride, &mut report, observer)?;
    let x = backend.plan(&state.u, &state.v, normalize)?;
    let log_mass = log_kernel_mass(backend, &state.u, &state.v);
    let last = *report.objective_trace.last().expect("final iterate is recorded");
    report.objective = last.f;
    report.entropic_objective = last.g;
    report.dual_objective = report.dual_trace.last().expect("final iterate is recorded").h;
    report.marginal_residual = x.col_marginal().iter().zip(b.weights()).map(|(c, bj)| (c - bj).abs()).sum();
    report.unnormalized_mass = Some(log_mass.exp());
    let valid = normalize
        && config.schedule == ScheduleMode::TheoremSchedule
        && report.iterations_run >= plan.iterations
        && plan.schedule.as_ref().is_some_and(|s| s.guarantee_valid);
    report.guarantee = Guarantee::new(valid, if normalize { "f_rot" } else { "f_uot" }, plan.epsilon);
    if normalize {
        let shift = config.tau * log_mass;
        state.u.iter_mut().for_each(|u| *u += shift);
        state.v.iter_mut().for_each(|v| *v += shift);
    }
    report.wall_time = start.elapsed();
    Ok((x, state, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(w.to_vec()).unwrap()
    }

    #[test]
    fn schedule_arithmetic() {
        let n = 100;
        let c = CostMatrix::from_fn(n, |i, j| ((i + 2 * j) % 9) as f64).unwrap();
        let a = DiscreteMeasure::uniform(n);
        let s = rot_schedule(n, 0.05, 1.0, &c, &a, &a).unwrap();
        assert!((s.u_const - (1.125 + 2.0 * 100f64.ln())).abs() < 1e-12);
        assert!((s.eta - 0.00483777).abs() < 1e-8);
        assert!(s.guarantee_valid);
    }

    #[test]
    fn large_tau_limit() {
        let u = rot_u_const(50, 1e-3, 1e9);
        assert!((u - (0.75 + 2.0 * 50f64.ln())).abs() < 1e-8);
    }

    #[test]
    fn single_point_fixed() {
        let c = CostMatrix::zeros(1);
        let a = m(&[1.0]);
        let s = uot_sinkhorn_step(&DualPotentials::zeros(1), 0, &c, &a, &a, 0.5, 1.0).unwrap();
        let s = uot_sinkhorn_step(&s, 1, &c, &a, &a, 0.5, 1.0).unwrap();
        assert_eq!(s, DualPotentials::zeros(1));
        assert_eq!(check_rot_stationarity(&s.u, &s.v, &c, &a, &a, 0.5, 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn symmetric_instance_swaps_roles() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 0.5], vec![2.0, 0.5, 0.0]]).unwrap();
        let a = m(&[0.2, 0.3, 0.5]);
        let (eta, tau) = (0.1, 1.0);
        let mut s = DualPotentials::zeros(3);
        for k in 0..8 {
            let next = uot_sinkhorn_step(&s, k, &c, &a, &a, eta, tau).unwrap();
            let swapped = DualPotentials {
                u: s.v.clone(),
                v: s.u.clone(),
            };
            let mirror = uot_sinkhorn_step(&swapped, k + 1, &c, &a, &a, eta, tau).unwrap();
            assert_eq!(mirror.v, next.u);
            assert_eq!(mirror.u, next.v);
            s = next;
        }
    }

    #[test]
    fn zero_optimum_instance() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let a = DiscreteMeasure::uniform(2);
        let (x, _, report) = solve_rot(&c, &a, &a, &SolverConfig::theorem(1.0, 1e-3)).unwrap();
        assert!(report.objective <= 1e-3);
        assert!((x.mass() - 1.0).abs() < 1e-12);
        assert!(report.unnormalized_mass.is_some());
    }

    #[test]
    fn forced_single_point() {
        let c = CostMatrix::new(1, vec![3.5]).unwrap();
        let a = m(&[1.0]);
        for tau in [0.1, 1.0, 10.0] {
            let (x, _, report) = solve_rot(&c, &a, &a, &SolverConfig::manual(tau, 0.05, 4)).unwrap();
            assert!((x.get(0, 0) - 1.0).abs() < 1e-15);
            assert!((report.objective - 3.5).abs() < 1e-12);
        }
    }

    #[test]
    fn stationarity_at_zero_matches_direct_defect() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.5]]).unwrap();
        let a = m(&[0.4, 0.6]);
        let b = m(&[0.7, 0.3]);
        let (r, s) = check_rot_stationarity(&[0.0; 2], &[0.0; 2], &c, &a, &b, 1.0, 1.0).unwrap();
        let k = [1.0, (-1.0f64).exp(), (-2.0f64).exp(), (-0.5f64).exp()];
        let total: f64 = k.iter().sum();
        let rows = [(k[0] + k[1]) / total, (k[2] + k[3]) / total];
        let cols = [(k[0] + k[2]) / total, (k[1] + k[3]) / total];
        let dr = (rows[0] - 0.4f64).abs().max((rows[1] - 0.6f64).abs());
        let dc = (cols[0] - 0.7f64).abs().max((cols[1] - 0.3f64).abs());
        assert!((r - dr).abs() < 1e-12);
        assert!((s - dc).abs() < 1e-12);
    }
}
