//! Solver configuration, reports and the shared iteration driver.

use std::time::Duration;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Either the target accuracy ε (η derived from the schedule) or an
/// explicit entropic regularization η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    Epsilon(f64),
    Eta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// η = ε/U and the iteration count k_required.
    TheoremSchedule,
    /// Caller-supplied iteration count; no accuracy guarantee.
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    FixedIterations,
    /// Stop once max{‖Δu‖∞, ‖Δv‖∞} over a full u,v round is at most the tolerance.
    DualResidual(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub regularization: Regularization,
    pub schedule: ScheduleMode,
    pub max_iter: usize,
    pub stop: StopRule,
    /// Spacing of trace points. `None` picks about 256 points, `Some(0)`
    /// records only the first and last iterate.
    pub trace_stride: Option<usize>,
}

impl SolverConfig {
    pub fn theorem(tau: f64, epsilon: f64) -> Self {
        Self {
            tau,
            regularization: Regularization::Epsilon(epsilon),
            schedule: ScheduleMode::TheoremSchedule,
            max_iter: usize::MAX,
            stop: StopRule::FixedIterations,
            trace_stride: None,
        }
    }

    pub fn manual(tau: f64, eta: f64, iterations: usize) -> Self {
        Self {
            tau,
            regularization: Regularization::Eta(eta),
            schedule: ScheduleMode::Manual,
            max_iter: iterations,
            stop: StopRule::FixedIterations,
            trace_stride: None,
        }
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_trace_stride(mut self, stride: usize) -> Self {
        self.trace_stride = Some(stride);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        match self.regularization {
            Regularization::Epsilon(e) if !(e > 0.0 && e.is_finite()) => {
                return Err(Error::Config(format!("epsilon must be positive, got {e}")))
            }
            Regularization::Eta(e) if !(e > 0.0 && e.is_finite()) => {
                return Err(Error::Config(format!("eta must be positive, got {e}")))
            }
            _ => {}
        }
        if let StopRule::DualResidual(tol) = self.stop {
            if !(tol >= 0.0) {
                return Err(Error::Config(format!("residual tolerance must be nonnegative, got {tol}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Resolves η and the iteration count. `derive` builds the theorem
    /// schedule for a given ε.
    pub(crate) fn resolve(&self, derive: impl FnOnce(f64) -> Result<ScheduleSummary>) -> Result<RunPlan> {
        self.validate()?;
        match (self.schedule, self.regularization) {
            (ScheduleMode::TheoremSchedule, Regularization::Eta(_)) => Err(Error::Config(
                "the theorem schedule derives eta from epsilon; pass epsilon or use manual mode".into(),
            )),
            (ScheduleMode::TheoremSchedule, Regularization::Epsilon(eps)) => {
                let schedule = derive(eps)?;
                let iterations = schedule.k_required + schedule.k_required % 2;
                if self.max_iter < iterations {
                    return Err(Error::Config(format!(
                        "max_iter {} is below the required {} iterations",
                        self.max_iter, iterations
                    )));
                }
                Ok(RunPlan {
                    eta: schedule.eta,
                    epsilon: Some(eps),
                    iterations,
                    schedule: Some(schedule),
                })
            }
            (ScheduleMode::Manual, reg) => {
                let iterations = (self.max_iter - self.max_iter % 2).max(2);
                let (eta, epsilon, schedule) = match reg {
                    Regularization::Eta(eta) => (eta, None, None),
                    Regularization::Epsilon(eps) => {
                        let s = derive(eps)?;
                        (s.eta, Some(eps), Some(s))
                    }
                };
                Ok(RunPlan {
                    eta,
                    epsilon,
                    iterations,
                    schedule,
                })
            }
        }
    }

    pub(crate) fn stride_for(&self, iterations: usize) -> usize {
        let s = match self.trace_stride {
            Some(0) => return 0,
            Some(s) => s,
            None => iterations.div_ceil(256),
        };
        (s + s % 2).max(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RunPlan {
    pub eta: f64,
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub schedule: Option<ScheduleSummary>,
}

/// Schedule constants echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleSummary {
    #[serde(rename = "U", serialize_with = "ser_f64")]
    pub u_const: f64,
    #[serde(serialize_with = "ser_f64")]
    pub eta: f64,
    #[serde(rename = "R", serialize_with = "ser_f64")]
    pub r_bound: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub k1: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub k2: Option<f64>,
    pub k_required: usize,
    pub guarantee_valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationBudget,
    DualResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    #[serde(serialize_with = "ser_f64")]
    pub f: f64,
    #[serde(serialize_with = "ser_f64")]
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualPoint {
    pub iteration: usize,
    #[serde(serialize_with = "ser_f64")]
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Guarantee {
    pub valid: bool,
    pub statement: String,
}

impl Guarantee {
    pub(crate) fn new(valid: bool, objective: &str, epsilon: Option<f64>) -> Self {
        match (valid, epsilon) {
            (true, Some(eps)) => Self {
                valid,
                statement: format!("{objective}(X) - {objective}(X_opt) <= {eps:e}"),
            },
            _ => Self {
                valid: false,
                statement: "no ε-guarantee".into(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub problem: String,
    pub iterations_run: usize,
    #[serde(serialize_with = "ser_f64")]
    pub tau: f64,
    #[serde(serialize_with = "ser_f64")]
    pub eta: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub epsilon: Option<f64>,
    pub schedule: Option<ScheduleSummary>,
    pub stop_reason: StopReason,
    pub guarantee: Guarantee,
    #[serde(serialize_with = "ser_f64")]
    pub objective: f64,
    #[serde(serialize_with = "ser_f64")]
    pub entropic_objective: f64,
    #[serde(serialize_with = "ser_f64")]
    pub dual_objective: f64,
    /// ‖Xᵀ1 − b‖₁ at exit; for the unconstrained problems the KL-relaxed
    /// column marginal makes this informational only.
    #[serde(serialize_with = "ser_f64")]
    pub marginal_residual: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub unnormalized_mass: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub marginal_spread: Option<f64>,
    pub clamp_count: Option<usize>,
    pub objective_trace: Vec<TracePoint>,
    pub dual_trace: Vec<DualPoint>,
    #[serde(serialize_with = "ser_vec_f64")]
    pub contraction_estimates: Vec<f64>,
    #[serde(serialize_with = "ser_duration")]
    pub wall_time: Duration,
    pub notes: Vec<String>,
}

impl SolveReport {
    pub(crate) fn new(problem: &str, tau: f64, plan: &RunPlan) -> Self {
        Self {
            problem: problem.into(),
            iterations_run: 0,
            tau,
            eta: plan.eta,
            epsilon: plan.epsilon,
            schedule: plan.schedule.clone(),
            stop_reason: StopReason::IterationBudget,
            guarantee: Guarantee::new(false, problem, None),
            objective: f64::NAN,
            entropic_objective: f64::NAN,
            dual_objective: f64::NAN,
            marginal_residual: f64::NAN,
            unnormalized_mass: None,
            marginal_spread: None,
            clamp_count: None,
            objective_trace: Vec::new(),
            dual_trace: Vec::new(),
            contraction_estimates: Vec::new(),
            wall_time: Duration::ZERO,
            notes: Vec::new(),
        }
    }
}

/// Serializes a float with 17 significant digits; non-finite values become null.
pub(crate) fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

pub(crate) fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

pub(crate) fn ser_vec_f64<S: Serializer>(x: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(x.len()))?;
    for v in x {
        if v.is_finite() {
            seq.serialize_element(v)?;
        } else {
            seq.serialize_element(&Option::<f64>::None)?;
        }
    }
    seq.end()
}

fn ser_duration<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Receives the iterate after every completed iteration, starting at 0.
pub trait Observer<S> {
    fn observe(&mut self, iteration: usize, state: &S);
}

impl<S, F: FnMut(usize, &S)> Observer<S> for F {
    fn observe(&mut self, iteration: usize, state: &S) {
        self(iteration, state)
    }
}

/// Observer that ignores everything.
pub struct Silent;

impl<S> Observer<S> for Silent {
    fn observe(&mut self, _: usize, _: &S) {}
}

/// One alternating scheme: even iterations update u, odd iterations update v.
pub(crate) trait Scheme {
    type State: Clone;

    fn step(&mut self, state: &mut Self::State, k: usize);

    fn is_finite(state: &Self::State) -> bool;

    fn distance(a: &Self::State, b: &Self::State) -> f64;

    /// Appends trace entries for the iterate after `k` iterations.
    fn record(&mut self, k: usize, state: &Self::State, report: &mut SolveReport) -> Result<()>;
}

/// Runs `iterations` steps (an even count). Returns the number performed.
pub(crate) fn drive<S: Scheme>(
    scheme: &mut S,
    state: &mut S::State,
    iterations: usize,
    stop: StopRule,
    stride: usize,
    report: &mut SolveReport,
    observer: &mut dyn Observer<S::State>,
) -> Result<usize> {
    observer.observe(0, state);
    if stride > 0 {
        scheme.record(0, state, report)?;
    }
    let mut round_start = state.clone();
    let mut last_change = f64::NAN;
    let mut done = 0;
    let mut recorded = if stride > 0 { Some(0) } else { None };
    for k in 0..iterations {
        scheme.step(state, k);
        done = k + 1;
        if !S::is_finite(state) {
            return Err(Error::NonFinite { iteration: done });
        }
        observer.observe(done, state);
        if done % 2 != 0 {
            continue;
        }
        let change = S::distance(state, &round_start);
        round_start.clone_from(state);
        let at_stride = stride > 0 && done % stride == 0;
        if at_stride && done < iterations {
            report.contraction_estimates.push(change / last_change);
            scheme.record(done, state, report)?;
            recorded = Some(done);
        }
        last_change = change;
        if let StopRule::DualResidual(tol) = stop {
            if change <= tol {
                report.stop_reason = StopReason::DualResidual;
                break;
            }
        }
    }
    if recorded != Some(done) {
        scheme.record(done, state, report)?;
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(k: usize) -> ScheduleSummary {
        ScheduleSummary {
            u_const: 1.0,
            eta: 0.5,
            r_bound: 1.0,
            k1: None,
            k2: None,
            k_required: k,
            guarantee_valid: true,
        }
    }

    #[test]
    fn theorem_mode_rejects_explicit_eta() {
        let c = SolverConfig {
            schedule: ScheduleMode::TheoremSchedule,
            ..SolverConfig::manual(1.0, 0.1, 10)
        };
        assert!(matches!(c.resolve(|_| Ok(summary(4))), Err(Error::Config(_))));
    }

    #[test]
    fn theorem_mode_checks_budget() {
        let c = SolverConfig::theorem(1.0, 0.1).with_max_iter(10);
        assert!(matches!(c.resolve(|_| Ok(summary(12))), Err(Error::Config(_))));
        let plan = c.resolve(|_| Ok(summary(8))).unwrap();
        assert_eq!(plan.iterations, 8);
        assert_eq!(plan.eta, 0.5);
    }

    #[test]
    fn manual_mode_rounds_to_even() {
        let plan = SolverConfig::manual(1.0, 0.1, 7).resolve(|_| unreachable!()).unwrap();
        assert_eq!(plan.iterations, 6);
        let plan = SolverConfig::manual(1.0, 0.1, 1).resolve(|_| unreachable!()).unwrap();
        assert_eq!(plan.iterations, 2);
    }

    #[test]
    fn stride_is_even() {
        let c = SolverConfig::theorem(1.0, 0.1);
        assert_eq!(c.stride_for(1000), 4);
        assert_eq!(c.clone().with_trace_stride(3).stride_for(1000), 4);
        assert_eq!(c.with_trace_stride(0).stride_for(1000), 0);
    }
}
