//! Reference minimizers for the unregularized problems, used to check the
//! solvers. Nothing here shares iteration or marginal code with them.
//!
//! Each oracle runs two paths. The first is an interior-point method on
//! the unregularized dual, a separable concave program under the linear
//! constraints t_i + v_j ≤ C_ij whose multipliers form the plan; it is run
//! from several strictly feasible starts. The second is damped Newton on
//! the smooth entropic dual driven to a small η. The dual point gives a
//! weak-duality lower bound, so the optimum lies in
//! [`lower_bound`, `objective`].
//!
//! [`lower_bound`]: OracleResult::lower_bound
//! [`objective`]: OracleResult::objective

mod barrier;
mod newton;

use rand::Rng;
use rayon::prelude::*;

use crate::barycenter::BarycenterProblem;
use crate::error::{Error, Result};
use crate::measure::{CostMatrix, DiscreteMeasure, TransportPlan};
use barrier::{maximize, Constraint, Separable};
use newton::{continuation, FamilyDual, PairDual};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Required certified gap, relative to 1 + |objective|.
    pub tol: f64,
    pub restarts: usize,
    pub max_n: usize,
    pub max_n_barycenter: usize,
    pub seed: u64,
    /// Final η of the dual path.
    pub dual_eta: f64,
    /// Allowed relative gap between the two paths.
    pub agreement: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            restarts: 20,
            max_n: 12,
            max_n_barycenter: 6,
            seed: 0,
            dual_eta: 1e-5,
            agreement: 5e-5,
        }
    }
}

impl OracleOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_max_n(mut self, max_n: usize) -> Self {
        self.max_n = max_n;
        self
    }

    pub fn with_dual_eta(mut self, eta: f64) -> Self {
        self.dual_eta = eta;
        self
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub objective: f64,
    /// X_1 for the barycenter; all m plans are in `plans`.
    pub plan: TransportPlan,
    pub plans: Vec<TransportPlan>,
    /// ℓ∞ KKT residual of the recovered pair: row-marginal mismatch and
    /// complementary slackness.
    pub stationarity_residual: f64,
    pub restarts_used: usize,
    /// Weak-duality bound: lower_bound ≤ optimum ≤ objective.
    pub lower_bound: f64,
    pub dual_path_objective: f64,
    /// max − min of the objectives reached by converged restarts.
    pub restart_spread: f64,
}

fn kl(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| if xi > 0.0 { xi * (xi / yi).ln() - xi + yi } else { yi })
        .sum()
}

fn rows(x: &[f64], n: usize) -> Vec<f64> {
    x.chunks(n).map(|r| r.iter().sum()).collect()
}

fn cols(x: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for r in x.chunks(n) {
        for (cj, v) in c.iter_mut().zip(r) {
            *cj += v;
        }
    }
    c
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn direct_rsot(x: &[f64], c: &[f64], a: &[f64], tau: f64) -> f64 {
    dot(c, x) + tau * kl(&rows(x, a.len()), a)
}

fn direct_rot(x: &[f64], c: &[f64], a: &[f64], b: &[f64], tau: f64) -> f64 {
    let n = a.len();
    dot(c, x) + tau * kl(&rows(x, n), a) + tau * kl(&cols(x, n), b)
}

/// τ Σ_i a_i (1 − exp(−min_j(C_ij − v_j)/τ))
fn relaxed_row_term(c: &[f64], a: &[f64], v: &[f64], tau: f64) -> f64 {
    let n = a.len();
    (0..n)
        .map(|i| {
            let m = (0..n).map(|j| c[i * n + j] - v[j]).fold(f64::INFINITY, f64::min);
            tau * a[i] * (1.0 - (-m / tau).exp())
        })
        .sum()
}

/// Weak-duality bound ⟨v, b⟩ + τ Σ_i a_i(1 − e^{−min_j(C_ij − v_j)/τ}),
/// valid for every v.
fn rsot_lower_bound(v: &[f64], c: &[f64], a: &[f64], b: &[f64], tau: f64) -> f64 {
    dot(v, b) + relaxed_row_term(c, a, v, tau)
}

/// Weak-duality bound min_ij(C_ij + φ_i + ψ_j) − τ⟨a, e^{φ/τ} − 1⟩ − τ⟨b, e^{ψ/τ} − 1⟩.
fn rot_lower_bound(phi: &[f64], psi: &[f64], c: &[f64], a: &[f64], b: &[f64], tau: f64) -> f64 {
    let n = a.len();
    let mut m = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            m = m.min(c[i * n + j] + phi[i] + psi[j]);
        }
    }
    let conj = |p: &[f64], w: &[f64]| tau * p.iter().zip(w).map(|(pi, wi)| wi * ((pi / tau).exp() - 1.0)).sum::<f64>();
    m - conj(phi, a) - conj(psi, b)
}

fn rescale_columns(x: &mut [f64], n: usize, target: &[f64]) {
    let s = cols(x, n);
    for row in x.chunks_mut(n) {
        for j in 0..n {
            row[j] *= if s[j] > 0.0 { target[j] / s[j] } else { 0.0 };
        }
    }
}

fn max_abs(x: impl Iterator<Item = f64>) -> f64 {
    x.map(f64::abs).fold(0.0, f64::max)
}

struct Program {
    phi: Separable,
    cons: Vec<Constraint>,
}

/// y = (v, t), maximize ⟨v, b⟩ + τ Σ a_i(1 − e^{−t_i/τ}) s.t. t_i + v_j ≤ C_ij.
fn rsot_program(c: &[f64], a: &[f64], b: &[f64], tau: f64) -> Program {
    let n = a.len();
    let mut lin = b.to_vec();
    lin.extend(std::iter::repeat_n(0.0, n));
    let mut weight = vec![0.0; n];
    weight.extend_from_slice(a);
    let cons = (0..n * n)
        .map(|k| Constraint {
            terms: vec![(n + k / n, 1.0), (k % n, 1.0)],
            rhs: c[k],
        })
        .collect();
    Program {
        phi: Separable {
            lin,
            weight,
            sign: vec![-1.0; 2 * n],
            tau,
        },
        cons,
    }
}

fn rsot_start(c: &[f64], n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let t: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| c[i * n + j] - v[j]).fold(f64::INFINITY, f64::min) - 1.0)
        .collect();
    [v, t].concat()
}

/// y = (φ, ψ, λ), maximize λ − τ⟨a, e^{φ/τ} − 1⟩ − τ⟨b, e^{ψ/τ} − 1⟩
/// s.t. λ − φ_i − ψ_j ≤ C_ij.
fn rot_program(c: &[f64], a: &[f64], b: &[f64], tau: f64) -> Program {
    let n = a.len();
    let mut lin = vec![0.0; 2 * n];
    lin.push(1.0);
    let mut weight = [a, b].concat();
    weight.push(0.0);
    let cons = (0..n * n)
        .map(|k| Constraint {
            terms: vec![(2 * n, 1.0), (k / n, -1.0), (n + k % n, -1.0)],
            rhs: c[k],
        })
        .collect();
    Program {
        phi: Separable {
            lin,
            weight,
            sign: vec![1.0; 2 * n + 1],
            tau,
        },
        cons,
    }
}

fn rot_start(c: &[f64], n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut y: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut m = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            m = m.min(c[i * n + j] + y[i] + y[n + j]);
        }
    }
    y.push(m - 1.0);
    y
}

/// y = (v_1..v_m, t_1..t_m, λ), maximize λ + Σ_i ω_i τ Σ_k p_ik(1 − e^{−t_ik/τ})
/// s.t. t_ik + v_ij ≤ (C_i)_kj and λ ≤ Σ_i ω_i v_ij.
fn rsbp_program(problem: &BarycenterProblem, tau: f64) -> Program {
    let (n, m) = (problem.n(), problem.m());
    let dim = 2 * m * n + 1;
    let mut lin = vec![0.0; dim];
    lin[dim - 1] = 1.0;
    let mut weight = vec![0.0; dim];
    let mut cons = Vec::with_capacity(m * n * n + n);
    for i in 0..m {
        let w = problem.weights()[i];
        for (k, p) in problem.measures()[i].weights().iter().enumerate() {
            weight[m * n + i * n + k] = w * p;
        }
        let c = problem.costs()[i].entries();
        for (kj, &cost) in c.iter().enumerate() {
            cons.push(Constraint {
                terms: vec![(m * n + i * n + kj / n, 1.0), (i * n + kj % n, 1.0)],
                rhs: cost,
            });
        }
    }
    for j in 0..n {
        let mut terms = vec![(dim - 1, 1.0)];
        terms.extend((0..m).map(|i| (i * n + j, -problem.weights()[i])));
        cons.push(Constraint { terms, rhs: 0.0 });
    }
    Program {
        phi: Separable {
            lin,
            weight,
            sign: vec![-1.0; dim],
            tau,
        },
        cons,
    }
}

fn rsbp_start(problem: &BarycenterProblem, rng: &mut impl Rng) -> Vec<f64> {
    let (n, m) = (problem.n(), problem.m());
    let v: Vec<f64> = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut t = Vec::with_capacity(m * n);
    for i in 0..m {
        let c = problem.costs()[i].entries();
        for k in 0..n {
            t.push((0..n).map(|j| c[k * n + j] - v[i * n + j]).fold(f64::INFINITY, f64::min) - 1.0);
        }
    }
    let lambda = (0..n)
        .map(|j| (0..m).map(|i| problem.weights()[i] * v[i * n + j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let mut y = [v, t].concat();
    y.push(lambda);
    y
}

/// A recovered primal-dual pair from one interior-point run.
struct Candidate {
    objective: f64,
    lower_bound: f64,
    residual: f64,
    plans: Vec<Vec<f64>>,
}

/// Runs every start in parallel, keeps runs with certified gap within
/// tolerance, and returns the lowest objective (ties to the lowest index)
/// with the spread across kept runs.
fn best_candidate(
    program: &Program,
    starts: Vec<Vec<f64>>,
    opts: &OracleOptions,
    recover: impl Fn(&[f64], &[f64]) -> Candidate + Sync,
) -> Result<(Candidate, f64)> {
    let accept = |c: &Candidate| c.objective - c.lower_bound <= opts.tol * (1.0 + c.objective.abs());
    let runs: Vec<Option<Candidate>> = starts
        .into_par_iter()
        .map(|y0| {
            let out = maximize(&program.phi, &program.cons, y0, 1e-13, |o| accept(&recover(&o.y, &o.multipliers)))?;
            Some(recover(&out.y, &out.multipliers))
        })
        .collect();
    let mut kept: Vec<Candidate> = Vec::new();
    let mut worst_gap = 0.0f64;
    for c in runs.into_iter().flatten() {
        if accept(&c) {
            kept.push(c);
        } else {
            worst_gap = worst_gap.max(c.objective - c.lower_bound);
        }
    }
    if kept.is_empty() {
        return Err(Error::NonConvergence(format!(
            "interior-point oracle did not certify a gap within {:e} (worst {worst_gap:e})",
            opts.tol
        )));
    }
    let hi = kept.iter().map(|c| c.objective).fold(f64::NEG_INFINITY, f64::max);
    let mut best = 0;
    for (k, c) in kept.iter().enumerate() {
        if c.objective < kept[best].objective {
            best = k;
        }
    }
    let best = kept.swap_remove(best);
    let spread = hi - best.objective;
    Ok((best, spread))
}

fn check_size(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::InvalidInput(format!("oracle limited to n <= {limit}, got n = {n}")));
    }
    Ok(())
}

fn check_agreement(primal: f64, dual: f64, opts: &OracleOptions) -> Result<()> {
    if (primal - dual).abs() > opts.agreement * (1.0 + primal.abs()) {
        return Err(Error::NonConvergence(format!(
            "oracle paths disagree: interior point {primal:.12e}, dual {dual:.12e}"
        )));
    }
    Ok(())
}

fn to_plan(n: usize, x: Vec<f64>) -> Result<TransportPlan> {
    TransportPlan::new(n, x.into_iter().map(|v| v.max(0.0)).collect())
}

fn check_inputs(n: usize, a: &DiscreteMeasure, b: &DiscreteMeasure, tau: f64) -> Result<()> {
    if a.len() != n || b.len() != n {
        return Err(Error::Shape(format!("measures of length {} and {} for cost of size {n}", a.len(), b.len())));
    }
    check_tau(tau)
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

fn starts(opts: &OracleOptions, experiment: &str, draw: impl Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<f64>) -> Vec<Vec<f64>> {
    (0..opts.restarts.max(1))
        .map(|r| draw(&mut crate::rng::stream(experiment, opts.seed, r as u64)))
        .collect()
}

fn single(best: Candidate, n: usize, spread: f64, dual_path: f64, restarts: usize) -> Result<OracleResult> {
    let plan = to_plan(n, best.plans.into_iter().next().expect("one plan"))?;
    Ok(OracleResult {
        objective: best.objective,
        plans: vec![plan.clone()],
        plan,
        stationarity_residual: best.residual,
        restarts_used: restarts,
        lower_bound: best.lower_bound,
        dual_path_objective: dual_path,
        restart_spread: spread,
    })
}

pub fn oracle_rsot(c: &CostMatrix, a: &DiscreteMeasure, b: &DiscreteMeasure, tau: f64, tol: f64) -> Result<OracleResult> {
    oracle_rsot_with(c, a, b, tau, &OracleOptions::default().with_tol(tol))
}

/// Minimizes ⟨C, X⟩ + τ KL(X1‖a) over {X ≥ 0, Xᵀ1 = b}.
pub fn oracle_rsot_with(
    c: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    tau: f64,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let n = c.n();
    check_inputs(n, a, b, tau)?;
    check_size(n, opts.max_n)?;
    let (cv, av, bv) = (c.entries(), a.weights(), b.weights());
    let program = rsot_program(cv, av, bv, tau);
    let recover = |y: &[f64], x: &[f64]| {
        let (v, t) = y.split_at(n);
        let mut plan = x.to_vec();
        let target_rows: Vec<f64> = (0..n).map(|i| av[i] * (-t[i] / tau).exp()).collect();
        let row_err = max_abs(rows(&plan, n).iter().zip(&target_rows).map(|(r, q)| r - q));
        let comp = max_abs((0..n * n).map(|k| plan[k] * (cv[k] - t[k / n] - v[k % n])));
        rescale_columns(&mut plan, n, bv);
        Candidate {
            objective: direct_rsot(&plan, cv, av, tau),
            lower_bound: rsot_lower_bound(v, cv, av, bv, tau),
            residual: row_err.max(comp),
            plans: vec![plan],
        }
    };
    let (best, spread) = best_candidate(&program, starts(opts, "oracle-rsot", |r| rsot_start(cv, n, r)), opts, recover)?;
    let dual_path = {
        let make = |eta| PairDual {
            cost: cv,
            a: av,
            b: bv,
            tau,
            eta,
            relaxed: false,
        };
        let z = continuation(make, c.max_entry().max(opts.dual_eta), opts.dual_eta, vec![0.0; 2 * n]);
        let mut x = make(opts.dual_eta).plan(&z).ok_or_else(|| Error::NonConvergence("dual path overflowed".into()))?;
        rescale_columns(&mut x, n, bv);
        direct_rsot(&x, cv, av, tau)
    };
    check_agreement(best.objective, dual_path, opts)?;
    single(best, n, spread, dual_path, opts.restarts.max(1))
}

pub fn oracle_rot(c: &CostMatrix, a: &DiscreteMeasure, b: &DiscreteMeasure, tau: f64, tol: f64) -> Result<OracleResult> {
    oracle_rot_with(c, a, b, tau, &OracleOptions::default().with_tol(tol))
}

/// Minimizes ⟨C, X⟩ + τ KL(X1‖a) + τ KL(Xᵀ1‖b) over {X ≥ 0, ‖X‖₁ = 1}.
pub fn oracle_rot_with(
    c: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    tau: f64,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let n = c.n();
    check_inputs(n, a, b, tau)?;
    check_size(n, opts.max_n)?;
    let (cv, av, bv) = (c.entries(), a.weights(), b.weights());
    let program = rot_program(cv, av, bv, tau);
    let recover = |y: &[f64], x: &[f64]| {
        let (phi, rest) = y.split_at(n);
        let (psi, lambda) = rest.split_at(n);
        let mut plan = x.to_vec();
        let r_err = max_abs(rows(&plan, n).iter().zip(phi.iter().zip(av)).map(|(r, (p, w))| r - w * (p / tau).exp()));
        let c_err = max_abs(cols(&plan, n).iter().zip(psi.iter().zip(bv)).map(|(s, (p, w))| s - w * (p / tau).exp()));
        let comp = max_abs((0..n * n).map(|k| plan[k] * (cv[k] - lambda[0] + phi[k / n] + psi[k % n])));
        let mass: f64 = plan.iter().sum();
        plan.iter_mut().for_each(|v| *v /= mass);
        Candidate {
            objective: direct_rot(&plan, cv, av, bv, tau),
            lower_bound: rot_lower_bound(phi, psi, cv, av, bv, tau),
            residual: r_err.max(c_err).max(comp),
            plans: vec![plan],
        }
    };
    let (best, spread) = best_candidate(&program, starts(opts, "oracle-rot", |r| rot_start(cv, n, r)), opts, recover)?;
    let dual_path = {
        let make = |eta| PairDual {
            cost: cv,
            a: av,
            b: bv,
            tau,
            eta,
            relaxed: true,
        };
        let z = continuation(make, c.max_entry().max(opts.dual_eta), opts.dual_eta, vec![0.0; 2 * n]);
        let mut x = make(opts.dual_eta).plan(&z).ok_or_else(|| Error::NonConvergence("dual path overflowed".into()))?;
        let mass: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= mass);
        direct_rot(&x, cv, av, bv, tau)
    };
    check_agreement(best.objective, dual_path, opts)?;
    single(best, n, spread, dual_path, opts.restarts.max(1))
}

fn rsbp_direct(plans: &[Vec<f64>], problem: &BarycenterProblem, tau: f64) -> f64 {
    (0..problem.m())
        .map(|i| {
            problem.weights()[i]
                * direct_rsot(&plans[i], problem.costs()[i].entries(), problem.measures()[i].weights(), tau)
        })
        .sum()
}

pub fn oracle_rsbp(problem: &BarycenterProblem, tau: f64, tol: f64) -> Result<OracleResult> {
    oracle_rsbp_with(problem, tau, &OracleOptions::default().with_tol(tol))
}

/// Minimizes Σ_i ω_i[⟨C_i, X_i⟩ + τ KL(X_i1‖p_i)] over mass-one plans
/// sharing one column marginal.
pub fn oracle_rsbp_with(problem: &BarycenterProblem, tau: f64, opts: &OracleOptions) -> Result<OracleResult> {
    let (n, m) = (problem.n(), problem.m());
    if m > 3 {
        return Err(Error::InvalidInput(format!("barycenter oracle limited to m <= 3, got m = {m}")));
    }
    check_size(n, opts.max_n_barycenter)?;
    check_tau(tau)?;
    let program = rsbp_program(problem, tau);
    let w = problem.weights();
    let recover = |y: &[f64], x: &[f64]| {
        let (v, rest) = y.split_at(m * n);
        let t = &rest[..m * n];
        let mut q: Vec<f64> = x[m * n * n..].to_vec();
        let qs: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= qs);
        let mut plans = Vec::with_capacity(m);
        let mut residual = 0.0f64;
        let mut lower = 0.0;
        let mut vsum = vec![0.0; n];
        for i in 0..m {
            let c = problem.costs()[i].entries();
            let p = problem.measures()[i].weights();
            let (vi, ti) = (&v[i * n..(i + 1) * n], &t[i * n..(i + 1) * n]);
            let mut plan: Vec<f64> = x[i * n * n..(i + 1) * n * n].iter().map(|e| e / w[i]).collect();
            let row_err = max_abs(rows(&plan, n).iter().enumerate().map(|(k, r)| r - p[k] * (-ti[k] / tau).exp()));
            let comp = max_abs((0..n * n).map(|k| plan[k] * (c[k] - ti[k / n] - vi[k % n])));
            residual = residual.max(row_err).max(comp);
            rescale_columns(&mut plan, n, &q);
            plans.push(plan);
            lower += w[i] * relaxed_row_term(c, p, vi, tau);
            for (s, vj) in vsum.iter_mut().zip(vi) {
                *s += w[i] * vj;
            }
        }
        lower += vsum.iter().copied().fold(f64::INFINITY, f64::min);
        Candidate {
            objective: rsbp_direct(&plans, problem, tau),
            lower_bound: lower,
            residual,
            plans,
        }
    };
    let (best, spread) = best_candidate(&program, starts(opts, "oracle-rsbp", |r| rsbp_start(problem, r)), opts, recover)?;
    let dual_path = {
        let costs: Vec<&[f64]> = problem.costs().iter().map(|c| c.entries()).collect();
        let measures: Vec<&[f64]> = problem.measures().iter().map(|p| p.weights()).collect();
        let make = |eta| FamilyDual {
            costs: costs.clone(),
            measures: measures.clone(),
            weights: w,
            n,
            tau,
            eta,
        };
        let start = problem.costs().iter().map(|c| c.max_entry()).fold(opts.dual_eta, f64::max);
        let z = continuation(make, start, opts.dual_eta, vec![0.0; (2 * m - 1) * n]);
        let mut plans = make(opts.dual_eta)
            .plans(&z)
            .ok_or_else(|| Error::NonConvergence("dual path overflowed".into()))?;
        for x in plans.iter_mut() {
            let mass: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= mass);
        }
        rsbp_direct(&plans, problem, tau)
    };
    check_agreement(best.objective, dual_path, opts)?;
    let plans: Vec<TransportPlan> = best.plans.into_iter().map(|x| to_plan(n, x)).collect::<Result<_>>()?;
    Ok(OracleResult {
        objective: best.objective,
        plan: plans[0].clone(),
        plans,
        stationarity_residual: best.residual,
        restarts_used: opts.restarts.max(1),
        lower_bound: best.lower_bound,
        dual_path_objective: dual_path,
        restart_spread: spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(w.to_vec()).unwrap()
    }

    #[test]
    fn rsot_zero_optimum() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let a = DiscreteMeasure::uniform(2);
        let r = oracle_rsot(&c, &a, &a, 1.0, 1e-10).unwrap();
        assert!(r.objective <= 1e-9);
        assert!(r.lower_bound <= r.objective + 1e-12);
    }

    #[test]
    fn forced_single_point() {
        let c = CostMatrix::new(1, vec![5.0]).unwrap();
        let a = m(&[1.0]);
        assert!((oracle_rsot(&c, &a, &a, 1.0, 1e-10).unwrap().objective - 5.0).abs() < 1e-12);
        assert!((oracle_rot(&c, &a, &a, 1.0, 1e-10).unwrap().objective - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rot_symmetric_zero_case() {
        let c = CostMatrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let a = m(&[0.3, 0.7]);
        let r = oracle_rot(&c, &a, &a, 1.0, 1e-10).unwrap();
        assert!(r.objective <= 1e-9);
    }

    #[test]
    fn bounds_bracket_small_instance() {
        let c = CostMatrix::from_rows(&[vec![1.0, 4.0, 2.5], vec![3.0, 1.5, 6.0], vec![2.0, 2.0, 1.0]]).unwrap();
        let a = m(&[0.2, 0.5, 0.3]);
        let b = m(&[0.6, 0.1, 0.3]);
        for r in [oracle_rsot(&c, &a, &b, 1.0, 1e-9).unwrap(), oracle_rot(&c, &a, &b, 1.0, 1e-9).unwrap()] {
            assert!(r.objective - r.lower_bound < 1e-7, "{} vs {}", r.objective, r.lower_bound);
            assert!(r.restart_spread <= 1e-7);
        }
    }

    #[test]
    fn rejects_large_and_mismatched() {
        let c = CostMatrix::zeros(13);
        let a = DiscreteMeasure::uniform(13);
        assert!(oracle_rsot(&c, &a, &a, 1.0, 1e-8).is_err());
        let c = CostMatrix::zeros(2);
        assert!(matches!(oracle_rot(&c, &a, &a, 1.0, 1e-8), Err(Error::Shape(_))));
    }

    #[test]
    fn barycenter_identical_measures() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let p = m(&[0.2, 0.3, 0.5]);
        let problem = BarycenterProblem::new(vec![c.clone(), c], vec![p.clone(), p], vec![0.5, 0.5]).unwrap();
        let r = oracle_rsbp_with(&problem, 1.0, &OracleOptions::default().with_tol(1e-9).with_restarts(3)).unwrap();
        assert!(r.objective <= 1e-8);
    }
}
