//! Nyström approximation K̃ = V A⁺ Vᵀ of the Gaussian kernel
//! exp(−‖x_i − x_j‖²/η) and the low-rank Sinkhorn path built on it.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;

use crate::config::{RunPlan, Silent, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::gibbs::{lse, GibbsBackend, LogMarginals};
use crate::measure::{CostMatrix, DiscreteMeasure, TransportPlan};
use crate::rot::{rot_schedule_from_bound, rot_u_const, run_uot};
use crate::rsot::{rsot_schedule_from_bound, run_rsot, r_bound};

/// Relative eigenvalue cutoff of the landmark pseudo-inverse, near the square
/// root of machine precision.
const PINV_CUTOFF: f64 = 1.5e-8;

/// Floor applied to kernel mat-vec outputs before taking logs.
const CLAMP_FLOOR: f64 = 1e-300;

/// Schedules longer than this are refused rather than run.
pub const MAX_NYS_ITERATIONS: usize = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    dim: usize,
    radius: f64,
}

impl PointCloud {
    /// Radius set to the largest point norm.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let radius = points.iter().map(|p| norm(p)).fold(0.0, f64::max);
        Self::with_radius(points, radius)
    }

    pub fn with_radius(points: Vec<Vec<f64>>, radius: f64) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).ok_or_else(|| Error::InvalidInput("empty point cloud".into()))?;
        if let Some(i) = points.iter().position(|p| p.len() != dim) {
            return Err(Error::Shape(format!("point {i} has dimension {}, expected {dim}", points[i].len())));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("point coordinates must be finite".into()));
        }
        if let Some(i) = points.iter().position(|p| norm(p) > radius) {
            return Err(Error::InvalidInput(format!("point {i} lies outside radius {radius}")));
        }
        Ok(Self { points, dim, radius })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Dense squared-Euclidean cost C_ij = ‖x_i − x_j‖².
    pub fn squared_distances(&self) -> CostMatrix {
        let n = self.len();
        CostMatrix::from_fn(n, |i, j| sq_dist(&self.points[i], &self.points[j])).expect("distances are nonnegative")
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// exp(−‖x − l_j‖²/η) for every landmark l_j.
pub fn gaussian_kernel_row(x: &[f64], landmarks: &[Vec<f64>], eta: f64) -> Vec<f64> {
    landmarks.iter().map(|l| (-sq_dist(x, l) / eta).exp()).collect()
}

#[derive(Debug, Clone)]
pub struct LowRankKernel {
    v: DMatrix<f64>,
    a_pinv: DMatrix<f64>,
    landmarks: Vec<usize>,
    effective_rank: usize,
    diag_err: f64,
    eta: f64,
    clamps: Cell<usize>,
}

impl LowRankKernel {
    /// Factors built from the given landmark indices.
    pub fn from_landmarks(cloud: &PointCloud, landmarks: &[usize], eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
        }
        if landmarks.is_empty() || landmarks.iter().any(|&i| i >= cloud.len()) {
            return Err(Error::InvalidInput("landmarks must be valid point indices".into()));
        }
        let pts: Vec<Vec<f64>> = landmarks.iter().map(|&i| cloud.points[i].clone()).collect();
        let n = cloud.len();
        let r = pts.len();
        let mut v = DMatrix::zeros(n, r);
        for (i, x) in cloud.points.iter().enumerate() {
            for (j, k) in gaussian_kernel_row(x, &pts, eta).into_iter().enumerate() {
                v[(i, j)] = k;
            }
        }
        let a = DMatrix::from_fn(r, r, |i, j| v[(landmarks[i], j)]);
        let a = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a);
        let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let inv: DVector<f64> = eig
            .eigenvalues
            .map(|l| if l > PINV_CUTOFF * lmax { 1.0 / l } else { 0.0 });
        let effective_rank = inv.iter().filter(|x| **x != 0.0).count();
        let q = &eig.eigenvectors;
        let a_pinv = q * DMatrix::from_diagonal(&inv) * q.transpose();
        let a_pinv = (&a_pinv + a_pinv.transpose()) * 0.5;
        let mut kernel = Self {
            v,
            a_pinv,
            landmarks: landmarks.to_vec(),
            effective_rank,
            diag_err: 0.0,
            eta,
            clamps: Cell::new(0),
        };
        kernel.diag_err = 1.0 - kernel.diagonal().iter().copied().fold(f64::INFINITY, f64::min);
        Ok(kernel)
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn a_pinv(&self) -> &DMatrix<f64> {
        &self.a_pinv
    }

    /// Number of landmarks r.
    pub fn rank(&self) -> usize {
        self.landmarks.len()
    }

    /// Eigenvalues kept in the pseudo-inverse.
    pub fn effective_rank(&self) -> usize {
        self.effective_rank
    }

    pub fn landmarks(&self) -> &[usize] {
        &self.landmarks
    }

    /// 1 − min_i K̃_ii
    pub fn diag_err(&self) -> f64 {
        self.diag_err
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// Mat-vec outputs floored at 1e−300 so far.
    pub fn clamp_count(&self) -> usize {
        self.clamps.get()
    }

    /// Number of stored factor entries, n·r + r².
    pub fn factor_len(&self) -> usize {
        self.v.len() + self.a_pinv.len()
    }

    /// K̃_ii = v_iᵀ A⁺ v_i
    pub fn diagonal(&self) -> Vec<f64> {
        let va = &self.v * &self.a_pinv;
        (0..self.n()).map(|i| va.row(i).dot(&self.v.row(i))).collect()
    }

    pub fn materialize(&self) -> DMatrix<f64> {
        let k = &self.v * &self.a_pinv * self.v.transpose();
        (&k + k.transpose()) * 0.5
    }

    /// K̃ w in O(nr).
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let w = DVector::from_column_slice(w);
        let t = self.v.tr_mul(&w);
        let t = &self.a_pinv * t;
        (&self.v * t).iter().copied().collect()
    }

    /// out_i = log Σ_j K̃_ij exp(s_j/η)
    fn log_apply(&self, s: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.eta;
        let m = s.iter().map(|x| x * inv).fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = s.iter().map(|x| (x * inv - m).exp()).collect();
        let y = self.apply(&w);
        let mut clamped = 0;
        for (o, yi) in out.iter_mut().zip(y) {
            let yi = if yi < CLAMP_FLOOR {
                clamped += 1;
                CLAMP_FLOOR
            } else {
                yi
            };
            *o = m + yi.ln();
        }
        self.clamps.set(self.clamps.get() + clamped);
    }
}

impl GibbsBackend for LowRankKernel {
    fn n(&self) -> usize {
        self.v.nrows()
    }

    fn eta(&self) -> f64 {
        self.eta
    }

    fn row_lse(&self, v: &[f64], out: &mut [f64]) {
        self.log_apply(v, out)
    }

    fn col_lse(&self, u: &[f64], out: &mut [f64]) {
        self.log_apply(u, out)
    }

    fn plan(&self, u: &[f64], v: &[f64], normalize: bool) -> Result<TransportPlan> {
        let n = self.n();
        let k = self.materialize();
        let inv = 1.0 / self.eta;
        let mut logs = vec![f64::NEG_INFINITY; n * n];
        for i in 0..n {
            for j in 0..n {
                let kij = k[(i, j)];
                if kij > 0.0 {
                    logs[i * n + j] = (u[i] + v[j]) * inv + kij.ln();
                }
            }
        }
        let shift = if normalize { lse(&logs) } else { 0.0 };
        if !shift.is_finite() {
            return Err(Error::InvalidInput("low-rank kernel has no positive entries".into()));
        }
        let entries: Vec<f64> = logs.iter().map(|z| (z - shift).exp()).collect();
        if let Some(p) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::Overflow {
                row: p / n,
                col: p % n,
                exponent: logs[p],
            });
        }
        TransportPlan::new(n, entries)
    }
}

/// Doubles the number of nested, uniformly sampled landmarks from one
/// until 1 − min_i K̃_ii ≤ approx_tol, or every point is a landmark.
pub fn adaptive_nystrom(cloud: &PointCloud, eta: f64, approx_tol: f64, seed: u64) -> Result<(LowRankKernel, usize)> {
    if !(approx_tol > 0.0) {
        return Err(Error::InvalidInput(format!("approx_tol must be positive, got {approx_tol}")));
    }
    let n = cloud.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::rng::stream("nystrom-landmarks", seed, 0));
    let mut r = 1;
    loop {
        let r_eff = r.min(n);
        let kernel = LowRankKernel::from_landmarks(cloud, &order[..r_eff], eta)?;
        if kernel.diag_err() <= approx_tol || r_eff >= n {
            let rank = kernel.rank();
            return Ok((kernel, rank));
        }
        r *= 2;
    }
}

/// Log marginals of B(u, v) = diag(e^{u/η}) K̃ diag(e^{v/η}), with the
/// number of clamped mat-vec outputs.
pub fn lowrank_log_marginals(u: &[f64], v: &[f64], kernel: &LowRankKernel, eta: f64) -> Result<(LogMarginals, usize)> {
    let n = kernel.n();
    if u.len() != n || v.len() != n {
        return Err(Error::Shape(format!("potentials of length {} and {} for n = {n}", u.len(), v.len())));
    }
    if (eta - kernel.eta).abs() > 1e-15 * kernel.eta {
        return Err(Error::InvalidInput(format!("kernel built for eta = {}, asked for {eta}", kernel.eta)));
    }
    let before = kernel.clamp_count();
    let mut log_row = vec![0.0; n];
    let mut log_col = vec![0.0; n];
    kernel.row_lse(v, &mut log_row);
    kernel.col_lse(u, &mut log_col);
    for (r, x) in log_row.iter_mut().zip(u) {
        *r += x / eta;
    }
    for (c, x) in log_col.iter_mut().zip(v) {
        *c += x / eta;
    }
    let log_mass = lse(&log_row);
    Ok((
        LogMarginals {
            log_row,
            log_col,
            log_mass,
        },
        kernel.clamp_count() - before,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NysProblem {
    Rsot,
    Rot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NysBudget {
    pub z: f64,
    pub eps_prime: f64,
    pub threshold: f64,
    pub eta: f64,
    /// False when no η satisfies the budget consistently.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NysConstants {
    pub s_x: f64,
    pub s_g: f64,
    pub s_h: f64,
    pub s_c: f64,
}

/// Error-budget constants of the low-rank guarantee.
pub fn nys_constants(kind: NysProblem, n: usize, eta: f64, tau: f64) -> NysConstants {
    let log_n = (n as f64).ln();
    match kind {
        NysProblem::Rsot => NysConstants {
            s_x: 1.0,
            s_g: log_n,
            s_h: 2.0 * log_n,
            s_c: (2.0 * tau + eta) / eta,
        },
        NysProblem::Rot => NysConstants {
            s_x: 1.0,
            s_g: 3.0 * (tau + 2.0) / (4.0 * (tau + 1.0)),
            s_h: 2.0 * log_n,
            s_c: (2.0 * tau + eta) / (eta * eta),
        },
    }
}

fn z_factor(kind: NysProblem, eta: f64, tau: f64) -> f64 {
    match kind {
        NysProblem::Rsot => 1.0 + 2.0 * (tau + eta),
        NysProblem::Rot => 2.0 + eta + 2.0 * tau / eta,
    }
}

/// Budget for the low-rank path. For RSOT, η solves η = ε'/U(ε') with
/// ε' = min(1, ε/Z(η)). For ROT the same equation has no solution, so a
/// single pass from η₀ = ε/U(ε) is used and `consistent` is false.
pub fn nys_budget(kind: NysProblem, n: usize, epsilon: f64, tau: f64, radius: f64) -> NysBudget {
    let log_n = (n as f64).ln();
    let u_of = |e: f64| match kind {
        NysProblem::Rsot => (3.0 * log_n).max(e / tau),
        NysProblem::Rot => rot_u_const(n, e, tau),
    };
    let eps_of = |eta: f64| (epsilon / z_factor(kind, eta, tau)).min(1.0);
    let mut eta = epsilon / u_of(epsilon);
    let consistent = match kind {
        NysProblem::Rsot => {
            for _ in 0..200 {
                let e = eps_of(eta);
                let next = e / u_of(e);
                let done = (next - eta).abs() <= 1e-16 * eta;
                eta = next;
                if done {
                    break;
                }
            }
            true
        }
        NysProblem::Rot => {
            let e = eps_of(eta);
            eta = e / u_of(e);
            false
        }
    };
    let z = z_factor(kind, eta, tau);
    let eps_prime = (epsilon / z).min(1.0);
    NysBudget {
        z,
        eps_prime,
        threshold: 0.5 * eps_prime * (-4.0 * radius * radius / eta).exp(),
        eta,
        consistent,
    }
}

#[derive(Debug, Clone)]
pub struct NysSolution {
    pub plan: TransportPlan,
    pub report: SolveReport,
    pub budget: NysBudget,
    /// Number of landmarks, or n on the dense fallback.
    pub rank: usize,
    pub diag_err: f64,
    /// Stored numbers: n·r + r² factor entries plus n·d coordinates.
    pub factor_storage: usize,
    pub dense_fallback: bool,
}

/// Low-rank Sinkhorn on a squared-Euclidean cost over one point cloud.
/// The reported objective is evaluated on the exact cost.
pub fn solve_nys(
    cloud: &PointCloud,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    kind: NysProblem,
    epsilon: f64,
    tau: f64,
    seed: u64,
) -> Result<NysSolution> {
    let n = cloud.len();
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if n < 2 {
        return Err(Error::InvalidInput("the low-rank path needs n >= 2".into()));
    }
    if a.len() != n || b.len() != n {
        return Err(Error::Shape(format!("measures of length {} and {} for {n} points", a.len(), b.len())));
    }
    let budget = nys_budget(kind, n, epsilon, tau, cloud.radius());
    let cost = cloud.squared_distances();
    let eps = budget.eps_prime;
    let config = SolverConfig::theorem(tau, eps).with_trace_stride(0);
    let max_cost = 4.0 * cloud.radius() * cloud.radius() + budget.eta * eps;
    let r = |eta: f64| r_bound(eta, max_cost, a, b);
    let schedule = match kind {
        NysProblem::Rsot => rsot_schedule_from_bound(n, eps, tau, r).summary(),
        NysProblem::Rot => {
            let mut s = rot_schedule_from_bound(n, eps, tau, r).summary();
            s.guarantee_valid &= budget.consistent;
            s
        }
    };
    if schedule.k_required > MAX_NYS_ITERATIONS {
        return Err(Error::Config(format!(
            "the schedule needs {} iterations at eps' = {eps:e}, above the limit of {MAX_NYS_ITERATIONS}",
            schedule.k_required
        )));
    }
    let plan = RunPlan {
        eta: schedule.eta,
        epsilon: Some(eps),
        iterations: schedule.k_required + schedule.k_required % 2,
        schedule: Some(schedule),
    };
    let dense_fallback = budget.threshold == 0.0;
    let (x, mut report, rank, diag_err, factor_storage) = if dense_fallback {
        let kernel = crate::gibbs::DenseGibbs::new(&cost, plan.eta);
        let (x, _, report) = match kind {
            NysProblem::Rsot => run_rsot(&kernel, &cost, a, b, &config, &plan, &mut Silent)?,
            NysProblem::Rot => run_uot(&kernel, &cost, a, b, &config, &plan, true, &mut Silent)?,
        };
        (x, report, n, 0.0, n * n + n * cloud.dim())
    } else {
        let (kernel, rank) = adaptive_nystrom(cloud, plan.eta, budget.threshold, seed)?;
        let (x, _, mut report) = match kind {
            NysProblem::Rsot => run_rsot(&kernel, &cost, a, b, &config, &plan, &mut Silent)?,
            NysProblem::Rot => run_uot(&kernel, &cost, a, b, &config, &plan, true, &mut Silent)?,
        };
        report.clamp_count = Some(kernel.clamp_count());
        (x, report, rank, kernel.diag_err(), kernel.factor_len() + n * cloud.dim())
    };
    report.problem = match kind {
        NysProblem::Rsot => "rsot-nys".into(),
        NysProblem::Rot => "rot-nys".into(),
    };
    report.epsilon = Some(epsilon);
    if !budget.consistent {
        report.guarantee.valid = false;
        report.guarantee.statement = "no ε-guarantee".into();
        report.notes.push("no eta satisfies the ROT error budget; single pass used".into());
    } else if report.guarantee.valid {
        report.guarantee = crate::config::Guarantee::new(true, "f_rsot", Some(epsilon));
    }
    if dense_fallback {
        report.notes.push("kernel threshold underflows; dense path used".into());
    }
    Ok(NysSolution {
        plan: x,
        report,
        budget,
        rank,
        diag_err,
        factor_storage,
        dense_fallback,
    })
}
