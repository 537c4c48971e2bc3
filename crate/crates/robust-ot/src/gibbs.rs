//! Log-domain operations on the scaled Gibbs kernel
//! B(u,v)_ij = exp((u_i + v_j − C_ij)/η).

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::measure::{CostMatrix, TransportPlan};

/// exp(z) is exactly zero in f64 for z below this.
const EXP_CUTOFF: f64 = -746.0;

/// Largest exponent whose exp is finite.
const EXP_MAX: f64 = 709.782712893384;

/// log Σ_j exp((s_j − c_j)·inv_eta) with max-subtraction. Terms that
/// underflow to zero are skipped.
#[cfg(test)]
fn lse_affine(shift: &[f64], costs: &[f64], inv_eta: f64) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for (s, c) in shift.iter().zip(costs) {
        let z = (s - c) * inv_eta;
        if z > m {
            m = z;
        }
    }
    if m == f64::NEG_INFINITY {
        return m;
    }
    let mut acc = 0.0;
    for (s, c) in shift.iter().zip(costs) {
        let z = (s - c) * inv_eta - m;
        if z > EXP_CUTOFF {
            acc += z.exp();
        }
    }
    m + acc.ln()
}

/// log Σ exp(z_i).
pub(crate) fn lse(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|z| (z - m).exp()).sum::<f64>().ln()
}

/// Source of Gibbs-kernel marginals. The solvers only touch the kernel
/// through these sums, so dense and factored kernels are interchangeable.
pub trait GibbsBackend {
    fn n(&self) -> usize;

    fn eta(&self) -> f64;

    /// out_i = log Σ_j exp((v_j − C_ij)/η), so log_row_i = u_i/η + out_i.
    fn row_lse(&self, v: &[f64], out: &mut [f64]);

    /// out_j = log Σ_i exp((u_i − C_ij)/η), so log_col_j = v_j/η + out_j.
    fn col_lse(&self, u: &[f64], out: &mut [f64]);

    /// B(u, v), optionally divided by its mass.
    fn plan(&self, u: &[f64], v: &[f64], normalize: bool) -> Result<TransportPlan>;
}

/// Largest |x_j − x̄_j|/η for which a cached kernel is reused.
const ABSORB_LIMIT: f64 = 30.0;

/// Kernel lines exp((x̄_j − c_j)/η − m) cached at a reference x̄, with m
/// the line maximum. A later x is handled by scaling column j with
/// exp((x_j − x̄_j)/η), so a step costs n² multiply-adds instead of n²
/// exponentials.
#[derive(Debug, Clone)]
struct Absorbed {
    reference: Vec<f64>,
    shift: Vec<f64>,
    kernel: Vec<f64>,
    scale: Vec<f64>,
}

impl Absorbed {
    fn build<'c>(x: &[f64], line: impl Fn(usize) -> &'c [f64], inv_eta: f64, out: &mut [f64]) -> Self {
        let n = x.len();
        let mut shift = vec![0.0; n];
        let mut kernel = vec![0.0; n * n];
        for (i, o) in out.iter_mut().enumerate() {
            let c = line(i);
            let k = &mut kernel[i * n..(i + 1) * n];
            let mut m = f64::NEG_INFINITY;
            for ((kj, xj), cj) in k.iter_mut().zip(x).zip(c) {
                *kj = (xj - cj) * inv_eta;
                m = m.max(*kj);
            }
            let mut acc = 0.0;
            for kj in k.iter_mut() {
                let z = *kj - m;
                *kj = if z > EXP_CUTOFF { z.exp() } else { 0.0 };
                acc += *kj;
            }
            shift[i] = m;
            *o = m + acc.ln();
        }
        Self {
            reference: x.to_vec(),
            shift,
            kernel,
            scale: vec![0.0; n],
        }
    }

    fn covers(&self, x: &[f64], inv_eta: f64) -> bool {
        x.iter().zip(&self.reference).all(|(a, r)| ((a - r) * inv_eta).abs() <= ABSORB_LIMIT)
    }

    fn apply(&mut self, x: &[f64], inv_eta: f64, out: &mut [f64]) {
        let n = x.len();
        for ((s, xj), rj) in self.scale.iter_mut().zip(x).zip(&self.reference) {
            *s = ((xj - rj) * inv_eta).exp();
        }
        for (i, o) in out.iter_mut().enumerate() {
            let k = &self.kernel[i * n..(i + 1) * n];
            *o = self.shift[i] + dot(k, &self.scale).ln();
        }
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let xs = x.chunks_exact(8);
    let ys = y.chunks_exact(8);
    let tail: f64 = xs.remainder().iter().zip(ys.remainder()).map(|(a, b)| a * b).sum();
    for (a, b) in xs.zip(ys) {
        for l in 0..8 {
            acc[l] += a[l] * b[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn cached_lse<'c>(
    slot: &RefCell<Option<Absorbed>>,
    x: &[f64],
    line: impl Fn(usize) -> &'c [f64],
    inv_eta: f64,
    out: &mut [f64],
) {
    let mut slot = slot.borrow_mut();
    match slot.as_mut() {
        Some(cache) if cache.covers(x, inv_eta) => cache.apply(x, inv_eta, out),
        _ => *slot = Some(Absorbed::build(x, line, inv_eta, out)),
    }
}

/// Dense cost matrix at a fixed η. Row and column sums reuse a kernel
/// cached at earlier potentials while the potentials stay within 30η of
/// it, and rebuild it in the log domain otherwise.
#[derive(Debug, Clone)]
pub struct DenseGibbs<'a> {
    cost: &'a CostMatrix,
    eta: f64,
    inv_eta: f64,
    rows: RefCell<Option<Absorbed>>,
    cols: RefCell<Option<Absorbed>>,
}

impl<'a> DenseGibbs<'a> {
    pub fn new(cost: &'a CostMatrix, eta: f64) -> Self {
        Self {
            cost,
            eta,
            inv_eta: 1.0 / eta,
            rows: RefCell::new(None),
            cols: RefCell::new(None),
        }
    }

    pub fn cost(&self) -> &'a CostMatrix {
        self.cost
    }
}

impl GibbsBackend for DenseGibbs<'_> {
    fn n(&self) -> usize {
        self.cost.n()
    }

    fn eta(&self) -> f64 {
        self.eta
    }

    fn row_lse(&self, v: &[f64], out: &mut [f64]) {
        cached_lse(&self.rows, v, |i| self.cost.row(i), self.inv_eta, out);
    }

    fn col_lse(&self, u: &[f64], out: &mut [f64]) {
        cached_lse(&self.cols, u, |j| self.cost.col(j), self.inv_eta, out);
    }

    fn plan(&self, u: &[f64], v: &[f64], normalize: bool) -> Result<TransportPlan> {
        materialize_plan(u, v, self.cost, self.eta, normalize)
    }
}

/// Log marginals and log mass of B(u, v).
#[derive(Debug, Clone, PartialEq)]
pub struct LogMarginals {
    pub log_row: Vec<f64>,
    pub log_col: Vec<f64>,
    pub log_mass: f64,
}

fn check_dims(u: &[f64], v: &[f64], n: usize, eta: f64) -> Result<()> {
    if u.len() != n || v.len() != n {
        return Err(Error::Shape(format!(
            "potentials have lengths {} and {}, cost is {}x{}",
            u.len(),
            v.len(),
            n,
            n
        )));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
    }
    Ok(())
}

pub fn log_gibbs_marginals(u: &[f64], v: &[f64], cost: &CostMatrix, eta: f64) -> Result<LogMarginals> {
    let n = cost.n();
    check_dims(u, v, n, eta)?;
    let kernel = DenseGibbs::new(cost, eta);
    let mut log_row = vec![0.0; n];
    let mut log_col = vec![0.0; n];
    kernel.row_lse(v, &mut log_row);
    kernel.col_lse(u, &mut log_col);
    for (r, ui) in log_row.iter_mut().zip(u) {
        *r += ui / eta;
    }
    for (c, vj) in log_col.iter_mut().zip(v) {
        *c += vj / eta;
    }
    let log_mass = lse(&log_row);
    if u.iter().chain(v).any(|x| x.is_nan()) {
        return Ok(LogMarginals {
            log_row: vec![f64::NAN; n],
            log_col: vec![f64::NAN; n],
            log_mass: f64::NAN,
        });
    }
    Ok(LogMarginals {
        log_row,
        log_col,
        log_mass,
    })
}

/// Materializes B(u, v). The normalized path subtracts log ‖B‖₁ inside the
/// exponent; the raw path fails if an entry would overflow.
pub fn materialize_plan(
    u: &[f64],
    v: &[f64],
    cost: &CostMatrix,
    eta: f64,
    normalize: bool,
) -> Result<TransportPlan> {
    let n = cost.n();
    check_dims(u, v, n, eta)?;
    let inv_eta = 1.0 / eta;
    let mut exponents = vec![0.0; n * n];
    for i in 0..n {
        let row = cost.row(i);
        for j in 0..n {
            exponents[i * n + j] = (u[i] + v[j] - row[j]) * inv_eta;
        }
    }
    if normalize {
        let log_mass = lse(&exponents);
        if !log_mass.is_finite() {
            return Err(Error::InvalidInput("kernel mass is not finite".into()));
        }
        for z in exponents.iter_mut() {
            *z = (*z - log_mass).exp();
        }
    } else {
        for (p, z) in exponents.iter_mut().enumerate() {
            if *z > EXP_MAX {
                return Err(Error::Overflow {
                    row: p / n,
                    col: p % n,
                    exponent: *z,
                });
            }
            *z = z.exp();
        }
    }
    TransportPlan::new(n, exponents)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn unit_kernel_marginals() {
        let c = CostMatrix::zeros(2);
        let m = log_gibbs_marginals(&[0.0, 0.0], &[0.0, 0.0], &c, 1.0).unwrap();
        for x in m.log_row.iter().chain(&m.log_col) {
            assert!((x - LN2).abs() < 1e-15);
        }
        assert!((m.log_mass - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn row_scaling_shifts_log_row() {
        let c = CostMatrix::zeros(2);
        let eta = 0.5;
        let m = log_gibbs_marginals(&[eta * LN2, eta * LN2], &[0.0, 0.0], &c, eta).unwrap();
        for x in &m.log_row {
            assert!((x - 4f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_normalized_plan() {
        let c = CostMatrix::zeros(2);
        let x = materialize_plan(&[0.0; 2], &[0.0; 2], &c, 1.0, true).unwrap();
        assert!(x.entries().iter().all(|e| (e - 0.25).abs() < 1e-16));
    }

    #[test]
    fn softmax_limit_picks_zero_cost_cell() {
        let c = CostMatrix::from_rows(&[vec![1e3, 1e3], vec![0.0, 1e3]]).unwrap();
        let x = materialize_plan(&[0.0; 2], &[0.0; 2], &c, 1e-2, true).unwrap();
        assert_eq!(x.get(1, 0), 1.0);
        assert_eq!(x.get(0, 0), 0.0);
    }

    #[test]
    fn raw_path_overflow_is_an_error() {
        let c = CostMatrix::zeros(1);
        let err = materialize_plan(&[1.0], &[0.0], &c, 1e-3, false).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
        let x = materialize_plan(&[1.0], &[0.0], &c, 1e-3, true).unwrap();
        assert_eq!(x.get(0, 0), 1.0);
    }

    #[test]
    fn skipped_terms_do_not_change_result() {
        let shift = [0.0, -10.0, 5.0];
        let costs = [1.0, 0.0, 2.0];
        let v = lse_affine(&shift, &costs, 1e2);
        assert_eq!(v, 300.0);
        let w = lse_affine(&[0.0, 0.0], &[0.0, 7.4], 1e2);
        assert_eq!(w, 0.0);
    }

    #[test]
    fn cached_kernel_matches_direct_sums() {
        let c = CostMatrix::from_fn(4, |i, j| ((3 * i + 5 * j) % 7) as f64).unwrap();
        let eta = 0.05;
        let k = DenseGibbs::new(&c, eta);
        let mut out = [0.0; 4];
        for step in 0..6 {
            let v: Vec<f64> = (0..4).map(|j| 0.3 * j as f64 + 0.01 * step as f64).collect();
            k.row_lse(&v, &mut out);
            for (i, o) in out.iter().enumerate() {
                let direct = lse_affine(&v, c.row(i), 1.0 / eta);
                assert!((o - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
        assert!(k.rows.borrow().as_ref().unwrap().reference[3] < 0.91);
    }

    #[test]
    fn nan_propagates() {
        let c = CostMatrix::zeros(2);
        let m = log_gibbs_marginals(&[f64::NAN, 0.0], &[0.0; 2], &c, 1.0).unwrap();
        assert!(m.log_mass.is_nan());
    }
}
