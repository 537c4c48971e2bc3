//! Damped Newton on the smooth entropic duals, with continuation in η.

use nalgebra::{DMatrix, DVector};

pub(crate) trait Dual {
    fn dim(&self) -> usize;
    /// Objective value, +∞ where the kernel overflows.
    fn value(&self, x: &[f64]) -> f64;
    fn derivatives(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>);
}

const MAX_NEWTON: usize = 400;

pub(crate) fn newton<D: Dual>(d: &D, x0: &[f64]) -> Vec<f64> {
    let dim = d.dim();
    let mut x = x0.to_vec();
    let mut f = d.value(&x);
    for _ in 0..MAX_NEWTON {
        let (g, h) = d.derivatives(&x);
        if g.iter().all(|v| v.abs() <= 1e-15) {
            break;
        }
        let s: Vec<f64> = (0..dim).map(|i| if h[(i, i)] > 0.0 { h[(i, i)].sqrt().recip() } else { 1.0 }).collect();
        let hs = DMatrix::from_fn(dim, dim, |i, j| s[i] * h[(i, j)] * s[j]);
        let rhs = DVector::from_fn(dim, |i, _| -s[i] * g[i]);
        let mut ridge = 0.0;
        let y = loop {
            let mut m = hs.clone();
            for i in 0..dim {
                m[(i, i)] += ridge;
            }
            if let Some(ch) = m.cholesky() {
                break ch.solve(&rhs);
            }
            ridge = if ridge == 0.0 { 1e-14 } else { ridge * 10.0 };
        };
        let step: Vec<f64> = (0..dim).map(|i| s[i] * y[i]).collect();
        let slope: f64 = step.iter().zip(&g).map(|(p, q)| p * q).sum();
        if !(slope < 0.0) {
            break;
        }
        if -slope <= 1e-12 * (1.0 + f.abs()) {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, p)| xi + p).collect();
            let ft = d.value(&trial);
            if !ft.is_finite() || ft > f + 1e-12 * (1.0 + f.abs()) {
                break;
            }
            let done = -slope <= 1e-30 * (1.0 + f.abs());
            x = trial;
            f = ft;
            if done {
                break;
            }
            continue;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-16 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, p)| xi + t * p).collect();
            let ft = d.value(&trial);
            if ft <= f + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, ft)) => {
                let stalled = ft >= f && t < 1.0;
                x = trial;
                f = ft;
                if stalled {
                    break;
                }
            }
            None => break,
        }
    }
    x
}

/// Solves at η_final by warm-starting through a geometric sequence from
/// `eta_start`, shrinking by a factor of three per stage.
pub(crate) fn continuation<D: Dual>(make: impl Fn(f64) -> D, eta_start: f64, eta_final: f64, x0: Vec<f64>) -> Vec<f64> {
    let mut x = x0;
    let mut eta = eta_start.max(eta_final);
    loop {
        x = newton(&make(eta), &x);
        if eta <= eta_final {
            return x;
        }
        eta = (eta / 3.0).max(eta_final);
    }
}

/// exp((u_i + v_j − C_ij)/η) as a dense row-major matrix, or `None` on
/// overflow.
fn kernel(u: &[f64], v: &[f64], c: &[f64], eta: f64) -> Option<Vec<f64>> {
    let n = u.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let z = (u[i] + v[j] - c[i * n + j]) / eta;
            if z > 700.0 {
                return None;
            }
            k[i * n + j] = z.exp();
        }
    }
    Some(k)
}

fn margins(k: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut r = vec![0.0; n];
    let mut c = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            r[i] += k[i * n + j];
            c[j] += k[i * n + j];
        }
    }
    (r, c)
}

fn penalty(u: &[f64], a: &[f64], tau: f64) -> f64 {
    tau * u.iter().zip(a).map(|(ui, ai)| ai * (-ui / tau).exp()).sum::<f64>()
}

/// Adds weight·(Gibbs Hessian of block (ui, vj)) to `h`.
fn add_gibbs_block(h: &mut DMatrix<f64>, k: &[f64], n: usize, ui: usize, vj: Option<usize>, w: f64, eta: f64) {
    let (r, c) = margins(k, n);
    for i in 0..n {
        h[(ui + i, ui + i)] += w * r[i] / eta;
    }
    if let Some(vj) = vj {
        for j in 0..n {
            h[(vj + j, vj + j)] += w * c[j] / eta;
        }
        for i in 0..n {
            for j in 0..n {
                let e = w * k[i * n + j] / eta;
                h[(ui + i, vj + j)] += e;
                h[(vj + j, ui + i)] += e;
            }
        }
    }
}

/// η‖B(u,v)‖₁ + τ⟨e^{−u/τ}, a⟩ + (τ⟨e^{−v/τ}, b⟩ or −⟨v, b⟩)
pub(crate) struct PairDual<'a> {
    pub cost: &'a [f64],
    pub a: &'a [f64],
    pub b: &'a [f64],
    pub tau: f64,
    pub eta: f64,
    /// KL-relaxed column marginal when true, exact otherwise.
    pub relaxed: bool,
}

impl PairDual<'_> {
    pub(crate) fn plan(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = self.a.len();
        kernel(&x[..n], &x[n..], self.cost, self.eta)
    }
}

impl Dual for PairDual<'_> {
    fn dim(&self) -> usize {
        2 * self.a.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.a.len();
        let (u, v) = x.split_at(n);
        let Some(k) = kernel(u, v, self.cost, self.eta) else {
            return f64::INFINITY;
        };
        let col = if self.relaxed {
            penalty(v, self.b, self.tau)
        } else {
            -v.iter().zip(self.b).map(|(p, q)| p * q).sum::<f64>()
        };
        let f = self.eta * k.iter().sum::<f64>() + penalty(u, self.a, self.tau) + col;
        if f.is_finite() {
            f
        } else {
            f64::INFINITY
        }
    }

    fn derivatives(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.a.len();
        let (u, v) = x.split_at(n);
        let k = kernel(u, v, self.cost, self.eta).expect("accepted iterates are finite");
        let (r, c) = margins(&k, n);
        let mut g = vec![0.0; 2 * n];
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        add_gibbs_block(&mut h, &k, n, 0, Some(n), 1.0, self.eta);
        for i in 0..n {
            let e = self.a[i] * (-u[i] / self.tau).exp();
            g[i] = r[i] - e;
            h[(i, i)] += e / self.tau;
        }
        for j in 0..n {
            if self.relaxed {
                let e = self.b[j] * (-v[j] / self.tau).exp();
                g[n + j] = c[j] - e;
                h[(n + j, n + j)] += e / self.tau;
            } else {
                g[n + j] = c[j] - self.b[j];
            }
        }
        (g, h)
    }
}

/// Σ_i ω_i[η‖B(u_i, v_i; C_i)‖₁ + τ⟨e^{−u_i/τ}, p_i⟩] with
/// v_m = −Σ_{i<m} ω_i v_i / ω_m eliminated. Layout: u_1..u_m, v_1..v_{m−1}.
pub(crate) struct FamilyDual<'a> {
    pub costs: Vec<&'a [f64]>,
    pub measures: Vec<&'a [f64]>,
    pub weights: &'a [f64],
    pub n: usize,
    pub tau: f64,
    pub eta: f64,
}

impl FamilyDual<'_> {
    pub(crate) fn unpack(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (n, m) = (self.n, self.weights.len());
        let u: Vec<Vec<f64>> = (0..m).map(|i| x[i * n..(i + 1) * n].to_vec()).collect();
        let mut v: Vec<Vec<f64>> = (0..m - 1).map(|i| x[(m + i) * n..(m + i + 1) * n].to_vec()).collect();
        let last: Vec<f64> = (0..n)
            .map(|j| -(0..m - 1).map(|i| self.weights[i] * v[i][j]).sum::<f64>() / self.weights[m - 1])
            .collect();
        v.push(last);
        (u, v)
    }

    pub(crate) fn plans(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        let (u, v) = self.unpack(x);
        (0..self.weights.len()).map(|i| kernel(&u[i], &v[i], self.costs[i], self.eta)).collect()
    }
}

impl Dual for FamilyDual<'_> {
    fn dim(&self) -> usize {
        (2 * self.weights.len() - 1) * self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (u, v) = self.unpack(x);
        let mut f = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            let Some(k) = kernel(&u[i], &v[i], self.costs[i], self.eta) else {
                return f64::INFINITY;
            };
            f += w * (self.eta * k.iter().sum::<f64>() + penalty(&u[i], self.measures[i], self.tau));
        }
        if f.is_finite() {
            f
        } else {
            f64::INFINITY
        }
    }

    fn derivatives(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let (n, m) = (self.n, self.weights.len());
        let dim = self.dim();
        let (u, v) = self.unpack(x);
        let w = self.weights;
        let mut g = vec![0.0; dim];
        let mut h = DMatrix::zeros(dim, dim);
        let mut last_col = vec![0.0; n];
        for i in 0..m {
            let k = kernel(&u[i], &v[i], self.costs[i], self.eta).expect("accepted iterates are finite");
            let (r, c) = margins(&k, n);
            for l in 0..n {
                let e = self.measures[i][l] * (-u[i][l] / self.tau).exp();
                g[i * n + l] = w[i] * (r[l] - e);
                h[(i * n + l, i * n + l)] += w[i] * e / self.tau;
            }
            if i + 1 < m {
                add_gibbs_block(&mut h, &k, n, i * n, Some((m + i) * n), w[i], self.eta);
                for j in 0..n {
                    g[(m + i) * n + j] += w[i] * c[j];
                }
            } else {
                add_gibbs_block(&mut h, &k, n, i * n, None, w[i], self.eta);
                last_col = c;
                for t in 0..m - 1 {
                    for l in 0..n {
                        for j in 0..n {
                            let e = -w[t] * k[l * n + j] / self.eta;
                            h[(i * n + l, (m + t) * n + j)] += e;
                            h[((m + t) * n + j, i * n + l)] += e;
                        }
                    }
                }
            }
        }
        for t in 0..m - 1 {
            for j in 0..n {
                g[(m + t) * n + j] -= w[t] * last_col[j];
                for s in 0..m - 1 {
                    h[((m + t) * n + j, (m + s) * n + j)] += w[t] * w[s] / w[m - 1] * last_col[j] / self.eta;
                }
            }
        }
        (g, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivatives<D: Dual>(d: &D, x: &[f64]) {
        let (g, h) = d.derivatives(x);
        let step = 1e-6;
        for i in 0..d.dim() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            let fd = (d.value(&xp) - d.value(&xm)) / (2.0 * step);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "gradient {i}: {fd} vs {}", g[i]);
            let (gp, _) = d.derivatives(&xp);
            let (gm, _) = d.derivatives(&xm);
            for j in 0..d.dim() {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                assert!((fd - h[(j, i)]).abs() < 1e-5 * (1.0 + h[(j, i)].abs()), "hessian ({j},{i})");
            }
        }
    }

    #[test]
    fn pair_dual_derivatives() {
        let c = [0.0, 0.3, 0.7, 0.1];
        let a = [0.4, 0.6];
        let b = [0.5, 0.5];
        let x = [0.1, -0.2, 0.05, 0.3];
        for relaxed in [false, true] {
            let d = PairDual {
                cost: &c,
                a: &a,
                b: &b,
                tau: 0.7,
                eta: 0.5,
                relaxed,
            };
            check_derivatives(&d, &x);
        }
    }

    #[test]
    fn family_dual_derivatives() {
        let c1 = [0.0, 0.3, 0.7, 0.1];
        let c2 = [0.2, 0.1, 0.0, 0.4];
        let c3 = [0.5, 0.0, 0.2, 0.3];
        let p = [0.4, 0.6];
        let q = [0.7, 0.3];
        let w = [0.2, 0.5, 0.3];
        let d = FamilyDual {
            costs: vec![&c1, &c2, &c3],
            measures: vec![&p, &q, &p],
            weights: &w,
            n: 2,
            tau: 0.8,
            eta: 0.6,
        };
        let x: Vec<f64> = (0..10).map(|i| 0.05 * i as f64 - 0.2).collect();
        check_derivatives(&d, &x);
    }

    #[test]
    fn newton_reaches_stationarity() {
        let c = [0.0, 1.0, 1.0, 0.0];
        let a = [0.5, 0.5];
        let d = PairDual {
            cost: &c,
            a: &a,
            b: &a,
            tau: 1.0,
            eta: 0.1,
            relaxed: false,
        };
        let x = newton(&d, &[0.0; 4]);
        let (g, _) = d.derivatives(&x);
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?} at {x:?}");
    }
}
