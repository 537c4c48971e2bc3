//! Log-barrier interior-point method for maximizing a separable concave
//! function under sparse linear inequalities. The scaled inverse slacks
//! at the end recover the constraint multipliers.

use nalgebra::{DMatrix, DVector};

/// aᵀy ≤ rhs with a given by (index, coefficient) pairs.
#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Constraint {
    fn slack(&self, y: &[f64]) -> f64 {
        self.rhs - self.terms.iter().map(|&(k, c)| c * y[k]).sum::<f64>()
    }

    fn along(&self, d: &[f64]) -> f64 {
        self.terms.iter().map(|&(k, c)| c * d[k]).sum()
    }
}

/// φ(y) = Σ_k lin_k y_k + τ Σ_k w_k (1 − exp(σ_k y_k / τ))
#[derive(Debug, Clone)]
pub(crate) struct Separable {
    pub lin: Vec<f64>,
    pub weight: Vec<f64>,
    pub sign: Vec<f64>,
    pub tau: f64,
}

impl Separable {
    /// Gradient and the diagonal of the (negative definite) Hessian.
    fn derivatives(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut g = self.lin.clone();
        let mut h = vec![0.0; y.len()];
        for k in 0..y.len() {
            if self.weight[k] != 0.0 {
                let e = self.weight[k] * (self.sign[k] * y[k] / self.tau).exp();
                g[k] -= self.sign[k] * e;
                h[k] = -e / self.tau;
            }
        }
        (g, h)
    }
}

pub(crate) struct BarrierOutcome {
    pub y: Vec<f64>,
    /// Multipliers 1/(t·s_k), one per constraint.
    pub multipliers: Vec<f64>,
}

const CENTERING_STEPS: usize = 100;
const T_GROWTH: f64 = 8.0;

fn direction(phi: &Separable, cons: &[Constraint], y: &[f64], t: f64) -> Option<(Vec<f64>, f64)> {
    let dim = y.len();
    let (gphi, hphi) = phi.derivatives(y);
    let mut g: Vec<f64> = gphi.iter().map(|v| -t * v).collect();
    let mut h = DMatrix::from_diagonal(&DVector::from_iterator(dim, hphi.iter().map(|v| -t * v)));
    for c in cons {
        let s = c.slack(y);
        for &(k, a) in &c.terms {
            g[k] += a / s;
            for &(l, b) in &c.terms {
                h[(k, l)] += a * b / (s * s);
            }
        }
    }
    let scale: Vec<f64> = (0..dim).map(|i| if h[(i, i)] > 0.0 { h[(i, i)].sqrt().recip() } else { 1.0 }).collect();
    let hs = DMatrix::from_fn(dim, dim, |i, j| scale[i] * h[(i, j)] * scale[j]);
    let rhs = DVector::from_fn(dim, |i, _| -scale[i] * g[i]);
    let y_s = hs.cholesky()?.solve(&rhs);
    let d: Vec<f64> = (0..dim).map(|i| scale[i] * y_s[i]).collect();
    let decrement = -d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
    Some((d, decrement))
}

/// Directional derivative of −tφ − Σ log s along d.
fn slope(phi: &Separable, cons: &[Constraint], y: &[f64], d: &[f64], t: f64) -> f64 {
    let (gphi, _) = phi.derivatives(y);
    let mut v = -t * gphi.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
    for c in cons {
        v += c.along(d) / c.slack(y);
    }
    v
}

/// Follows the central path from a strictly feasible `y0` until `done`
/// accepts the centered point or the barrier gap bound K/t drops below
/// `min_gap`.
pub(crate) fn maximize(
    phi: &Separable,
    cons: &[Constraint],
    y0: Vec<f64>,
    min_gap: f64,
    mut done: impl FnMut(&BarrierOutcome) -> bool,
) -> Option<BarrierOutcome> {
    let mut y = y0;
    if cons.iter().any(|c| !(c.slack(&y) > 0.0)) {
        return None;
    }
    let big_k = cons.len() as f64;
    let mut t = 1.0;
    loop {
        for _ in 0..CENTERING_STEPS {
            let (d, dec) = direction(phi, cons, &y, t)?;
            if !(dec > 1e-10) {
                break;
            }
            let mut alpha: f64 = 1.0;
            for c in cons {
                let ad = c.along(&d);
                if ad > 0.0 {
                    alpha = alpha.min(0.99 * c.slack(&y) / ad);
                }
            }
            for _ in 0..60 {
                let trial: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                if cons.iter().all(|c| c.slack(&trial) > 0.0) && slope(phi, cons, &trial, &d, t) <= 0.5 * dec {
                    y = trial;
                    break;
                }
                alpha *= 0.5;
            }
        }
        let out = BarrierOutcome {
            multipliers: cons.iter().map(|c| 1.0 / (t * c.slack(&y))).collect(),
            y: y.clone(),
        };
        if big_k / t <= min_gap || done(&out) {
            return Some(out);
        }
        t *= T_GROWTH;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_bound() {
        // max y − τ(e^{y/τ} − 1) with y ≤ −1: optimum on the bound, multiplier 1 − e^{−1}
        let phi = Separable {
            lin: vec![1.0],
            weight: vec![1.0],
            sign: vec![1.0],
            tau: 1.0,
        };
        let cons = vec![Constraint {
            terms: vec![(0, 1.0)],
            rhs: -1.0,
        }];
        let out = maximize(&phi, &cons, vec![-3.0], 1e-9, |_| false).unwrap();
        assert!((out.y[0] + 1.0).abs() < 1e-8);
        assert!((out.multipliers[0] - (1.0 - (-1f64).exp())).abs() < 1e-6, "{} {}", out.multipliers[0], out.y[0]);
    }

    #[test]
    fn interior_optimum() {
        // max y − (e^{y} − 1) has optimum y = 0, constraint y ≤ 5 inactive
        let phi = Separable {
            lin: vec![1.0],
            weight: vec![1.0],
            sign: vec![1.0],
            tau: 1.0,
        };
        let cons = vec![Constraint {
            terms: vec![(0, 1.0)],
            rhs: 5.0,
        }];
        let out = maximize(&phi, &cons, vec![0.0], 1e-12, |_| false).unwrap();
        assert!(out.y[0].abs() < 1e-8);
        assert!(out.multipliers[0] < 1e-10);
    }

    #[test]
    fn infeasible_start_rejected() {
        let phi = Separable {
            lin: vec![1.0],
            weight: vec![0.0],
            sign: vec![1.0],
            tau: 1.0,
        };
        let cons = vec![Constraint {
            terms: vec![(0, 1.0)],
            rhs: 0.0,
        }];
        assert!(maximize(&phi, &cons, vec![1.0], 1e-9, |_| false).is_none());
    }
}
