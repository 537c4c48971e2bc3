//! `compare-marginals`: how ROT, RSOT and UOT treat two corrupted 1-D
//! histograms.

use std::path::PathBuf;

use crate::cli::io::{emit, format_float, read_cost, read_measure};
use crate::cli::CommonArgs;
use crate::config::{SolverConfig, StopReason, StopRule};
use crate::error::{Error, Result};
use crate::measure::{CostMatrix, DiscreteMeasure};
use crate::rot::{solve_rot, solve_uot};
use crate::rsot::solve_rsot;

#[derive(Debug, Clone, clap::Args)]
pub struct MarginalArgs {
    /// First histogram; the built-in toy pair is used when absent.
    #[arg(long, requires = "b")]
    pub a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    pub b: Option<PathBuf>,
    /// Cost matrix; squared distance on a uniform grid of [0, 1] when absent.
    #[arg(long)]
    pub cost: Option<PathBuf>,
    /// Support size of the toy pair.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Toy pair without outliers.
    #[arg(long)]
    pub clean: bool,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eta: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Marginals of each method's plan, one entry per support point.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub a_rot: Vec<f64>,
    pub b_rot: Vec<f64>,
    pub a_rsot: Vec<f64>,
    pub a_uot: Vec<f64>,
    pub b_uot: Vec<f64>,
    /// Whether all three solves met the residual tolerance.
    pub converged: bool,
}

impl MarginalTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("a,b,a_rot,b_rot,a_rsot,a_uot,b_uot\n");
        let cols = [&self.a, &self.b, &self.a_rot, &self.b_rot, &self.a_rsot, &self.a_uot, &self.b_uot];
        for i in 0..self.a.len() {
            let row: Vec<String> = cols.iter().map(|c| format_float(c[i])).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Points i/(n−1) of [0, 1] with cost (x_i − x_j)².
pub fn grid_cost(n: usize) -> Result<CostMatrix> {
    let h = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
    CostMatrix::from_fn(n, |i, j| {
        let d = (i as f64 - j as f64) * h;
        d * d
    })
}

fn bumps(n: usize, parts: &[(f64, f64, f64)]) -> Result<DiscreteMeasure> {
    let h = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 * h;
            parts
                .iter()
                .map(|(wt, mu, sd)| wt * (-0.5 * ((x - mu) / sd).powi(2)).exp())
                .sum::<f64>()
                + 1e-12
        })
        .collect();
    let s: f64 = w.iter().sum();
    DiscreteMeasure::new(w.into_iter().map(|x| x / s).collect())
}

/// Two Gaussians on [0, 1]; unless `clean`, each carries 10% of its mass
/// in a bump in the far tail.
pub fn toy_histograms(n: usize, clean: bool) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if n < 2 {
        return Err(Error::Config("the toy pair needs n >= 2".into()));
    }
    if clean {
        return Ok((bumps(n, &[(1.0, 0.35, 0.08)])?, bumps(n, &[(1.0, 0.6, 0.08)])?));
    }
    Ok((
        bumps(n, &[(0.9, 0.35, 0.08), (0.1 * 8.0 / 3.0, 0.92, 0.03)])?,
        bumps(n, &[(0.9, 0.6, 0.08), (0.1 * 8.0 / 3.0, 0.05, 0.03)])?,
    ))
}

/// Solves ROT, RSOT and UOT at a fixed η, stopping on the dual residual.
pub fn compare_marginals(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    cost: &CostMatrix,
    tau: f64,
    eta: f64,
    max_iter: usize,
    tol: f64,
) -> Result<MarginalTable> {
    let config = SolverConfig::manual(tau, eta, max_iter)
        .with_stop(StopRule::DualResidual(tol))
        .with_trace_stride(0);
    let (x_rot, _, r_rot) = solve_rot(cost, a, b, &config)?;
    let (x_rsot, _, r_rsot) = solve_rsot(cost, a, b, &config)?;
    let (x_uot, _, r_uot) = solve_uot(cost, a, b, &config)?;
    let converged = [&r_rot, &r_rsot, &r_uot]
        .iter()
        .all(|r| r.stop_reason == StopReason::DualResidual);
    Ok(MarginalTable {
        a: a.weights().to_vec(),
        b: b.weights().to_vec(),
        a_rot: x_rot.row_marginal().to_vec(),
        b_rot: x_rot.col_marginal().to_vec(),
        a_rsot: x_rsot.row_marginal().to_vec(),
        a_uot: x_uot.row_marginal().to_vec(),
        b_uot: x_uot.col_marginal().to_vec(),
        converged,
    })
}

pub fn cmd_compare_marginals(args: &MarginalArgs) -> Result<()> {
    let (a, b) = match (&args.a, &args.b) {
        (Some(pa), Some(pb)) => (read_measure(pa)?, read_measure(pb)?),
        _ => toy_histograms(args.n, args.clean)?,
    };
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "histograms have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let cost = match &args.cost {
        Some(p) => {
            let c = read_cost(p)?;
            if c.n() != a.len() {
                return Err(Error::Shape(format!(
                    "{}: cost is {}x{}, histograms have length {}",
                    p.display(),
                    c.n(),
                    c.n(),
                    a.len()
                )));
            }
            c
        }
        None => grid_cost(a.len())?,
    };
    let table = compare_marginals(&a, &b, &cost, args.tau, args.eta, args.max_iter, args.tol)?;
    emit(args.common.out.as_deref(), &table.to_csv())?;
    if !table.converged {
        return Err(Error::NonConvergence(format!(
            "dual residual above {:e} after {} iterations",
            args.tol, args.max_iter
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_pair_is_normalized() {
        let (a, b) = toy_histograms(50, false).unwrap();
        assert!((a.mass() - 1.0).abs() < 1e-12 && (b.mass() - 1.0).abs() < 1e-12);
        let tail: f64 = a.weights()[40..].iter().sum();
        assert!(tail > 0.05 && tail < 0.15, "{tail}");
    }

    #[test]
    fn grid_cost_entries() {
        let c = grid_cost(3).unwrap();
        assert_eq!(c.get(0, 2), 1.0);
        assert_eq!(c.get(1, 0), 0.25);
        assert_eq!(c.get(1, 1), 0.0);
    }
}
