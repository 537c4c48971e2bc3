//! Semi-constrained transport: the column marginal is kept exactly while
//! the row marginal is only encouraged to match `a`.
//!
//! Run: cargo run --release --example rsot

use robust_ot::config::SolverConfig;
use robust_ot::measure::{CostMatrix, DiscreteMeasure};
use robust_ot::rsot::solve_rsot;

fn main() -> robust_ot::error::Result<()> {
    let n = 5;
    // Squared distance on a line, plus a row that is expensive to reach.
    let cost = CostMatrix::from_fn(n, |i, j| {
        let d = i as f64 - j as f64;
        d * d + if i == 4 { 20.0 } else { 0.0 }
    })?;
    let a = DiscreteMeasure::new(vec![0.2, 0.2, 0.2, 0.2, 0.2])?;
    let b = DiscreteMeasure::new(vec![0.1, 0.3, 0.3, 0.2, 0.1])?;

    for tau in [0.5, 5.0] {
        let (plan, _, report) = solve_rsot(&cost, &a, &b, &SolverConfig::theorem(tau, 1e-2))?;
        let s = report.schedule.as_ref().expect("theorem runs carry a schedule");
        println!("tau = {tau}");
        println!("  eta = {:.3e}, U = {:.3}, R = {:.1}, iterations = {}", s.eta, s.u_const, s.r_bound, s.k_required);
        println!("  objective = {:.6} ({})", report.objective, report.guarantee.statement);
        println!("  row marginal    {:?}", rounded(plan.row_marginal()));
        println!("  column marginal {:?}", rounded(plan.col_marginal()));
    }
    Ok(())
}

fn rounded(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| (v * 1e4).round() / 1e4).collect()
}
