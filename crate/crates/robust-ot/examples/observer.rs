//! Watching a solve: an observer receives every iterate, and the recorded
//! distances give the empirical contraction rate.
//!
//! Run: cargo run --release --example observer

use robust_ot::config::{Silent, SolverConfig, StopRule};
use robust_ot::diagnostics::{trailing_max_ratio, trailing_rate};
use robust_ot::measure::{CostMatrix, DualPotentials};
use robust_ot::rng::{stream, uniform_cost, uniform_simplex};
use robust_ot::rsot::solve_rsot_observed;

fn main() -> robust_ot::error::Result<()> {
    let mut rng = stream("example-observer", 0, 0);
    let n = 6;
    let cost: CostMatrix = uniform_cost(n, 0.0, 1.0, &mut rng);
    let a = uniform_simplex(n, 0.1, 1.0, &mut rng);
    let b = uniform_simplex(n, 0.1, 1.0, &mut rng);

    for (tau, eta) in [(1.0, 0.05), (0.1, 0.05), (0.1, 0.5)] {
        let config = |k| SolverConfig::manual(tau, eta, k).with_stop(StopRule::DualResidual(0.0)).with_trace_stride(0);
        let (_, reference, _) = solve_rsot_observed(&cost, &a, &b, &config(200_000), &mut Silent)?;
        let mut samples = Vec::new();
        let mut watch = |k: usize, s: &DualPotentials| {
            if k % 2 == 0 {
                samples.push((k, s.sup_distance(&reference)));
            }
        };
        let (_, _, report) = solve_rsot_observed(&cost, &a, &b, &config(20_000), &mut watch)?;
        println!(
            "tau {tau}, eta {eta}: {} iterations, rate {:.5} (worst step {:.5}), bound {:.5}",
            report.iterations_run,
            trailing_rate(&samples, 1e-9).unwrap_or(f64::NAN),
            trailing_max_ratio(&samples, 1e-9).unwrap_or(f64::NAN),
            tau / (tau + eta)
        );
    }
    Ok(())
}
