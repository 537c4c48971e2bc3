//! The JSON report of a solve, with its schedule and traces, as written by
//! `robust-ot solve`.
//!
//! Run: cargo run --release --example report

use robust_ot::config::SolverConfig;
use robust_ot::measure::{CostMatrix, DiscreteMeasure};
use robust_ot::rsot::solve_rsot;

fn main() -> robust_ot::error::Result<()> {
    let cost = CostMatrix::from_rows(&[vec![0.0, 2.0, 3.0], vec![2.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]])?;
    let a = DiscreteMeasure::new(vec![0.5, 0.3, 0.2])?;
    let b = DiscreteMeasure::new(vec![0.2, 0.3, 0.5])?;
    let mut config = SolverConfig::theorem(1.0, 0.05);
    config.trace_stride = Some(2000);
    let (_, _, mut report) = solve_rsot(&cost, &a, &b, &config)?;
    report.wall_time = Default::default();
    println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    Ok(())
}
