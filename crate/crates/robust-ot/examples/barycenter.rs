//! Robust barycenter of three histograms on a grid, one of which carries a
//! far bump, printed as one character per grid point.
//!
//! Run: cargo run --release --example barycenter

use robust_ot::barycenter::{solve_rsbp, BarycenterProblem};
use robust_ot::cli::marginals::grid_cost;
use robust_ot::config::SolverConfig;
use robust_ot::measure::DiscreteMeasure;

fn bump(n: usize, center: f64, width: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            (-0.5 * ((x - center) / width).powi(2)).exp() + 1e-6
        })
        .collect()
}

fn normalized(w: Vec<f64>) -> DiscreteMeasure {
    let s: f64 = w.iter().sum();
    DiscreteMeasure::new(w.into_iter().map(|x| x / s).collect()).unwrap()
}

fn main() -> robust_ot::error::Result<()> {
    let n = 30;
    let cost = grid_cost(n)?;
    let mut outlier = bump(n, 0.45, 0.05);
    for (o, t) in outlier.iter_mut().zip(bump(n, 0.95, 0.02)) {
        *o += 0.3 * t;
    }
    let measures = vec![normalized(bump(n, 0.4, 0.06)), normalized(bump(n, 0.5, 0.06)), normalized(outlier)];
    let problem = BarycenterProblem::new(vec![cost; 3], measures, vec![1.0 / 3.0; 3])?;

    for tau in [0.01, 1.0] {
        let sol = solve_rsbp(&problem, &SolverConfig::manual(tau, 1e-3, 20_000))?;
        let q = sol.barycenter.weights();
        let tail: f64 = q[n * 4 / 5..].iter().sum();
        println!(
            "tau = {tau}: objective {:.5}, spread {:.1e}, barycenter mass beyond 0.8 = {tail:.4}",
            sol.report.objective,
            sol.report.marginal_spread.unwrap_or(f64::NAN)
        );
        let bars: String = q.iter().map(|x| if *x > 0.05 { '#' } else if *x > 0.01 { '+' } else { '.' }).collect();
        println!("  {bars}");
    }
    Ok(())
}
