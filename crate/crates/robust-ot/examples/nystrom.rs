//! Low-rank kernel path on a clustered point cloud: a handful of landmarks
//! replaces the dense n x n Gibbs kernel.
//!
//! Run: cargo run --release --example nystrom

use rand::Rng;
use robust_ot::lowrank::{solve_nys, NysProblem, PointCloud};
use robust_ot::measure::DiscreteMeasure;
use robust_ot::rng::stream;
use robust_ot::rsot::solve_rsot;
use robust_ot::config::SolverConfig;

fn main() -> robust_ot::error::Result<()> {
    let n = 60;
    let mut rng = stream("example-nystrom", 0, 0);
    let centers = [[0.02, 0.0], [-0.02, 0.01], [0.0, -0.02]];
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let c = centers[i % 3];
            vec![c[0] + 1e-7 * rng.random::<f64>(), c[1] + 1e-7 * rng.random::<f64>()]
        })
        .collect();
    let cloud = PointCloud::new(points)?;
    let a = DiscreteMeasure::uniform(n);
    let b = DiscreteMeasure::new((0..n).map(|i| (if i % 3 == 0 { 2.0 } else { 1.0 }) / 80.0).collect())?;

    let eps = 1e-2;
    let sol = solve_nys(&cloud, &a, &b, NysProblem::Rsot, eps, 1.0, 7)?;
    println!("landmarks {} of {n}, diagonal error {:.1e}", sol.rank, sol.diag_err);
    println!("stored numbers {} against {} for the dense kernel", sol.factor_storage, n * n);
    println!("eps' = {:.3e}, eta = {:.3e}, threshold = {:.3e}", sol.budget.eps_prime, sol.report.eta, sol.budget.threshold);
    println!("objective {:.8} after {} iterations", sol.report.objective, sol.report.iterations_run);

    let (_, _, dense) = solve_rsot(&cloud.squared_distances(), &a, &b, &SolverConfig::theorem(1.0, eps))?;
    println!("dense solver objective {:.8}", dense.objective);
    Ok(())
}
