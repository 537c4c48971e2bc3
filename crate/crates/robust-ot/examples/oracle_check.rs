//! Certifying a solver run against the reference solver: the oracle returns
//! an objective together with a weak-duality lower bound.
//!
//! Run: cargo run --release --example oracle_check

use robust_ot::config::SolverConfig;
use robust_ot::oracle::{oracle_rot, oracle_rsot};
use robust_ot::rng::{stream, uniform_cost, uniform_simplex};
use robust_ot::rot::solve_rot;
use robust_ot::rsot::solve_rsot;

fn main() -> robust_ot::error::Result<()> {
    println!("seed  n  problem  oracle        gap bound   solver - oracle (eps = 1e-3)");
    for seed in 0..5 {
        let n = 3 + seed as usize;
        let mut rng = stream("example-oracle", seed, 0);
        let cost = uniform_cost(n, 1.0, 50.0, &mut rng);
        let a = uniform_simplex(n, 1e-3, 1.0, &mut rng);
        let b = uniform_simplex(n, 1e-3, 1.0, &mut rng);
        let config = SolverConfig::theorem(1.0, 1e-3);

        let o = oracle_rsot(&cost, &a, &b, 1.0, 1e-9)?;
        let (_, _, r) = solve_rsot(&cost, &a, &b, &config)?;
        println!(
            "{seed:4} {n:2}  rsot     {:.8}  {:.1e}     {:+.3e}",
            o.objective,
            o.objective - o.lower_bound,
            r.objective - o.objective
        );
        let o = oracle_rot(&cost, &a, &b, 1.0, 1e-9)?;
        let (_, _, r) = solve_rot(&cost, &a, &b, &config)?;
        println!(
            "{seed:4} {n:2}  rot      {:.8}  {:.1e}     {:+.3e}",
            o.objective,
            o.objective - o.lower_bound,
            r.objective - o.objective
        );
    }
    Ok(())
}
