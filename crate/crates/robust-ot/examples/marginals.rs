//! How each method treats outliers: two histograms each carry a tenth of
//! their mass in a far bump.
//!
//! Run: cargo run --release --example marginals

use robust_ot::cli::marginals::{compare_marginals, grid_cost, toy_histograms};

fn tail(x: &[f64], from: usize) -> f64 {
    x[from..].iter().sum()
}

fn head(x: &[f64], to: usize) -> f64 {
    x[..to].iter().sum()
}

fn main() -> robust_ot::error::Result<()> {
    let n = 100;
    let (a, b) = toy_histograms(n, false)?;
    let cost = grid_cost(n)?;
    for tau in [0.02, 0.1, 1.0] {
        let t = compare_marginals(&a, &b, &cost, tau, 1e-3, 200_000, 1e-10)?;
        println!("tau = {tau} (converged: {})", t.converged);
        println!("  mass of a beyond 0.8: input {:.3}, rot {:.3}, rsot {:.3}, uot {:.3}",
            tail(&t.a, 80), tail(&t.a_rot, 80), tail(&t.a_rsot, 80), tail(&t.a_uot, 80));
        println!("  mass of b below 0.15: input {:.3}, rot {:.3}, uot {:.3}",
            head(&t.b, 15), head(&t.b_rot, 15), head(&t.b_uot, 15));
        println!("  total uot mass {:.3}", t.a_uot.iter().sum::<f64>());
    }
    Ok(())
}
