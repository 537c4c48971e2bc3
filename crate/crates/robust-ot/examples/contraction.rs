//! Contraction of the barycenter iteration toward its fixed point for
//! several numbers of input measures.
//!
//! Run: cargo run --release --example contraction

use robust_ot::cli::contraction::{max_ratios, run_contraction};

fn main() -> robust_ot::error::Result<()> {
    let (tau, eta) = (0.1, 0.01);
    let ms = [2, 3, 10];
    let rows = run_contraction(&ms, 10, tau, eta, 5, 100, 0)?;
    println!("bound tau / (tau + eta) = {:.5}", tau / (tau + eta));
    for m in ms {
        let (uv, uu) = max_ratios(&rows, m);
        println!(
            "m = {m:2}: max R_uv {:.5}, max R_uu {:.5}",
            uv.unwrap_or(f64::NAN),
            uu.unwrap_or(f64::NAN)
        );
    }
    let first: Vec<String> = rows
        .iter()
        .filter(|r| r.m == 2 && r.trial == 0)
        .take(8)
        .map(|r| format!("{:.3}", r.r_uv.unwrap_or(f64::NAN)))
        .collect();
    println!("first R_uv values, m = 2: {}", first.join(" "));
    Ok(())
}
