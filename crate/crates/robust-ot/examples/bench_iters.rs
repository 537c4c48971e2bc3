//! Theoretical against empirical iteration counts on a small sweep. The
//! full experiment is `robust-ot bench-iters`.
//!
//! Run: cargo run --release --example bench_iters

use robust_ot::cli::bench::{bench_iters, mean_ratios, BenchKind, BenchSettings};

fn main() -> robust_ot::error::Result<()> {
    for kind in [BenchKind::Rsot, BenchKind::Rot] {
        let settings = BenchSettings {
            kind,
            n: 10,
            epsilons: vec![1e-1, 1e-2, 1e-3],
            seeds: (0..3).collect(),
            oracle_max_n: Some(10),
            ..BenchSettings::rsot_sweep()
        };
        let rows = bench_iters(&settings)?;
        println!("{}", kind.name());
        for r in &rows {
            println!(
                "  eps {:.0e} seed {}  k_theory {:>9}  k_emp {:>7}",
                r.epsilon,
                r.seed,
                r.k_theory,
                r.k_emp.map_or("-".into(), |k| k.to_string())
            );
        }
        for (eps, m) in mean_ratios(&rows, &settings.epsilons) {
            println!("  mean ratio at {eps:.0e}: {:.1}", m.unwrap_or(f64::NAN));
        }
    }
    Ok(())
}
