//! Robust optimal transport between discrete measures.
//!
//! Solvers for the semi-constrained problem (one marginal kept, the other
//! relaxed by a KL penalty), the unconstrained problem (both relaxed, unit
//! mass), the unbalanced problem, and the robust barycenter, all in the log
//! domain. [`lowrank`] swaps the dense kernel for a Nyström factorization
//! and [`oracle`] holds reference solvers for the unregularized problems.
//!
//! ```
//! use robust_ot::config::SolverConfig;
//! use robust_ot::measure::{CostMatrix, DiscreteMeasure};
//! use robust_ot::rsot::solve_rsot;
//!
//! let cost = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
//! let a = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
//! let (plan, _, report) = solve_rsot(&cost, &a, &a, &SolverConfig::theorem(1.0, 0.1)).unwrap();
//! assert!(report.objective <= 0.1);
//! assert!((plan.mass() - 1.0).abs() < 1e-12);
//! ```

pub mod barycenter;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod divergence;
pub mod error;
pub mod gibbs;
pub mod lowrank;
pub mod measure;
pub mod objective;
pub mod oracle;
pub mod rng;
pub mod rot;
pub mod rsot;
