//! Unconstrained robust transport and the unbalanced problem behind it.
//! The ROT plan is the UOT plan rescaled to unit mass.
//!
//! Run: cargo run --release --example rot_uot

use robust_ot::config::{SolverConfig, StopRule};
use robust_ot::measure::{CostMatrix, DiscreteMeasure};
use robust_ot::objective::entropic_objective_uot;
use robust_ot::rot::{check_rot_stationarity, rot_value_from_uot_mass, solve_rot, solve_uot};

fn main() -> robust_ot::error::Result<()> {
    let cost = CostMatrix::from_rows(&[
        vec![0.0, 1.0, 4.0, 9.0],
        vec![1.0, 0.0, 1.0, 4.0],
        vec![4.0, 1.0, 0.0, 1.0],
        vec![9.0, 4.0, 1.0, 0.0],
    ])?;
    let a = DiscreteMeasure::new(vec![0.7, 0.1, 0.1, 0.1])?;
    let b = DiscreteMeasure::new(vec![0.1, 0.1, 0.1, 0.7])?;
    let (tau, eta) = (1.0, 0.1);

    let config = SolverConfig::manual(tau, eta, 100_000).with_stop(StopRule::DualResidual(1e-13));
    let (x_rot, p_rot, r_rot) = solve_rot(&cost, &a, &b, &config)?;
    let (x_uot, _, r_uot) = solve_uot(&cost, &a, &b, &config)?;

    println!("UOT mass {:.6} after {} iterations", x_uot.mass(), r_uot.iterations_run);
    println!("sup |X_rot - X_uot / mass| = {:.2e}", x_rot.sup_distance(&x_uot.normalized()?));

    let g_uot = entropic_objective_uot(&x_uot, &cost, &a, &b, tau, eta)?;
    let lhs = g_uot + (2.0 * tau + eta) * x_uot.mass();
    println!("g_uot + (2tau + eta) mass = {lhs:.12}, tau (alpha + beta) = {:.12}", tau * (a.mass() + b.mass()));

    let predicted = rot_value_from_uot_mass(x_uot.mass(), &a, &b, eta, tau);
    println!("entropic ROT value {:.10}, predicted from the mass {predicted:.10}", r_rot.entropic_objective);

    let (row, col) = check_rot_stationarity(&p_rot.u, &p_rot.v, &cost, &a, &b, eta, tau)?;
    println!("stationarity defects: rows {row:.1e}, columns {col:.1e}");
    Ok(())
}
