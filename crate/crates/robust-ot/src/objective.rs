//! Primal objectives and their entropic versions g = f − ηH.

use crate::divergence::{entropy, generalized_kl};
use crate::error::{Error, Result};
use crate::measure::{CostMatrix, DiscreteMeasure, TransportPlan};

fn check(plan: &TransportPlan, cost: &CostMatrix, measures: &[&DiscreteMeasure]) -> Result<()> {
    if plan.n() != cost.n() {
        return Err(Error::Shape(format!(
            "plan is {}x{} but cost is {}x{}",
            plan.n(),
            plan.n(),
            cost.n(),
            cost.n()
        )));
    }
    if let Some(m) = measures.iter().find(|m| m.len() != cost.n()) {
        return Err(Error::Shape(format!(
            "measure has {} weights, cost is {}x{}",
            m.len(),
            cost.n(),
            cost.n()
        )));
    }
    Ok(())
}

/// ⟨C, X⟩
pub fn transport_cost(plan: &TransportPlan, cost: &CostMatrix) -> f64 {
    plan.entries().iter().zip(cost.entries()).map(|(x, c)| x * c).sum()
}

/// ⟨C, X⟩ + τ KL(X1‖a)
pub fn objective_rsot(plan: &TransportPlan, cost: &CostMatrix, a: &DiscreteMeasure, tau: f64) -> Result<f64> {
    check(plan, cost, &[a])?;
    Ok(transport_cost(plan, cost) + tau * generalized_kl(plan.row_marginal(), a.weights())?)
}

/// ⟨C, X⟩ + τ KL(X1‖a) + τ KL(Xᵀ1‖b), evaluated on a mass-one plan.
pub fn objective_rot(
    plan: &TransportPlan,
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    tau: f64,
) -> Result<f64> {
    objective_uot(plan, cost, a, b, tau)
}

/// ⟨C, X⟩ + τ KL(X1‖a) + τ KL(Xᵀ1‖b) for a plan of any mass.
pub fn objective_uot(
    plan: &TransportPlan,
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    tau: f64,
) -> Result<f64> {
    check(plan, cost, &[a, b])?;
    Ok(transport_cost(plan, cost)
        + tau * generalized_kl(plan.row_marginal(), a.weights())?
        + tau * generalized_kl(plan.col_marginal(), b.weights())?)
}

pub fn entropic_objective_rsot(
    plan: &TransportPlan,
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    tau: f64,
    eta: f64,
) -> Result<f64> {
    Ok(objective_rsot(plan, cost, a, tau)? - eta * entropy(plan))
}

pub fn entropic_objective_rot(
    plan: &TransportPlan,
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    tau: f64,
    eta: f64,
) -> Result<f64> {
    Ok(objective_rot(plan, cost, a, b, tau)? - eta * entropy(plan))
}

pub fn entropic_objective_uot(
    plan: &TransportPlan,
    cost: &CostMatrix,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    tau: f64,
    eta: f64,
) -> Result<f64> {
    Ok(objective_uot(plan, cost, a, b, tau)? - eta * entropy(plan))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_plan_with_zero_cost() {
        let a = DiscreteMeasure::uniform(2);
        let x = TransportPlan::outer(a.weights(), a.weights()).unwrap();
        let f = objective_rot(&x, &CostMatrix::zeros(2), &a, &a, 1.0).unwrap();
        assert!(f.abs() < 1e-15);
    }

    #[test]
    fn forced_plan() {
        let a = DiscreteMeasure::new(vec![1.0]).unwrap();
        let x = TransportPlan::new(1, vec![1.0]).unwrap();
        let c = CostMatrix::new(1, vec![5.0]).unwrap();
        assert_eq!(objective_rsot(&x, &c, &a, 1.0).unwrap(), 5.0);
    }

    #[test]
    fn entropic_variant_subtracts_entropy() {
        let a = DiscreteMeasure::new(vec![0.2, 0.8]).unwrap();
        let x = TransportPlan::from_rows(&[vec![0.1, 0.3], vec![0.4, 0.2]]).unwrap();
        let c = CostMatrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.5]]).unwrap();
        let f = objective_rsot(&x, &c, &a, 0.7).unwrap();
        let g = entropic_objective_rsot(&x, &c, &a, 0.7, 0.01).unwrap();
        assert_eq!(g, f - 0.01 * entropy(&x));
    }

    #[test]
    fn dimension_mismatch() {
        let a = DiscreteMeasure::uniform(3);
        let x = TransportPlan::new(2, vec![0.25; 4]).unwrap();
        assert!(matches!(
            objective_rsot(&x, &CostMatrix::zeros(2), &a, 1.0),
            Err(Error::Shape(_))
        ));
    }
}
