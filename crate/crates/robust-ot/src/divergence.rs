use crate::error::{Error, Result};
use crate::measure::TransportPlan;

/// Generalized KL divergence Σ x log(x/y) − x + y, with 0·log 0 = 0.
pub fn generalized_kl(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "KL arguments have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if let Some(i) = y.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveWeight {
            index: i,
            value: y[i],
        });
    }
    if let Some(i) = x.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "KL first argument has negative entry {} at {}",
            x[i], i
        )));
    }
    Ok(x.iter().zip(y).map(|(&xi, &yi)| kl_term(xi, yi)).sum())
}

pub(crate) fn kl_term(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        y
    } else {
        x * (x / y).ln() - x + y
    }
}

/// Entropy H(X) = Σ −X_ij (log X_ij − 1).
pub fn entropy(plan: &TransportPlan) -> f64 {
    entropy_of(plan.entries())
}

pub(crate) fn entropy_of(entries: &[f64]) -> f64 {
    entries
        .iter()
        .map(|&x| if x == 0.0 { 0.0 } else { -x * (x.ln() - 1.0) })
        .sum()
}
