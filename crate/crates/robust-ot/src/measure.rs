//! Measures, costs, plans and dual potentials.

use crate::error::{Error, Result};

/// Uniform mass added to every weight by [`DiscreteMeasure::smoothed`].
pub const SMOOTHING_DELTA: f64 = 1e-9;

/// Nonnegative weights on a finite support together with their total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
    mass: f64,
}

impl DiscreteMeasure {
    /// Every weight must be finite and strictly positive.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("measure has no support points".into()));
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        let mass = weights.iter().sum();
        Ok(Self { weights, mass })
    }

    /// Accepts zero weights by adding [`SMOOTHING_DELTA`] to each entry and
    /// rescaling back to the original mass.
    pub fn smoothed(weights: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::NonPositiveWeight { index, value });
        }
        let mass: f64 = weights.iter().sum();
        if mass <= 0.0 {
            return Err(Error::InvalidInput("measure has zero total mass".into()));
        }
        let scale = mass / (mass + SMOOTHING_DELTA * weights.len() as f64);
        Self::new(weights.into_iter().map(|w| (w + SMOOTHING_DELTA) * scale).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self::new(vec![1.0 / n as f64; n]).expect("uniform weights are positive")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.ln()).collect()
    }

    /// Largest |log w_i|.
    pub fn log_sup_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.ln().abs()).fold(0.0, f64::max)
    }

    /// Copy rescaled to unit mass.
    pub fn normalized(&self) -> Self {
        Self::new(self.weights.iter().map(|w| w / self.mass).collect())
            .expect("rescaling keeps weights positive")
    }
}

/// Dense square cost matrix stored row-major, with a transposed copy for
/// contiguous column sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
    transposed: Vec<f64>,
    max_entry: f64,
}

impl CostMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::Shape(format!(
                "cost matrix needs {}x{} = {} entries, got {}",
                n,
                n,
                n * n,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "cost entry ({}, {}) = {} is not a finite nonnegative number",
                pos / n,
                pos % n,
                entries[pos]
            )));
        }
        let mut transposed = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                transposed[j * n + i] = entries[i * n + j];
            }
        }
        let max_entry = entries.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            n,
            entries,
            transposed,
            max_entry,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Shape(format!(
                "cost row {} has {} entries, expected {}",
                i,
                rows[i].len(),
                n
            )));
        }
        Self::new(n, rows.concat())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(n, (0..n * n).map(|p| f(p / n, p % n)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(n, vec![0.0; n * n]).expect("zero cost is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Column `j` as a contiguous slice.
    pub fn col(&self, j: usize) -> &[f64] {
        &self.transposed[j * self.n..(j + 1) * self.n]
    }

    pub fn max_entry(&self) -> f64 {
        self.max_entry
    }

    pub fn transpose(&self) -> Self {
        Self {
            n: self.n,
            entries: self.transposed.clone(),
            transposed: self.entries.clone(),
            max_entry: self.max_entry,
        }
    }
}

/// Nonnegative n×n plan with marginals recomputed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    n: usize,
    entries: Vec<f64>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
    mass: f64,
}

impl TransportPlan {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::Shape(format!(
                "plan needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "plan entry ({}, {}) = {} is not a finite nonnegative number",
                pos / n,
                pos % n,
                entries[pos]
            )));
        }
        let mut row_marginal = vec![0.0; n];
        let mut col_marginal = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let x = entries[i * n + j];
                row_marginal[i] += x;
                col_marginal[j] += x;
            }
        }
        let mass = row_marginal.iter().sum();
        Ok(Self {
            n,
            entries,
            row_marginal,
            col_marginal,
            mass,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("plan rows must all have length n".into()));
        }
        Self::new(n, rows.concat())
    }

    /// Product coupling a bᵀ.
    pub fn outer(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Shape("outer product needs equal lengths".into()));
        }
        let n = a.len();
        Self::new(n, (0..n * n).map(|p| a[p / n] * b[p % n]).collect())
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        let n = d.len();
        Self::new(
            n,
            (0..n * n)
                .map(|p| if p / n == p % n { d[p / n] } else { 0.0 })
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_marginal(&self) -> &[f64] {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &[f64] {
        &self.col_marginal
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Copy divided by its own mass.
    pub fn normalized(&self) -> Result<Self> {
        if self.mass <= 0.0 {
            return Err(Error::InvalidInput("cannot normalize a zero plan".into()));
        }
        Self::new(self.n, self.entries.iter().map(|x| x / self.mass).collect())
    }

    /// Largest absolute entrywise difference.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Scaling potentials (u, v).
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl DualPotentials {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// max{‖u − u'‖∞, ‖v − v'‖∞}
    pub fn sup_distance(&self, other: &Self) -> f64 {
        sup_diff(&self.u, &other.u).max(sup_diff(&self.v, &other.v))
    }
}

pub(crate) fn sup_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_rejects_zero_weight() {
        let err = DiscreteMeasure::new(vec![0.5, 0.0, 0.5]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWeight { index: 1, .. }));
    }

    #[test]
    fn smoothing_keeps_mass() {
        let m = DiscreteMeasure::smoothed(vec![0.0, 2.0]).unwrap();
        assert!((m.mass() - 2.0).abs() < 1e-12);
        assert!(m.weights()[0] > 0.0);
    }

    #[test]
    fn cost_column_matches_entries() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(c.col(1), &[1.0, 3.0]);
        assert_eq!(c.max_entry(), 3.0);
        assert_eq!(c.transpose().get(0, 1), 2.0);
    }

    #[test]
    fn cost_rejects_negative_and_ragged() {
        assert!(CostMatrix::from_rows(&[vec![0.0, -1.0], vec![0.0, 0.0]]).is_err());
        assert!(matches!(
            CostMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0]]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn plan_marginals_are_cached() {
        let x = TransportPlan::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(x.row_marginal(), &[0.1 + 0.2, 0.3 + 0.4]);
        assert_eq!(x.col_marginal(), &[0.1 + 0.3, 0.2 + 0.4]);
        assert!((x.mass() - 1.0).abs() < 1e-12);
    }
}
