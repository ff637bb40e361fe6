//! Multi-index stochastic collocation: index sets, combination coefficients
//! and memoized full-tensor estimators.

mod estimator;
mod index;

pub use estimator::{CacheEntry, Estimator, EstimatorCache};
pub use index::{IndexSet, MultiIndex};

use crate::quadrature::level_to_nodes;

/// Quadrature nodes that level `beta` adds over all rules `beta - e_n`:
/// `prod_n (m(beta_n) - m(beta_n - 1))`.
pub fn new_points(beta: &[u32]) -> usize {
    beta.iter()
        .map(|&b| level_to_nodes(b) - if b == 0 { 0 } else { level_to_nodes(b - 1) })
        .product()
}

/// Distinct sample solves needed to evaluate the estimator over `set`,
/// grouped by spatial level.
pub fn solves_by_alpha(set: &IndexSet, spatial_dim: usize) -> Vec<(Vec<u32>, usize)> {
    let mut out: std::collections::BTreeMap<Vec<u32>, usize> = Default::default();
    for i in set.iter() {
        let (a, b) = i.split(spatial_dim);
        *out.entry(a.to_vec()).or_default() += new_points(b);
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests;
