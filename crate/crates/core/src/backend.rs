//! Sample solvers seen by the collocation layer.

use crate::error::Result;
use crate::pde::{DiffusionProblem, SampleValue};

/// `(alpha, y) -> phi_alpha(y)` with a deterministic cost.
///
/// `y` lives in `[-1, 1]^N`; `alpha` has `spatial_dim` components, all >= 1.
pub trait Backend: Send + Sync {
    fn spatial_dim(&self) -> usize;
    fn stochastic_dim(&self) -> usize;
    fn solve(&self, alpha: &[u32], y: &[f64]) -> Result<SampleValue>;
}

impl Backend for DiffusionProblem {
    fn spatial_dim(&self) -> usize {
        DiffusionProblem::spatial_dim(self)
    }

    fn stochastic_dim(&self) -> usize {
        DiffusionProblem::stochastic_dim(self)
    }

    fn solve(&self, alpha: &[u32], y: &[f64]) -> Result<SampleValue> {
        self.solve_sample(alpha, y)
    }
}

/// Closure-backed solver with cost `prod 2^{alpha_i c_i}`; handy for
/// synthetic problems with known rates.
pub struct FnBackend<F> {
    d: usize,
    n: usize,
    cost_rates: Vec<f64>,
    f: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&[u32], &[f64]) -> f64 + Send + Sync,
{
    pub fn new(spatial_dim: usize, stochastic_dim: usize, cost_rates: Vec<f64>, f: F) -> Self {
        assert_eq!(cost_rates.len(), spatial_dim);
        Self {
            d: spatial_dim,
            n: stochastic_dim,
            cost_rates,
            f,
        }
    }
}

impl<F> Backend for FnBackend<F>
where
    F: Fn(&[u32], &[f64]) -> f64 + Send + Sync,
{
    fn spatial_dim(&self) -> usize {
        self.d
    }

    fn stochastic_dim(&self) -> usize {
        self.n
    }

    fn solve(&self, alpha: &[u32], y: &[f64]) -> Result<SampleValue> {
        let e: f64 = alpha
            .iter()
            .zip(&self.cost_rates)
            .map(|(&a, c)| a as f64 * c)
            .sum();
        Ok(SampleValue {
            value: (self.f)(alpha, y),
            cost: e.exp2(),
        })
    }
}
