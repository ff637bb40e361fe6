//! Rate models, a-priori index sets, rate fitting and the adaptive loop.

mod fit;
mod run;

pub use fit::{fit_g_rates, fit_spatial_rates, linear_fit, GFit, GFlag, LineFit, SpatialFit, SpatialSweep};
pub use run::{run_misc, select_profitable, IterationRecord, MiscConfig, MiscRun, ProfitLedger, ProfitRecord, RunStatus};

use std::collections::BTreeSet;
use std::f64::consts::LOG2_E;

use crate::error::{arg, Result};
use crate::misc::{IndexSet, MultiIndex};

/// Error and work model
/// `E ~ 2^{s - sum alpha_i r_i - sum g_n 2^{beta_n} log2 e}`,
/// `W ~ 2^{sum alpha_i c_i + sum beta_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateModel {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub g: Vec<f64>,
    /// Fitted offset `s`; zero unless set by a fit.
    pub log2_scale: f64,
}

impl RateModel {
    pub fn new(r: Vec<f64>, c: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if r.len() != c.len() {
            return arg("r and c need one entry per spatial direction");
        }
        if r.iter().chain(&c).chain(&g).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return arg("rates must be positive and finite");
        }
        Ok(Self {
            r,
            c,
            g,
            log2_scale: 0.0,
        })
    }

    pub fn spatial_dim(&self) -> usize {
        self.r.len()
    }

    pub fn stochastic_dim(&self) -> usize {
        self.g.len()
    }

    pub fn dim(&self) -> usize {
        self.r.len() + self.g.len()
    }

    pub fn log2_e_tilde(&self, alpha: &[u32], beta: &[u32]) -> f64 {
        let a: f64 = alpha.iter().zip(&self.r).map(|(&a, r)| a as f64 * r).sum();
        let b: f64 = beta
            .iter()
            .zip(&self.g)
            .map(|(&b, g)| g * (b as f64).exp2() * LOG2_E)
            .sum();
        self.log2_scale - a - b
    }

    pub fn e_tilde(&self, alpha: &[u32], beta: &[u32]) -> f64 {
        self.log2_e_tilde(alpha, beta).exp2()
    }

    pub fn log2_w_tilde(&self, alpha: &[u32], beta: &[u32]) -> f64 {
        let a: f64 = alpha.iter().zip(&self.c).map(|(&a, c)| a as f64 * c).sum();
        let b: f64 = beta.iter().map(|&b| b as f64).sum();
        a + b
    }

    pub fn w_tilde(&self, alpha: &[u32], beta: &[u32]) -> f64 {
        self.log2_w_tilde(alpha, beta).exp2()
    }

    /// `log2(E~ / W~)` at the concatenated index.
    pub fn log2_profit(&self, index: &MultiIndex) -> f64 {
        let (a, b) = index.split(self.spatial_dim());
        self.log2_e_tilde(a, b) - self.log2_w_tilde(a, b)
    }

    /// Per-solve cost model `prod 2^{alpha_i c_i}`.
    pub fn solve_work(&self, alpha: &[u32]) -> f64 {
        alpha
            .iter()
            .zip(&self.c)
            .map(|(&a, c)| a as f64 * c)
            .sum::<f64>()
            .exp2()
    }
}

/// All indices >= 1 satisfying a predicate that is monotone (once false,
/// false for every larger index).
fn enumerate_monotone(dim: usize, keep: impl Fn(&MultiIndex) -> bool) -> Option<IndexSet> {
    let root = MultiIndex::ones(dim);
    if !keep(&root) {
        return None;
    }
    let mut found = BTreeSet::new();
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        if !found.insert(i.clone()) {
            continue;
        }
        for k in 0..dim {
            let j = i.step(k);
            if !found.contains(&j) && keep(&j) {
                stack.push(j);
            }
        }
    }
    Some(IndexSet::from_indices(dim, found).expect("monotone predicate gives a downward-closed set"))
}

fn within(lhs: f64, w: f64) -> bool {
    lhs <= w + 1e-12 * w.abs().max(1.0)
}

/// `{ [alpha, beta] >= 1 : sum kappa_i alpha_i + sum g_n beta_n <= w }`;
/// `None` if even the root violates the bound.
pub fn build_total_degree(kappa: &[f64], g: &[f64], w: f64) -> Result<Option<IndexSet>> {
    if kappa.iter().chain(g).any(|v| !(*v > 0.0)) {
        return arg("total-degree weights must be positive");
    }
    let weights: Vec<f64> = kappa.iter().chain(g).copied().collect();
    Ok(enumerate_monotone(weights.len(), |i| {
        let lhs: f64 = i
            .components()
            .iter()
            .zip(&weights)
            .map(|(&c, w)| c as f64 * w)
            .sum();
        within(lhs, w)
    }))
}

/// `{ [alpha, beta] >= 1 : sum (r_i + c_i) alpha_i + sum (beta_n + g_n 2^{beta_n} log2 e) <= w }`
pub fn build_optimal_set(model: &RateModel, w: f64) -> Option<IndexSet> {
    let d = model.spatial_dim();
    enumerate_monotone(model.dim(), |i| {
        let (a, b) = i.split(d);
        within(optimal_set_lhs(model, a, b), w)
    })
}

/// Left-hand side of the optimal-set inequality.
pub fn optimal_set_lhs(model: &RateModel, alpha: &[u32], beta: &[u32]) -> f64 {
    let sa: f64 = alpha
        .iter()
        .zip(model.r.iter().zip(&model.c))
        .map(|(&a, (r, c))| (r + c) * a as f64)
        .sum();
    let sb: f64 = beta
        .iter()
        .zip(&model.g)
        .map(|(&b, g)| b as f64 + g * (b as f64).exp2() * LOG2_E)
        .sum();
    sa + sb
}
