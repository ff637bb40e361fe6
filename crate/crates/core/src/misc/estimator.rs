//! Full-tensor estimators, mixed details and the combination estimator.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;

use super::index::{IndexSet, MultiIndex};
use crate::backend::Backend;
use crate::error::{arg, Error, Result};
use crate::quadrature::{NodeKey, TensorRule};

/// Memoized `M_{alpha,beta}` with the solves it triggered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheEntry {
    pub value: f64,
    /// Solves not already available from coarser rules at the same `alpha`.
    pub new_solves: usize,
    /// Summed deterministic cost of those solves.
    pub cost: f64,
    pub wall: Duration,
}

type EntryKey = (Vec<u32>, Vec<u32>);

#[derive(Debug, Default)]
struct Inner {
    entries: HashMap<EntryKey, CacheEntry>,
    solves: HashMap<(Vec<u32>, Vec<NodeKey>), f64>,
    solve_cost: HashMap<Vec<u32>, f64>,
    computations: usize,
    total_solves: usize,
    total_cost: f64,
}

/// Write-once store of full-tensor values and individual sample solves.
#[derive(Debug, Default)]
pub struct EstimatorCache {
    inner: Mutex<Inner>,
}

impl EstimatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, alpha: &[u32], beta: &[u32]) -> Option<CacheEntry> {
        self.inner
            .lock()
            .entries
            .get(&(alpha.to_vec(), beta.to_vec()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of full-tensor values computed (not served from the cache).
    pub fn computations(&self) -> usize {
        self.inner.lock().computations
    }

    pub fn total_solves(&self) -> usize {
        self.inner.lock().total_solves
    }

    pub fn total_cost(&self) -> f64 {
        self.inner.lock().total_cost
    }

    /// Cost of one solve at `alpha`, if any has been performed.
    pub fn solve_cost(&self, alpha: &[u32]) -> Option<f64> {
        self.inner.lock().solve_cost.get(alpha).copied()
    }
}

/// Collocation estimators over a sample solver.
#[derive(Clone)]
pub struct Estimator {
    backend: Arc<dyn Backend>,
    cache: Arc<EstimatorCache>,
}

impl std::fmt::Debug for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Estimator")
            .field("spatial_dim", &self.backend.spatial_dim())
            .field("stochastic_dim", &self.backend.stochastic_dim())
            .field("cached", &self.cache.len())
            .finish()
    }
}

impl Estimator {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Self::with_cache(backend, Arc::new(EstimatorCache::new()))
    }

    pub fn with_cache(backend: Arc<dyn Backend>, cache: Arc<EstimatorCache>) -> Self {
        Self { backend, cache }
    }

    pub fn backend(&self) -> &dyn Backend {
        self.backend.as_ref()
    }

    pub fn cache(&self) -> &EstimatorCache {
        &self.cache
    }

    pub fn spatial_dim(&self) -> usize {
        self.backend.spatial_dim()
    }

    pub fn stochastic_dim(&self) -> usize {
        self.backend.stochastic_dim()
    }

    /// `d + N`
    pub fn dim(&self) -> usize {
        self.spatial_dim() + self.stochastic_dim()
    }

    fn check(&self, alpha: &[u32], beta: &[u32]) -> Result<()> {
        if alpha.len() != self.spatial_dim() || beta.len() != self.stochastic_dim() {
            return arg(format!(
                "index ({alpha:?} | {beta:?}) does not match dimensions ({}, {})",
                self.spatial_dim(),
                self.stochastic_dim()
            ));
        }
        Ok(())
    }

    /// `M_{alpha,beta}`: tensor Clenshaw-Curtis quadrature of `phi_alpha`;
    /// zero if any component is zero.
    pub fn full_tensor_value(&self, alpha: &[u32], beta: &[u32]) -> Result<f64> {
        self.check(alpha, beta)?;
        if alpha.contains(&0) || beta.contains(&0) {
            return Ok(0.0);
        }
        if let Some(e) = self.cache.get(alpha, beta) {
            return Ok(e.value);
        }
        let start = Instant::now();
        let rule = TensorRule::new(beta)?;
        let mut value = 0.0;
        let mut new_solves = 0;
        let mut cost = 0.0;
        for node in rule.nodes() {
            let key = (alpha.to_vec(), node.keys);
            let cached = self.cache.inner.lock().solves.get(&key).copied();
            let phi = match cached {
                Some(v) => v,
                None => {
                    let tag = |source: Error| Error::Estimator {
                        alpha: alpha.to_vec(),
                        beta: beta.to_vec(),
                        node: node.point.clone(),
                        source: Box::new(source),
                    };
                    let s = self.backend.solve(alpha, &node.point).map_err(tag)?;
                    if !s.value.is_finite() {
                        return Err(tag(Error::NonFinite {
                            node: node.point.clone(),
                        }));
                    }
                    let mut inner = self.cache.inner.lock();
                    if !inner.solves.contains_key(&key) {
                        inner.solves.insert(key, s.value);
                        inner.solve_cost.entry(alpha.to_vec()).or_insert(s.cost);
                        inner.total_solves += 1;
                        inner.total_cost += s.cost;
                        new_solves += 1;
                        cost += s.cost;
                    }
                    s.value
                }
            };
            value += node.weight * phi;
        }
        let entry = CacheEntry {
            value,
            new_solves,
            cost,
            wall: start.elapsed(),
        };
        let mut inner = self.cache.inner.lock();
        let k = (alpha.to_vec(), beta.to_vec());
        if !inner.entries.contains_key(&k) {
            inner.entries.insert(k, entry);
            inner.computations += 1;
        }
        Ok(inner.entries[&(alpha.to_vec(), beta.to_vec())].value)
    }

    /// `M` at the concatenated index `(alpha | beta)`.
    pub fn value_at(&self, index: &MultiIndex) -> Result<f64> {
        let (a, b) = index.split(self.spatial_dim());
        self.full_tensor_value(a, b)
    }

    /// `sum_{j in {0,1}^{d+N}} (-1)^{|j|} M_{index - j}`
    pub fn delta_mix(&self, index: &MultiIndex) -> Result<f64> {
        let dim = self.dim();
        if index.dim() != dim {
            return arg("index dimension mismatch");
        }
        if !index.is_positive() {
            return arg(format!("detail index ({index}) needs components >= 1"));
        }
        let c = index.components();
        let mut shifted = vec![0u32; dim];
        let mut acc = 0.0;
        for mask in 0u32..(1 << dim) {
            for k in 0..dim {
                shifted[k] = c[k] - ((mask >> k) & 1);
            }
            if shifted.contains(&0) {
                continue;
            }
            let m = self.value_at(&MultiIndex::new(shifted.clone()))?;
            if mask.count_ones() % 2 == 0 {
                acc += m;
            } else {
                acc -= m;
            }
        }
        Ok(acc)
    }

    /// `|delta_mix(index)|`
    pub fn error_contribution(&self, index: &MultiIndex) -> Result<f64> {
        Ok(self.delta_mix(index)?.abs())
    }

    /// Combination-technique form `sum_i c_i M_i`.
    pub fn misc_estimate(&self, set: &IndexSet) -> Result<f64> {
        if set.dim() != self.dim() {
            return arg("index set dimension mismatch");
        }
        let mut acc = 0.0;
        for (i, c) in set.combination_coefficients() {
            acc += c as f64 * self.value_at(&i)?;
        }
        Ok(acc)
    }

    /// Cost of one solve at `alpha`; triggers the midpoint solve if needed.
    pub fn solve_cost(&self, alpha: &[u32]) -> Result<f64> {
        if let Some(c) = self.cache.solve_cost(alpha) {
            return Ok(c);
        }
        self.full_tensor_value(alpha, &vec![1; self.stochastic_dim()])?;
        self.cache
            .solve_cost(alpha)
            .ok_or_else(|| Error::Argument("no solve recorded".into()))
    }
}
