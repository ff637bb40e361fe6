//! Nested Clenshaw–Curtis rules for the uniform density on `[-1, 1]` and
//! their tensorization over the parameter box.

use std::f64::consts::PI;

use crate::error::{arg, Error, Result};

/// Deepest supported level; node keys live on a `2^(MAX_LEVEL - 1)` grid.
pub const MAX_LEVEL: u32 = 21;
const KEY_EXP: u32 = MAX_LEVEL - 1;

/// Level-independent identity of a Clenshaw–Curtis node: the position `k` of
/// `t = k / 2^20` with node value `-cos(pi t)`. Nested levels share keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeKey(pub u32);

impl NodeKey {
    pub fn value(self) -> f64 {
        node_value(self.0)
    }
}

/// Number of nodes of level `beta`: `m(0) = 0`, `m(1) = 1`, `m(b) = 2^(b-1) + 1`.
pub fn level_to_nodes(beta: u32) -> usize {
    match beta {
        0 => 0,
        1 => 1,
        b => (1usize << (b - 1)) + 1,
    }
}

fn node_value(k: u32) -> f64 {
    let full = 1u32 << KEY_EXP;
    let half = full / 2;
    if k == half {
        0.0
    } else if k > half {
        -node_value(full - k)
    } else if k == 0 {
        -1.0
    } else {
        -(PI * (k as f64 / full as f64)).cos()
    }
}

/// Keys of the level-`beta` nodes in ascending node order.
pub fn cc_keys(beta: u32) -> Vec<NodeKey> {
    assert!(
        (1..=MAX_LEVEL).contains(&beta),
        "Clenshaw-Curtis level {beta} outside 1..={MAX_LEVEL}"
    );
    if beta == 1 {
        return vec![NodeKey(1 << (KEY_EXP - 1))];
    }
    let shift = KEY_EXP - (beta - 1);
    (0..level_to_nodes(beta) as u32)
        .map(|j| NodeKey(j << shift))
        .collect()
}

/// Nodes of level `beta`, sorted ascending.
pub fn cc_nodes(beta: u32) -> Vec<f64> {
    cc_keys(beta).into_iter().map(NodeKey::value).collect()
}

/// Weights of level `beta` against the density 1/2 on `[-1, 1]`.
pub fn cc_weights(beta: u32) -> Vec<f64> {
    let m = level_to_nodes(beta);
    if m == 1 {
        return vec![1.0];
    }
    let n = m - 1;
    let weight = |j: usize| {
        let theta = j as f64 * PI / n as f64;
        let mut s = 0.0;
        for k in 1..=n / 2 {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            s += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        0.5 * c / n as f64 * (1.0 - s)
    };
    let mut w = vec![0.0; m];
    for j in 0..=n / 2 {
        w[j] = weight(j);
        w[n - j] = w[j];
    }
    w
}

/// Univariate nested rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub level: u32,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub keys: Vec<NodeKey>,
}

impl QuadratureRule {
    pub fn new(level: u32) -> Result<Self> {
        if !(1..=MAX_LEVEL).contains(&level) {
            return arg(format!("quadrature level {level} outside 1..={MAX_LEVEL}"));
        }
        Ok(Self {
            level,
            nodes: cc_nodes(level),
            weights: cc_weights(level),
            keys: cc_keys(level),
        })
    }

    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Cartesian product of univariate rules at levels `beta`.
#[derive(Debug, Clone)]
pub struct TensorRule {
    pub levels: Vec<u32>,
    rules: Vec<QuadratureRule>,
}

/// One node of a tensor rule.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorNode {
    pub point: Vec<f64>,
    pub keys: Vec<NodeKey>,
    pub weight: f64,
}

impl TensorRule {
    /// All levels must be at least 1.
    pub fn new(levels: &[u32]) -> Result<Self> {
        let rules = levels
            .iter()
            .map(|&b| QuadratureRule::new(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            levels: levels.to_vec(),
            rules,
        })
    }

    pub fn num_points(&self) -> usize {
        self.rules.iter().map(|r| r.nodes.len()).product()
    }

    /// Nodes in lexicographic order (last direction fastest).
    pub fn nodes(&self) -> impl Iterator<Item = TensorNode> + '_ {
        let dims: Vec<usize> = self.rules.iter().map(|r| r.nodes.len()).collect();
        let total = self.num_points();
        (0..total).map(move |mut flat| {
            let n = dims.len();
            let mut idx = vec![0usize; n];
            for k in (0..n).rev() {
                idx[k] = flat % dims[k];
                flat /= dims[k];
            }
            let mut weight = 1.0;
            let mut point = Vec::with_capacity(n);
            let mut keys = Vec::with_capacity(n);
            for (k, r) in self.rules.iter().enumerate() {
                weight *= r.weights[idx[k]];
                point.push(r.nodes[idx[k]]);
                keys.push(r.keys[idx[k]]);
            }
            TensorNode {
                point,
                keys,
                weight,
            }
        })
    }
}

/// Tensor quadrature of `f` at levels `beta`; zero if any level is zero.
pub fn tensor_quadrature(levels: &[u32], f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    if levels.contains(&0) {
        return Ok(0.0);
    }
    let rule = TensorRule::new(levels)?;
    let mut acc = 0.0;
    for node in rule.nodes() {
        let v = f(&node.point);
        if !v.is_finite() {
            return Err(Error::NonFinite { node: node.point });
        }
        acc += node.weight * v;
    }
    Ok(acc)
}

/// Linear map of `t` in `[-1, 1]` onto `[lo, hi]`.
pub fn affine_to_interval(t: f64, lo: f64, hi: f64) -> f64 {
    lo + 0.5 * (t + 1.0) * (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_rule() {
        assert_eq!(level_to_nodes(0), 0);
        assert_eq!(level_to_nodes(1), 1);
        assert_eq!(level_to_nodes(2), 3);
        assert_eq!(level_to_nodes(3), 5);
        assert_eq!(level_to_nodes(6), 33);
    }

    #[test]
    fn low_levels() {
        assert_eq!(cc_nodes(1), vec![0.0]);
        assert_eq!(cc_nodes(2), vec![-1.0, 0.0, 1.0]);
        assert_eq!(cc_weights(1), vec![1.0]);
        let w = cc_weights(2);
        for (a, b) in w.iter().zip([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn level_three_symmetry() {
        let r = QuadratureRule::new(3).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(r.apply(|x| x).abs() < 1e-16);
        assert!(r.apply(|x| x * x * x).abs() < 1e-16);
    }

    #[test]
    fn tensor_examples() {
        let one = tensor_quadrature(&[3, 2, 4], |_| 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-14);
        let odd = tensor_quadrature(&[2, 2], |y| y[0] * y[1]).unwrap();
        assert_eq!(odd, 0.0);
        let sq = tensor_quadrature(&[3], |y| y[0] * y[0]).unwrap();
        assert!((sq - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(tensor_quadrature(&[2, 0], |_| 1.0).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_integrand_reports_node() {
        let err = tensor_quadrature(&[2], |y| 1.0 / (y[0] - 1.0)).unwrap_err();
        match err {
            Error::NonFinite { node } => assert_eq!(node, vec![1.0]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn affine_transport() {
        assert_eq!(affine_to_interval(-1.0, 2.0, 4.0), 2.0);
        assert_eq!(affine_to_interval(0.0, 2.0, 4.0), 3.0);
        assert_eq!(affine_to_interval(1.0, 2.0, 4.0), 4.0);
    }
}
