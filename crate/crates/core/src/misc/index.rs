//! Multi-indices, downward-closed sets and combination coefficients.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{arg, Error, Result};

/// Concatenated spatial and stochastic levels `(alpha | beta)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        Self(components)
    }

    /// All components equal to 1.
    pub fn ones(dim: usize) -> Self {
        Self(vec![1; dim])
    }

    pub fn from_parts(alpha: &[u32], beta: &[u32]) -> Self {
        Self([alpha, beta].concat())
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `(alpha, beta)` with `alpha` the first `d` components.
    pub fn split(&self, d: usize) -> (&[u32], &[u32]) {
        self.0.split_at(d)
    }

    /// `self + e_k`
    pub fn step(&self, k: usize) -> Self {
        let mut c = self.0.clone();
        c[k] += 1;
        Self(c)
    }

    /// `self - e_k`, or `None` if component `k` is 1 (or 0).
    pub fn back(&self, k: usize) -> Option<Self> {
        (self.0[k] > 1).then(|| {
            let mut c = self.0.clone();
            c[k] -= 1;
            Self(c)
        })
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().map(|&v| v as u64).sum()
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|&v| v >= 1)
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::Argument(format!("bad index component '{t}'")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// Nonempty downward-closed set of multi-indices with components >= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    dim: usize,
    members: BTreeSet<MultiIndex>,
}

impl IndexSet {
    /// `{(1, ..., 1)}`
    pub fn root(dim: usize) -> Self {
        let mut members = BTreeSet::new();
        members.insert(MultiIndex::ones(dim));
        Self { dim, members }
    }

    pub fn from_indices(dim: usize, indices: impl IntoIterator<Item = MultiIndex>) -> Result<Self> {
        let members: BTreeSet<MultiIndex> = indices.into_iter().collect();
        if members.is_empty() {
            return arg("index set must be nonempty");
        }
        let set = Self { dim, members };
        set.validate()?;
        Ok(set)
    }

    /// `{ i : 1 <= i <= corner }`
    pub fn rectangle(corner: &MultiIndex) -> Result<Self> {
        if !corner.is_positive() {
            return arg("rectangle corner must have components >= 1");
        }
        let counts: Vec<usize> = corner.components().iter().map(|&c| c as usize).collect();
        let mut idx = vec![0usize; counts.len()];
        let total: usize = counts.iter().product();
        let mut members = BTreeSet::new();
        for _ in 0..total {
            members.insert(MultiIndex(idx.iter().map(|&v| v as u32 + 1).collect()));
            crate::geometry::increment(&mut idx, &counts);
        }
        Ok(Self {
            dim: corner.dim(),
            members,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: &MultiIndex) -> bool {
        self.members.contains(i)
    }

    /// Members in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.members.iter()
    }

    fn validate(&self) -> Result<()> {
        for i in &self.members {
            if i.dim() != self.dim {
                return arg(format!("index ({i}) has dimension {}, expected {}", i.dim(), self.dim));
            }
            if !i.is_positive() {
                return arg(format!("index ({i}) has a component below 1"));
            }
            for k in 0..self.dim {
                if let Some(j) = i.back(k) {
                    if !self.members.contains(&j) {
                        return Err(Error::NotDownwardClosed {
                            index: i.to_string(),
                            missing: j.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Add indices; the set is left unchanged if the result is not downward closed.
    pub fn extend(&mut self, indices: impl IntoIterator<Item = MultiIndex>) -> Result<()> {
        let before = self.members.clone();
        self.members.extend(indices);
        if let Err(e) = self.validate() {
            self.members = before;
            return Err(e);
        }
        Ok(())
    }

    /// One-step successors outside the set.
    pub fn margin(&self) -> Vec<MultiIndex> {
        let mut out = BTreeSet::new();
        for i in &self.members {
            for k in 0..self.dim {
                let j = i.step(k);
                if !self.members.contains(&j) {
                    out.insert(j);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Margin members whose every predecessor is in the set.
    pub fn reduced_margin(&self) -> Vec<MultiIndex> {
        self.margin()
            .into_iter()
            .filter(|i| (0..self.dim).all(|k| i.back(k).is_none_or(|j| self.contains(&j))))
            .collect()
    }

    /// Nonzero coefficients `c_i = sum_{j in {0,1}^D, i + j in set} (-1)^{|j|}`.
    pub fn combination_coefficients(&self) -> BTreeMap<MultiIndex, i64> {
        let mut out = BTreeMap::new();
        let mut shifted = vec![0u32; self.dim];
        for i in &self.members {
            let mut c = 0i64;
            for mask in 0u32..(1 << self.dim) {
                for (k, s) in shifted.iter_mut().enumerate() {
                    *s = i.0[k] + ((mask >> k) & 1);
                }
                if self.members.contains(&MultiIndex(shifted.clone())) {
                    c += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
                }
            }
            if c != 0 {
                out.insert(i.clone(), c);
            }
        }
        out
    }

    /// One index per line, components separated by spaces.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in &self.members {
            s.push_str(&i.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut indices = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let i: MultiIndex = line.parse().map_err(|e: Error| Error::Parse {
                line: no + 1,
                msg: e.to_string(),
            })?;
            indices.push(i);
        }
        let dim = indices.first().map_or(0, MultiIndex::dim);
        Self::from_indices(dim, indices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn set(v: &[&[u32]]) -> IndexSet {
        IndexSet::from_indices(v[0].len(), v.iter().map(|c| mi(c))).unwrap()
    }

    #[test]
    fn margin_examples() {
        assert_eq!(IndexSet::root(2).margin(), vec![mi(&[1, 2]), mi(&[2, 1])]);
        let td = set(&[&[1, 1], &[1, 2], &[2, 1]]);
        assert_eq!(td.margin(), vec![mi(&[1, 3]), mi(&[2, 2]), mi(&[3, 1])]);
        for m in td.margin() {
            assert!(!td.contains(&m));
        }
    }

    #[test]
    fn reduced_margin_examples() {
        let td = set(&[&[1, 1], &[1, 2], &[2, 1]]);
        assert_eq!(td.reduced_margin(), vec![mi(&[1, 3]), mi(&[2, 2]), mi(&[3, 1])]);
        let line = set(&[&[1, 1], &[2, 1]]);
        assert_eq!(line.reduced_margin(), vec![mi(&[1, 2]), mi(&[3, 1])]);
        assert!(line.margin().contains(&mi(&[2, 2])));
    }

    #[test]
    fn coefficient_examples() {
        let rect = IndexSet::rectangle(&mi(&[2, 2])).unwrap();
        let c = rect.combination_coefficients();
        assert_eq!(c.len(), 1);
        assert_eq!(c[&mi(&[2, 2])], 1);

        let td = set(&[&[1, 1], &[1, 2], &[2, 1]]);
        let c = td.combination_coefficients();
        assert_eq!(c.len(), 3);
        assert_eq!(c[&mi(&[1, 2])], 1);
        assert_eq!(c[&mi(&[2, 1])], 1);
        assert_eq!(c[&mi(&[1, 1])], -1);

        let c = IndexSet::root(3).combination_coefficients();
        assert_eq!(c[&mi(&[1, 1, 1])], 1);
    }

    #[test]
    fn rejects_sets_with_holes() {
        let err = IndexSet::from_indices(2, [mi(&[1, 1]), mi(&[2, 2])]).unwrap_err();
        assert!(matches!(err, Error::NotDownwardClosed { .. }));
        assert!(IndexSet::from_indices(2, [mi(&[0, 1])]).is_err());
        let mut s = IndexSet::root(2);
        assert!(s.extend([mi(&[1, 3])]).is_err());
        assert_eq!(s, IndexSet::root(2));
        s.extend([mi(&[1, 2])]).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn text_round_trip() {
        let s = IndexSet::rectangle(&mi(&[2, 1, 3])).unwrap();
        assert_eq!(IndexSet::from_text(&s.to_text()).unwrap(), s);
        assert!(matches!(
            IndexSet::from_text("1 1\n1 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(IndexSet::from_text("1 1\n2 2\n").is_err());
    }
}
