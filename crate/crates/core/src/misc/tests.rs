use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::backend::{Backend, FnBackend};
use crate::error::Error;
use crate::pde::SampleValue;
use crate::quadrature::{cc_nodes, cc_weights};

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

/// Grow a set from the root by repeatedly adding reduced-margin members.
fn grow(dim: usize, picks: &[usize]) -> IndexSet {
    let mut s = IndexSet::root(dim);
    for &p in picks {
        let red = s.reduced_margin();
        let pick = red[p % red.len()].clone();
        s.extend([pick]).unwrap();
    }
    s
}

fn set_strategy(max_dim: usize, max_adds: usize) -> impl Strategy<Value = IndexSet> {
    (1..=max_dim, proptest::collection::vec(0usize..1000, 0..max_adds))
        .prop_map(|(d, picks)| grow(d, &picks))
}

/// `phi_alpha(y) = exp(sum y / 2) (1 + 2^{-3 sum alpha})` style toy.
fn toy(d: usize, n: usize) -> Estimator {
    Estimator::new(Arc::new(FnBackend::new(d, n, vec![1.0; d], |a, y| {
        let sa: u32 = a.iter().sum();
        let sy: f64 = y.iter().enumerate().map(|(i, v)| v / (i + 2) as f64).sum();
        sy.exp() * (1.0 + (-3.0 * sa as f64).exp2()) + 0.1 * y.first().copied().unwrap_or(0.0).powi(3)
    })))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coefficients_sum_to_one(s in set_strategy(5, 40)) {
        let total: i64 = s.combination_coefficients().values().sum();
        prop_assert_eq!(total, 1);
    }

    #[test]
    fn nonzero_coefficients_touch_the_margin(s in set_strategy(4, 30)) {
        for i in s.combination_coefficients().keys() {
            let d = s.dim();
            let outside = (0u32..(1 << d)).any(|mask| {
                let j: Vec<u32> = (0..d).map(|k| i.components()[k] + ((mask >> k) & 1)).collect();
                !s.contains(&MultiIndex::new(j))
            });
            prop_assert!(outside);
        }
    }

    #[test]
    fn reduced_margin_keeps_sets_downward_closed(s in set_strategy(4, 20)) {
        for r in s.reduced_margin() {
            let mut t = s.clone();
            prop_assert!(t.extend([r]).is_ok());
        }
        for m in s.margin() {
            prop_assert!(!s.contains(&m));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn estimate_equals_sum_of_details(picks in proptest::collection::vec(0usize..1000, 0..15)) {
        let est = toy(2, 2);
        let s = grow(4, &picks);
        let a = est.misc_estimate(&s).unwrap();
        let b: f64 = s.iter().map(|i| est.delta_mix(i).unwrap()).sum();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn constant_functional_is_reproduced(picks in proptest::collection::vec(0usize..1000, 0..20)) {
        let est = Estimator::new(Arc::new(FnBackend::new(1, 2, vec![1.0], |_, _| 2.5)));
        let s = grow(3, &picks);
        let v = est.misc_estimate(&s).unwrap();
        prop_assert!((v - 2.5).abs() < 1e-13);
    }
}

#[test]
fn rectangles_telescope() {
    let est = toy(1, 2);
    for a in 1..=3 {
        for b1 in 1..=3 {
            for b2 in 1..=3 {
                let corner = mi(&[a, b1, b2]);
                let rect = IndexSet::rectangle(&corner).unwrap();
                let m = est.full_tensor_value(&[a], &[b1, b2]).unwrap();
                let v = est.misc_estimate(&rect).unwrap();
                assert!((v - m).abs() <= 1e-12 * m.abs());
                let by_details: f64 = rect.iter().map(|i| est.delta_mix(i).unwrap()).sum();
                assert!((by_details - m).abs() <= 1e-12 * m.abs());
            }
        }
    }
}

#[test]
fn full_tensor_matches_direct_node_loop() {
    let f = |a: u32, y: f64| (0.7 * y).sin() + y * y + (-(a as f64)).exp2();
    let est = Estimator::new(Arc::new(FnBackend::new(1, 1, vec![1.0], move |a, y| f(a[0], y[0]))));
    for a in 1..=3 {
        for b in 1..=5 {
            let direct: f64 = cc_nodes(b)
                .iter()
                .zip(cc_weights(b))
                .map(|(y, w)| w * f(a, *y))
                .sum();
            let v = est.full_tensor_value(&[a], &[b]).unwrap();
            assert!((v - direct).abs() < 1e-14, "a={a} b={b}");
        }
    }
    assert_eq!(est.full_tensor_value(&[0], &[3]).unwrap(), 0.0);
    assert_eq!(est.full_tensor_value(&[2], &[0]).unwrap(), 0.0);
}

#[test]
fn detail_expansions() {
    let est = toy(1, 1);
    let m = |a, b| est.full_tensor_value(&[a], &[b]).unwrap();
    assert_eq!(est.delta_mix(&mi(&[1, 1])).unwrap(), m(1, 1));
    let four = m(2, 2) - m(1, 2) - m(2, 1) + m(1, 1);
    assert!((est.delta_mix(&mi(&[2, 2])).unwrap() - four).abs() < 1e-15);
    assert!(est.delta_mix(&mi(&[0, 1])).is_err());
}

#[test]
fn constant_integrand_is_independent_of_beta() {
    let est = Estimator::new(Arc::new(FnBackend::new(2, 2, vec![1.0; 2], |a, _| {
        1.0 / (a[0] + a[1]) as f64
    })));
    let m = est.full_tensor_value(&[2, 1], &[1, 1]).unwrap();
    for b in [[2, 1], [3, 4], [5, 2]] {
        assert!((est.full_tensor_value(&[2, 1], &b).unwrap() - m).abs() < 1e-15);
        assert!(est.error_contribution(&mi(&[2, 1, b[0], b[1]])).unwrap() < 1e-15);
    }
}

#[test]
fn cache_never_recomputes_and_credits_nested_nodes() {
    let est = toy(1, 2);
    let mut s = IndexSet::root(3);
    let mut seen = 0;
    for picks in [[0usize, 1, 2], [2, 0, 1], [1, 1, 0]] {
        for p in picks {
            let red = s.reduced_margin();
            s.extend([red[p % red.len()].clone()]).unwrap();
        }
        est.misc_estimate(&s).unwrap();
        for i in s.iter() {
            est.delta_mix(i).unwrap();
        }
        assert_eq!(est.cache().computations(), est.cache().len());
        assert!(est.cache().len() >= seen);
        seen = est.cache().len();
        let expected: usize = solves_by_alpha(&s, 1).iter().map(|(_, n)| n).sum();
        assert_eq!(est.cache().total_solves(), expected);
    }
    let before = est.cache().computations();
    est.misc_estimate(&s).unwrap();
    assert_eq!(est.cache().computations(), before);
}

#[test]
fn new_point_counts() {
    assert_eq!(new_points(&[1]), 1);
    assert_eq!(new_points(&[2]), 2);
    assert_eq!(new_points(&[3]), 2);
    assert_eq!(new_points(&[4]), 4);
    assert_eq!(new_points(&[3, 4, 1]), 8);
}

struct Failing;

impl Backend for Failing {
    fn spatial_dim(&self) -> usize {
        1
    }
    fn stochastic_dim(&self) -> usize {
        1
    }
    fn solve(&self, _: &[u32], y: &[f64]) -> crate::Result<SampleValue> {
        if y[0] > 0.5 {
            Ok(SampleValue { value: f64::NAN, cost: 1.0 })
        } else {
            Ok(SampleValue { value: 1.0, cost: 1.0 })
        }
    }
}

#[test]
fn failures_carry_the_index_and_node() {
    let est = Estimator::new(Arc::new(Failing));
    assert!(est.full_tensor_value(&[1], &[1]).is_ok());
    match est.full_tensor_value(&[2], &[2]) {
        Err(Error::Estimator { alpha, beta, node, source }) => {
            assert_eq!(alpha, vec![2]);
            assert_eq!(beta, vec![2]);
            assert_eq!(node, vec![1.0]);
            assert!(matches!(*source, Error::NonFinite { .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
}
