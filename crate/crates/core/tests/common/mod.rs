//! Exact rational polynomials and B-spline pieces for oracle checks.

#![allow(dead_code)]

use num_rational::Rational64;
use num_traits::{One, Zero};

pub type Q = Rational64;

/// Monomial coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<Q>);

impl Poly {
    pub fn constant(c: Q) -> Self {
        Poly(vec![c])
    }

    /// `(x - a) * s`
    pub fn linear(a: Q, s: Q) -> Self {
        Poly(vec![-a * s, s])
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly(
            (0..n)
                .map(|i| {
                    self.0.get(i).copied().unwrap_or_else(Q::zero)
                        + o.0.get(i).copied().unwrap_or_else(Q::zero)
                })
                .collect(),
        )
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![Q::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn deriv(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::constant(Q::zero());
        }
        Poly(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| c * Q::from_integer(i as i64 + 1))
                .collect(),
        )
    }

    pub fn eval(&self, x: Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    pub fn integrate(&self, a: Q, b: Q) -> Q {
        let mut s = Q::zero();
        let (mut pa, mut pb) = (a, b);
        for (i, c) in self.0.iter().enumerate() {
            let k = Q::from_integer(i as i64 + 1);
            s += c * (pb - pa) / k;
            pa *= a;
            pb *= b;
        }
        s
    }
}

/// Exact rational from a dyadic float.
pub fn q(x: f64) -> Q {
    let scale = 1i64 << 40;
    let n = (x * scale as f64).round();
    assert_eq!(n / scale as f64, x, "{x} is not a 40-bit dyadic");
    Q::new(n as i64, scale)
}

/// Polynomial pieces on `[knots[span], knots[span + 1])` of all degree-`p`
/// B-splines, by the Cox-De Boor recursion with `0/0 = 0`.
pub fn bspline_pieces(knots: &[Q], p: usize, span: usize) -> Vec<Poly> {
    let m = knots.len() - 1;
    let mut n: Vec<Poly> = (0..m)
        .map(|i| Poly::constant(if i == span { Q::one() } else { Q::zero() }))
        .collect();
    for deg in 1..=p {
        n = (0..m - deg)
            .map(|i| {
                let mut out = Poly::constant(Q::zero());
                let d1 = knots[i + deg] - knots[i];
                if !d1.is_zero() {
                    out = out.add(&Poly::linear(knots[i], Q::one() / d1).mul(&n[i]));
                }
                let d2 = knots[i + deg + 1] - knots[i + 1];
                if !d2.is_zero() {
                    out = out.add(&Poly::linear(knots[i + deg + 1], -Q::one() / d2).mul(&n[i + 1]));
                }
                out
            })
            .collect();
    }
    n
}
