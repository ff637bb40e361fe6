mod common;

use std::sync::Arc;

use common::{bspline_pieces, q, Poly, Q};
use misc_iga::geometry::unit_square;
use misc_iga::pde::{Boundary, Coefficient, DiffusionProblem, Functional, Source};
use num_traits::{One, ToPrimitive, Zero};

/// 1D matrices `int w(x) u_i(x) v_j(x) dx` for every pair of basis functions,
/// with `u`, `v` the basis or its derivative.
fn gram(knots: &[Q], p: usize, weight: &Poly, du: bool, dv: bool) -> Vec<Vec<Q>> {
    let n = knots.len() - p - 1;
    let mut m = vec![vec![Q::zero(); n]; n];
    for span in p..n {
        let (a, b) = (knots[span], knots[span + 1]);
        if a == b {
            continue;
        }
        let pieces = bspline_pieces(knots, p, span);
        for i in 0..n {
            for j in 0..n {
                let u = if du { pieces[i].deriv() } else { pieces[i].clone() };
                let v = if dv { pieces[j].deriv() } else { pieces[j].clone() };
                m[i][j] += weight.mul(&u).mul(&v).integrate(a, b);
            }
        }
    }
    m
}

#[test]
fn polynomial_coefficient_assembly_is_exact() {
    // a = 1 + x + 2y
    let one = Poly::constant(Q::one());
    let x = Poly(vec![Q::zero(), Q::one()]);
    for p in 1..=2 {
        for level in 1..=2u32 {
            let prob = DiffusionProblem::new(
                unit_square(),
                Coefficient::Custom(Arc::new(|x, _| 1.0 + x[0] + 2.0 * x[1])),
                Source::Constant(1.0),
                Functional::DomainIntegral,
                0,
                p,
                1.0,
            )
            .unwrap()
            .with_boundary(Boundary::neumann(2))
            .unwrap();
            let space = prob.space(&[level, level]).unwrap();
            let (mat, _) = prob.assemble(&space, &[]).unwrap();

            let knots: Vec<Q> = space.knot_vectors()[0].knots().iter().map(|&k| q(k)).collect();
            let a0 = gram(&knots, p, &one, true, true);
            let a1 = gram(&knots, p, &x, true, true);
            let m0 = gram(&knots, p, &one, false, false);
            let m1 = gram(&knots, p, &x, false, false);
            let n = m0.len();
            let two = Q::from_integer(2);
            for i0 in 0..n {
                for i1 in 0..n {
                    for j0 in 0..n {
                        for j1 in 0..n {
                            // grad_x part then grad_y part, each weighted by 1 + x + 2y
                            let kx = a0[i0][j0] * m0[i1][j1]
                                + a1[i0][j0] * m0[i1][j1]
                                + two * a0[i0][j0] * m1[i1][j1];
                            let ky = m0[i0][j0] * a0[i1][j1]
                                + m1[i0][j0] * a0[i1][j1]
                                + two * m0[i0][j0] * a1[i1][j1];
                            let exact = (kx + ky).to_f64().unwrap();
                            let got = mat.get(i0 + n * i1, j0 + n * j1);
                            assert!(
                                (got - exact).abs() < 1e-13 * (1.0 + exact.abs()),
                                "p={p} level={level} ({i0},{i1})x({j0},{j1}): {got} vs {exact}"
                            );
                        }
                    }
                }
            }
        }
    }
}
