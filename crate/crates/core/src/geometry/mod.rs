//! Tensor-product B-spline / NURBS patches `G: [0,1]^d -> R^d`, their
//! Jacobians, refinement by knot insertion and Bezier degree elevation.

mod builtin;
mod io;
mod space;

pub use builtin::{affine_box, quarter_annulus, thick_quarter_ring, unit_square};
pub use space::{make_space, DiscretizationSpace};

use nalgebra::DMatrix;

use crate::error::{arg, domain, Error, Result};
use crate::gauss::gauss_legendre_unit;
use crate::splines::KnotVector;

/// Control net over a tensor-product spline space. Control points are stored
/// row-major by multi-index (last parametric direction fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    knot_vectors: Vec<KnotVector>,
    control_points: Vec<f64>,
    weights: Option<Vec<f64>>,
}

/// Rational basis functions that are nonzero at one parametric point.
#[derive(Debug, Clone)]
pub(crate) struct LocalBasis {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 3]>,
}

impl Patch {
    /// `control_points` holds one `d`-vector per basis function.
    pub fn new(
        knot_vectors: Vec<KnotVector>,
        control_points: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let d = knot_vectors.len();
        if !(2..=3).contains(&d) {
            return arg(format!("patch dimension {d} not in {{2, 3}}"));
        }
        if knot_vectors.iter().any(|kv| !kv.is_open()) {
            return arg("patch knot vectors must be open");
        }
        let n: usize = knot_vectors.iter().map(KnotVector::num_basis).product();
        if control_points.len() != n {
            return arg(format!(
                "expected {n} control points, got {}",
                control_points.len()
            ));
        }
        if control_points.iter().any(|p| p.len() != d) {
            return arg(format!("control points must have {d} coordinates"));
        }
        if control_points.iter().flatten().any(|c| !c.is_finite()) {
            return arg("control points must be finite");
        }
        if let Some(w) = &weights {
            if w.len() != n {
                return arg(format!("expected {n} weights, got {}", w.len()));
            }
            if w.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
                return arg("NURBS weights must be strictly positive");
            }
        }
        Ok(Self {
            knot_vectors,
            control_points: control_points.into_iter().flatten().collect(),
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.knot_vectors.len()
    }

    pub fn knot_vectors(&self) -> &[KnotVector] {
        &self.knot_vectors
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.knot_vectors.iter().map(KnotVector::degree).collect()
    }

    /// Number of basis functions per direction.
    pub fn shape(&self) -> Vec<usize> {
        self.knot_vectors.iter().map(KnotVector::num_basis).collect()
    }

    pub fn num_control_points(&self) -> usize {
        self.control_points.len() / self.dim()
    }

    pub fn control_point(&self, flat: usize) -> &[f64] {
        let d = self.dim();
        &self.control_points[flat * d..(flat + 1) * d]
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, flat: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[flat])
    }

    pub fn is_rational(&self) -> bool {
        self.weights.is_some()
    }

    /// Row-major strides of the control net.
    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape())
    }

    fn check_point(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return arg(format!(
                "parametric point has {} coordinates, patch dimension is {}",
                xi.len(),
                self.dim()
            ));
        }
        if xi.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return domain(format!("parametric point {xi:?} outside the unit cube"));
        }
        Ok(())
    }

    /// Rational (or polynomial) tensor basis and parametric gradients at `xi`.
    pub(crate) fn local_basis(&self, xi: &[f64]) -> Result<LocalBasis> {
        self.check_point(xi)?;
        let d = self.dim();
        let per_dir = self
            .knot_vectors
            .iter()
            .zip(xi)
            .map(|(kv, &x)| kv.eval_basis_derivatives(x, 1))
            .collect::<Result<Vec<_>>>()?;
        let counts: Vec<usize> = per_dir.iter().map(|b| b.values.len()).collect();
        let total: usize = counts.iter().product();
        let st = self.strides();

        let mut indices = Vec::with_capacity(total);
        let mut b = Vec::with_capacity(total);
        let mut db = Vec::with_capacity(total);
        let mut w_sum = 0.0;
        let mut dw = [0.0; 3];
        let mut local = vec![0usize; d];
        for _ in 0..total {
            let mut flat = 0;
            let mut value = 1.0;
            let mut grad = [1.0; 3];
            for k in 0..d {
                let bv = &per_dir[k];
                flat += (bv.first_function() + local[k]) * st[k];
                value *= bv.values[local[k]];
                for (l, g) in grad.iter_mut().enumerate().take(d) {
                    *g *= if l == k {
                        bv.derivatives[0][local[k]]
                    } else {
                        bv.values[local[k]]
                    };
                }
            }
            let w = self.weight(flat);
            value *= w;
            for g in grad.iter_mut().take(d) {
                *g *= w;
            }
            w_sum += value;
            for l in 0..d {
                dw[l] += grad[l];
            }
            indices.push(flat);
            b.push(value);
            db.push(grad);
            increment(&mut local, &counts);
        }
        let values: Vec<f64> = b.iter().map(|v| v / w_sum).collect();
        let grads = b
            .iter()
            .zip(&db)
            .map(|(&v, g)| {
                let mut out = [0.0; 3];
                for l in 0..d {
                    out[l] = (g[l] * w_sum - v * dw[l]) / (w_sum * w_sum);
                }
                out
            })
            .collect();
        Ok(LocalBasis {
            indices,
            values,
            grads,
        })
    }

    /// Physical image `G(xi)`.
    pub fn map_point(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let lb = self.local_basis(xi)?;
        let d = self.dim();
        let mut x = vec![0.0; d];
        for (&i, &r) in lb.indices.iter().zip(&lb.values) {
            for (k, xk) in x.iter_mut().enumerate() {
                *xk += r * self.control_points[i * d + k];
            }
        }
        Ok(x)
    }

    /// Jacobian `dx_k / dxi_l` at `xi`; fails when `|det J| < 1e-14`.
    pub fn jacobian(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        let jac = self.jacobian_unchecked(xi)?;
        let det = jac.determinant();
        if det.abs() < 1e-14 {
            return Err(Error::GeometryDegenerate(format!(
                "Jacobian determinant {det:e} at {xi:?}"
            )));
        }
        Ok(jac)
    }

    fn jacobian_unchecked(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        let lb = self.local_basis(xi)?;
        let d = self.dim();
        let mut jac = DMatrix::zeros(d, d);
        for (&i, g) in lb.indices.iter().zip(&lb.grads) {
            for k in 0..d {
                let p = self.control_points[i * d + k];
                for l in 0..d {
                    jac[(k, l)] += p * g[l];
                }
            }
        }
        Ok(jac)
    }

    /// Measure of the image, integrating `|det J|` with `n_gauss` points per
    /// direction on every knot span.
    pub fn measure(&self, n_gauss: usize) -> Result<f64> {
        let (gx, gw) = gauss_legendre_unit(n_gauss);
        let d = self.dim();
        let elems: Vec<Vec<(f64, f64, usize)>> =
            self.knot_vectors.iter().map(KnotVector::elements).collect();
        let counts: Vec<usize> = elems.iter().map(|e| e.len() * n_gauss).collect();
        let total: usize = counts.iter().product();
        let mut local = vec![0usize; d];
        let mut acc = 0.0;
        let mut xi = vec![0.0; d];
        for _ in 0..total {
            let mut w = 1.0;
            for k in 0..d {
                let (a, b, _) = elems[k][local[k] / n_gauss];
                let q = local[k] % n_gauss;
                xi[k] = a + (b - a) * gx[q];
                w *= (b - a) * gw[q];
            }
            acc += w * self.jacobian_unchecked(&xi)?.determinant().abs();
            increment(&mut local, &counts);
        }
        Ok(acc)
    }

    /// Parametric preimage of a physical point by damped Newton iteration.
    pub fn inverse_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if x.len() != d {
            return arg("physical point has the wrong dimension");
        }
        // coarse search for a start point
        let samples = 8usize;
        let counts = vec![samples + 1; d];
        let total: usize = counts.iter().product();
        let mut local = vec![0usize; d];
        let mut best = (f64::INFINITY, vec![0.5; d]);
        for _ in 0..total {
            let xi: Vec<f64> = local.iter().map(|&i| i as f64 / samples as f64).collect();
            let y = self.map_point(&xi)?;
            let dist: f64 = y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
            if dist < best.0 {
                best = (dist, xi);
            }
            increment(&mut local, &counts);
        }
        let mut xi = best.1;
        for _ in 0..100 {
            let y = self.map_point(&xi)?;
            let res = nalgebra::DVector::from_iterator(d, y.iter().zip(x).map(|(a, b)| a - b));
            if res.norm() < 1e-14 {
                break;
            }
            let jac = self.jacobian(&xi)?;
            let step = jac
                .lu()
                .solve(&res)
                .ok_or_else(|| Error::GeometryDegenerate("singular Jacobian in inversion".into()))?;
            for k in 0..d {
                xi[k] = (xi[k] - step[k]).clamp(0.0, 1.0);
            }
            if step.norm() < 1e-15 {
                break;
            }
        }
        let y = self.map_point(&xi)?;
        let err: f64 = y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if err > 1e-9 * scale {
            return domain(format!("point {x:?} lies outside the patch image"));
        }
        Ok(xi)
    }

    fn homogeneous_net(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..self.num_control_points())
            .map(|i| {
                let w = self.weight(i);
                let mut h: Vec<f64> = self.control_point(i).iter().map(|c| c * w).collect();
                h.push(w);
                h
            })
            .collect::<Vec<_>>()
            .into_iter()
            .inspect(|h| debug_assert_eq!(h.len(), d + 1))
            .collect()
    }

    fn from_homogeneous(
        knot_vectors: Vec<KnotVector>,
        net: Vec<Vec<f64>>,
        rational: bool,
    ) -> Result<Self> {
        let d = knot_vectors.len();
        let mut weights = Vec::with_capacity(net.len());
        let points = net
            .into_iter()
            .map(|h| {
                let w = h[d];
                weights.push(w);
                h[..d].iter().map(|c| c / w).collect()
            })
            .collect();
        Patch::new(knot_vectors, points, rational.then_some(weights))
    }

    /// Insert `u` once in direction `dir` (Boehm's algorithm on the
    /// homogeneous net); the mapped geometry is unchanged.
    pub fn insert_knot(&self, dir: usize, u: f64) -> Result<Self> {
        let kv = &self.knot_vectors[dir];
        if !(0.0 < u && u < 1.0) {
            return arg(format!("cannot insert knot {u} outside (0, 1)"));
        }
        let p = kv.degree();
        if kv.multiplicity_of(u) >= p {
            return arg(format!("knot {u} already has multiplicity {p}"));
        }
        let knots = kv.knots();
        let k = kv.find_span(u)?;
        let mut new_knots = knots.to_vec();
        new_knots.insert(k + 1, u);
        let alphas: Vec<f64> = (0..=kv.num_basis())
            .map(|i| {
                if i + p <= k {
                    1.0
                } else if i > k {
                    0.0
                } else {
                    (u - knots[i]) / (knots[i + p] - knots[i])
                }
            })
            .collect();
        let n_old = kv.num_basis();
        let net = map_lines(&self.homogeneous_net(), &self.shape(), dir, n_old + 1, |line| {
            (0..=n_old)
                .map(|i| {
                    let a = alphas[i];
                    if i == 0 {
                        line[0].clone()
                    } else if i == n_old {
                        line[n_old - 1].clone()
                    } else {
                        line[i]
                            .iter()
                            .zip(&line[i - 1])
                            .map(|(q, r)| a * q + (1.0 - a) * r)
                            .collect()
                    }
                })
                .collect()
        });
        let mut kvs = self.knot_vectors.clone();
        kvs[dir] = KnotVector::new(new_knots, p)?;
        Self::from_homogeneous(kvs, net, self.is_rational())
    }

    /// Refine by knot insertion until every direction carries `targets[k]`.
    /// Each target must contain the current knots (as a multiset).
    pub fn refine_to(&self, targets: &[KnotVector]) -> Result<Self> {
        if targets.len() != self.dim() {
            return arg("one target knot vector per direction required");
        }
        let mut patch = self.clone();
        for (dir, target) in targets.iter().enumerate() {
            let current = &self.knot_vectors[dir];
            if target.degree() != current.degree() {
                return arg("refinement target has a different degree");
            }
            let mut missing = Vec::new();
            for z in target.unique_knots() {
                let have = current.multiplicity_of(z);
                let want = target.multiplicity_of(z);
                if have > want {
                    return arg(format!(
                        "target knot vector drops knot {z} in direction {dir}"
                    ));
                }
                missing.extend(std::iter::repeat_n(z, want - have));
            }
            for u in missing {
                patch = patch.insert_knot(dir, u)?;
            }
        }
        Ok(patch)
    }

    /// Raise the degree of a single-element direction by one (Bezier
    /// degree elevation on the homogeneous net).
    pub(crate) fn elevate_bezier(&self, dir: usize) -> Result<Self> {
        let kv = &self.knot_vectors[dir];
        if kv.num_elements() != 1 {
            return arg(format!(
                "degree elevation only supported for single-element directions (direction {dir} has {})",
                kv.num_elements()
            ));
        }
        let p = kv.degree();
        let net = map_lines(&self.homogeneous_net(), &self.shape(), dir, p + 2, |line| {
            (0..=p + 1)
                .map(|i| {
                    let a = i as f64 / (p + 1) as f64;
                    let lo = if i > 0 { Some(&line[i - 1]) } else { None };
                    let hi = if i <= p { Some(&line[i]) } else { None };
                    match (lo, hi) {
                        (Some(l), Some(h)) => l
                            .iter()
                            .zip(h)
                            .map(|(l, h)| a * l + (1.0 - a) * h)
                            .collect(),
                        (None, Some(h)) => h.clone(),
                        (Some(l), None) => l.clone(),
                        (None, None) => unreachable!(),
                    }
                })
                .collect()
        });
        let mut kvs = self.knot_vectors.clone();
        kvs[dir] = KnotVector::open_uniform(p + 1, 1)?;
        Self::from_homogeneous(kvs, net, self.is_rational())
    }

    /// Elevate every direction below `degree` up to it.
    pub fn elevate_to(&self, degree: usize) -> Result<Self> {
        let mut patch = self.clone();
        for dir in 0..self.dim() {
            let current = patch.knot_vectors[dir].degree();
            if current > degree {
                return arg(format!(
                    "geometry degree {current} in direction {dir} exceeds requested degree {degree}"
                ));
            }
            for _ in current..degree {
                patch = patch.elevate_bezier(dir)?;
            }
        }
        Ok(patch)
    }

    /// Sign of det J over a uniform `samples^d` grid of interior points;
    /// `None` if the sign changes or vanishes.
    pub fn jacobian_sign(&self, samples: usize) -> Result<Option<f64>> {
        let d = self.dim();
        let counts = vec![samples; d];
        let total: usize = counts.iter().product();
        let mut local = vec![0usize; d];
        let mut sign = None;
        for _ in 0..total {
            let xi: Vec<f64> = local
                .iter()
                .map(|&i| (i as f64 + 0.5) / samples as f64)
                .collect();
            let det = self.jacobian_unchecked(&xi)?.determinant();
            let s = det.signum();
            if det == 0.0 || sign.is_some_and(|t| t != s) {
                return Ok(None);
            }
            sign = Some(s);
            increment(&mut local, &counts);
        }
        Ok(sign)
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut st = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        st[k] = st[k + 1] * shape[k + 1];
    }
    st
}

/// Odometer increment over a box, last index fastest.
pub(crate) fn increment(idx: &mut [usize], counts: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < counts[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Apply `f` to every line of the net along `dir`, producing lines of length `new_len`.
fn map_lines(
    net: &[Vec<f64>],
    shape: &[usize],
    dir: usize,
    new_len: usize,
    f: impl Fn(&[Vec<f64>]) -> Vec<Vec<f64>>,
) -> Vec<Vec<f64>> {
    let mut new_shape = shape.to_vec();
    new_shape[dir] = new_len;
    let old_st = strides(shape);
    let new_st = strides(&new_shape);
    let mut out = vec![Vec::new(); new_shape.iter().product()];
    let mut other = shape.to_vec();
    other[dir] = 1;
    let total: usize = other.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..total {
        let base_old: usize = idx.iter().zip(&old_st).map(|(i, s)| i * s).sum();
        let base_new: usize = idx.iter().zip(&new_st).map(|(i, s)| i * s).sum();
        let line: Vec<Vec<f64>> = (0..shape[dir])
            .map(|j| net[base_old + j * old_st[dir]].clone())
            .collect();
        for (j, v) in f(&line).into_iter().enumerate() {
            out[base_new + j * new_st[dir]] = v;
        }
        increment(&mut idx, &other);
    }
    out
}
