//! Galerkin assembly on a tensor-product trial space.
//!
//! Geometry-dependent data at every element quadrature point (physical
//! point, weight times `|det J|`, rational basis values and physical
//! gradients) is tabulated once per space; assembling for a new sample only
//! re-evaluates the coefficient.

use crate::error::{Error, Result};
use crate::gauss::gauss_legendre_unit;
use crate::geometry::{increment, DiscretizationSpace};
use crate::splines::ders_basis_funs;

use super::band::BandMatrix;
use super::{Boundary, BoundaryKind, Coefficient, Source};

/// Box of unconstrained basis functions and their linear numbering.
#[derive(Debug, Clone)]
pub(crate) struct FreeDofs {
    lo: Vec<usize>,
    counts: Vec<usize>,
    strides: Vec<usize>,
    pub n: usize,
}

impl FreeDofs {
    fn new(shape: &[usize], boundary: &Boundary) -> Result<Self> {
        let d = shape.len();
        let mut lo = vec![0; d];
        let mut counts = vec![0; d];
        for k in 0..d {
            let [low, high] = boundary.faces[k];
            let l = usize::from(low == BoundaryKind::Dirichlet);
            let h = usize::from(high == BoundaryKind::Dirichlet);
            if shape[k] < l + h + 1 {
                return Err(Error::Assembly(format!(
                    "no free basis functions left in direction {k}"
                )));
            }
            lo[k] = l;
            counts[k] = shape[k] - l - h;
        }
        // smallest count varies fastest: keeps the band narrow
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by_key(|&k| counts[k]);
        let mut strides = vec![0; d];
        let mut s = 1;
        for &k in &order {
            strides[k] = s;
            s *= counts[k];
        }
        Ok(Self {
            lo,
            counts,
            strides,
            n: s,
        })
    }

    /// Free number of the basis function with multi-index `g`, if unconstrained.
    #[inline]
    pub fn index(&self, g: &[usize]) -> Option<usize> {
        let mut f = 0;
        for k in 0..g.len() {
            if g[k] < self.lo[k] || g[k] >= self.lo[k] + self.counts[k] {
                return None;
            }
            f += (g[k] - self.lo[k]) * self.strides[k];
        }
        Some(f)
    }

    pub fn bandwidth(&self, degree: usize) -> usize {
        degree * self.strides.iter().sum::<usize>()
    }
}

const NONE: usize = usize::MAX;

/// Tabulated quadrature data for one trial space.
#[derive(Debug)]
pub struct PreparedSpace {
    pub(crate) space: DiscretizationSpace,
    pub(crate) free: FreeDofs,
    dim: usize,
    n_loc: usize,
    qp_per_elem: usize,
    n_elem: usize,
    qp_x: Vec<f64>,
    qp_w: Vec<f64>,
    qp_val: Vec<f64>,
    qp_grad: Vec<f64>,
    elem_dofs: Vec<usize>,
    pub(crate) load: Vec<f64>,
    pub(crate) integral: Vec<f64>,
    bandwidth: usize,
}

impl PreparedSpace {
    pub fn new(space: DiscretizationSpace, boundary: &Boundary, source: &Source) -> Result<Self> {
        let d = space.dim();
        let p = space.degree();
        let patch = space.patch();
        let free = FreeDofs::new(&space.shape(), boundary)?;
        let ng = p + 1;
        let (gx, gw) = gauss_legendre_unit(ng);

        // per direction: elements and tabulated (values, derivatives) at Gauss points
        struct Dir {
            elems: Vec<(f64, f64, usize)>,
            vals: Vec<Vec<f64>>,
            ders: Vec<Vec<f64>>,
        }
        let dirs: Vec<Dir> = space
            .knot_vectors()
            .iter()
            .map(|kv| {
                let elems = kv.elements();
                let mut vals = Vec::new();
                let mut ders = Vec::new();
                for &(a, b, span) in &elems {
                    for &t in &gx {
                        let rows = ders_basis_funs(kv.knots(), p, span, a + (b - a) * t, 1);
                        vals.push(rows[0].clone());
                        ders.push(rows[1].clone());
                    }
                }
                Dir { elems, vals, ders }
            })
            .collect();

        let n_loc = (p + 1).pow(d as u32);
        let qp_per_elem = ng.pow(d as u32);
        let elem_counts: Vec<usize> = dirs.iter().map(|dd| dd.elems.len()).collect();
        let n_elem: usize = elem_counts.iter().product();
        let n_qp = n_elem * qp_per_elem;
        let st = patch.strides();

        let mut qp_x = Vec::with_capacity(n_qp * d);
        let mut qp_w = Vec::with_capacity(n_qp);
        let mut qp_val = Vec::with_capacity(n_qp * n_loc);
        let mut qp_grad = Vec::with_capacity(n_qp * n_loc * d);
        let mut elem_dofs = Vec::with_capacity(n_elem * n_loc);
        let mut load = vec![0.0; free.n];
        let mut integral = vec![0.0; free.n];

        let loc_counts = vec![p + 1; d];
        let q_counts = vec![ng; d];
        let mut e_idx = vec![0usize; d];
        let mut flat_basis = vec![0usize; n_loc];
        let mut b = vec![0.0; n_loc];
        let mut db = vec![[0.0f64; 3]; n_loc];
        let mut g = vec![0usize; d];
        for _ in 0..n_elem {
            // local -> global numbering
            let mut a_idx = vec![0usize; d];
            for slot in 0..n_loc {
                let mut flat = 0;
                for k in 0..d {
                    let span = dirs[k].elems[e_idx[k]].2;
                    g[k] = span - p + a_idx[k];
                    flat += g[k] * st[k];
                }
                flat_basis[slot] = flat;
                elem_dofs.push(free.index(&g).unwrap_or(NONE));
                increment(&mut a_idx, &loc_counts);
            }

            let mut q_idx = vec![0usize; d];
            for _ in 0..qp_per_elem {
                let mut w_ref = 1.0;
                let mut row = [0usize; 3];
                for k in 0..d {
                    let (lo, hi, _) = dirs[k].elems[e_idx[k]];
                    w_ref *= (hi - lo) * gw[q_idx[k]];
                    row[k] = e_idx[k] * ng + q_idx[k];
                }
                // tensor (rational) basis and parametric gradients
                let mut a_idx = vec![0usize; d];
                let mut wsum = 0.0;
                let mut dw = [0.0; 3];
                for slot in 0..n_loc {
                    let wt = patch.weight(flat_basis[slot]);
                    let mut v = wt;
                    let mut gr = [wt; 3];
                    for k in 0..d {
                        let nv = dirs[k].vals[row[k]][a_idx[k]];
                        let nd = dirs[k].ders[row[k]][a_idx[k]];
                        v *= nv;
                        for (l, gl) in gr.iter_mut().enumerate().take(d) {
                            *gl *= if l == k { nd } else { nv };
                        }
                    }
                    b[slot] = v;
                    db[slot] = gr;
                    wsum += v;
                    for l in 0..d {
                        dw[l] += gr[l];
                    }
                    increment(&mut a_idx, &loc_counts);
                }
                let mut x = [0.0; 3];
                let mut jac = [[0.0; 3]; 3];
                let rbase = qp_val.len();
                let mut dr = vec![[0.0f64; 3]; n_loc];
                for slot in 0..n_loc {
                    let r = b[slot] / wsum;
                    for l in 0..d {
                        dr[slot][l] = (db[slot][l] * wsum - b[slot] * dw[l]) / (wsum * wsum);
                    }
                    let cp = patch.control_point(flat_basis[slot]);
                    for k in 0..d {
                        x[k] += r * cp[k];
                        for l in 0..d {
                            jac[k][l] += cp[k] * dr[slot][l];
                        }
                    }
                    qp_val.push(r);
                }
                let (det, inv) = invert(&jac, d);
                if det.abs() < 1e-14 {
                    return Err(Error::GeometryDegenerate(format!(
                        "Jacobian determinant {det:e} at a quadrature point"
                    )));
                }
                let w = w_ref * det.abs();
                for slot in 0..n_loc {
                    for k in 0..d {
                        let mut s = 0.0;
                        for l in 0..d {
                            s += inv[l][k] * dr[slot][l];
                        }
                        qp_grad.push(s);
                    }
                }
                let f = source.value(&x[..d]);
                let ebase = elem_dofs.len() - n_loc;
                for slot in 0..n_loc {
                    let dof = elem_dofs[ebase + slot];
                    if dof != NONE {
                        let r = qp_val[rbase + slot];
                        load[dof] += w * f * r;
                        integral[dof] += w * r;
                    }
                }
                qp_x.extend_from_slice(&x[..d]);
                qp_w.push(w);
                increment(&mut q_idx, &q_counts);
            }
            increment(&mut e_idx, &elem_counts);
        }

        let bandwidth = free.bandwidth(p);
        Ok(Self {
            space,
            free,
            dim: d,
            n_loc,
            qp_per_elem,
            n_elem,
            qp_x,
            qp_w,
            qp_val,
            qp_grad,
            elem_dofs,
            load,
            integral,
            bandwidth,
        })
    }

    pub fn space(&self) -> &DiscretizationSpace {
        &self.space
    }

    pub fn num_free(&self) -> usize {
        self.free.n
    }

    pub fn num_quadrature_points(&self) -> usize {
        self.qp_w.len()
    }

    /// Multiply-add count of one stiffness assembly.
    pub fn assembly_ops(&self) -> f64 {
        (self.qp_w.len() * self.n_loc * self.n_loc * self.dim) as f64
    }

    pub(crate) fn free_index(&self, g: &[usize]) -> Option<usize> {
        self.free.index(g)
    }

    /// Stiffness matrix `int a(x, y) grad R_i . grad R_j dx` over free functions.
    pub fn stiffness(&self, coefficient: &Coefficient, y: &[f64]) -> Result<BandMatrix> {
        let d = self.dim;
        let n_loc = self.n_loc;
        let mut mat = BandMatrix::zeros(self.free.n, self.bandwidth);
        let mut ke = vec![0.0; n_loc * n_loc];
        for e in 0..self.n_elem {
            ke.iter_mut().for_each(|v| *v = 0.0);
            for q in e * self.qp_per_elem..(e + 1) * self.qp_per_elem {
                let x = &self.qp_x[q * d..(q + 1) * d];
                let a = coefficient.value(x, y)?;
                if !(a > 0.0) || !a.is_finite() {
                    return Err(Error::Assembly(format!(
                        "diffusion coefficient {a} is not positive at x={x:?}"
                    )));
                }
                let s = a * self.qp_w[q];
                let grads = &self.qp_grad[q * n_loc * d..(q + 1) * n_loc * d];
                for i in 0..n_loc {
                    let gi = &grads[i * d..(i + 1) * d];
                    for j in 0..=i {
                        let gj = &grads[j * d..(j + 1) * d];
                        let mut dot = 0.0;
                        for k in 0..d {
                            dot += gi[k] * gj[k];
                        }
                        ke[i * n_loc + j] += s * dot;
                    }
                }
            }
            let dofs = &self.elem_dofs[e * n_loc..(e + 1) * n_loc];
            for i in 0..n_loc {
                let fi = dofs[i];
                if fi == NONE {
                    continue;
                }
                for j in 0..=i {
                    let fj = dofs[j];
                    if fj == NONE {
                        continue;
                    }
                    let v = ke[i * n_loc + j];
                    if fi >= fj {
                        mat.add_lower(fi, fj, v);
                    } else {
                        mat.add_lower(fj, fi, v);
                    }
                }
            }
        }
        Ok(mat)
    }

    /// Quadrature of `g(x, u_h(x))` over the domain for coefficient vector `c`.
    pub fn integrate_solution(&self, c: &[f64], g: impl Fn(&[f64], f64) -> f64) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for e in 0..self.n_elem {
            let dofs = &self.elem_dofs[e * self.n_loc..(e + 1) * self.n_loc];
            for q in e * self.qp_per_elem..(e + 1) * self.qp_per_elem {
                let vals = &self.qp_val[q * self.n_loc..(q + 1) * self.n_loc];
                let u: f64 = dofs
                    .iter()
                    .zip(vals)
                    .filter(|(f, _)| **f != NONE)
                    .map(|(f, r)| c[*f] * r)
                    .sum();
                acc += self.qp_w[q] * g(&self.qp_x[q * d..(q + 1) * d], u);
            }
        }
        acc
    }

    /// Physical coordinates of every quadrature point.
    pub fn quadrature_points(&self) -> impl Iterator<Item = &[f64]> {
        self.qp_x.chunks(self.dim)
    }
}

fn invert(j: &[[f64; 3]; 3], d: usize) -> (f64, [[f64; 3]; 3]) {
    let mut inv = [[0.0; 3]; 3];
    if d == 2 {
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        inv[0][0] = j[1][1] / det;
        inv[0][1] = -j[0][1] / det;
        inv[1][0] = -j[1][0] / det;
        inv[1][1] = j[0][0] / det;
        (det, inv)
    } else {
        let c00 = j[1][1] * j[2][2] - j[1][2] * j[2][1];
        let c01 = j[1][2] * j[2][0] - j[1][0] * j[2][2];
        let c02 = j[1][0] * j[2][1] - j[1][1] * j[2][0];
        let det = j[0][0] * c00 + j[0][1] * c01 + j[0][2] * c02;
        inv[0][0] = c00 / det;
        inv[1][0] = c01 / det;
        inv[2][0] = c02 / det;
        inv[0][1] = (j[0][2] * j[2][1] - j[0][1] * j[2][2]) / det;
        inv[1][1] = (j[0][0] * j[2][2] - j[0][2] * j[2][0]) / det;
        inv[2][1] = (j[0][1] * j[2][0] - j[0][0] * j[2][1]) / det;
        inv[0][2] = (j[0][1] * j[1][2] - j[0][2] * j[1][1]) / det;
        inv[1][2] = (j[0][2] * j[1][0] - j[0][0] * j[1][2]) / det;
        inv[2][2] = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) / det;
        (det, inv)
    }
}
