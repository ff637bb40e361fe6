//! Univariate B-spline spaces: knot vectors, Cox–De Boor evaluation,
//! derivatives, continuity queries and dyadic (optionally graded) refinement.

use crate::error::{arg, domain, Result};

/// Non-decreasing knot vector on `[0, 1]` together with the spline degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

/// Nonzero basis functions at a point: `values[j]` belongs to basis function
/// `span - degree + j`. `derivatives[k - 1]` holds the k-th derivative row.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub span_index: usize,
    pub values: Vec<f64>,
    pub derivatives: Vec<Vec<f64>>,
}

impl BasisValues {
    /// Index of the first nonzero basis function.
    pub fn first_function(&self) -> usize {
        self.span_index + 1 - self.values.len()
    }
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if degree < 1 {
            return arg("spline degree must be at least 1");
        }
        if knots.len() < 2 * degree + 2 {
            return arg(format!(
                "{} knots cannot carry degree {} (need at least {})",
                knots.len(),
                degree,
                2 * degree + 2
            ));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return arg("knots must be finite");
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return arg("knots must be non-decreasing");
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
            return arg("knot vector must start at 0 and end at 1");
        }
        let kv = Self { knots, degree };
        if let Some(m) = kv.multiplicities().into_iter().max() {
            if m > degree + 1 {
                return arg(format!("knot multiplicity {m} exceeds degree + 1"));
            }
        }
        Ok(kv)
    }

    /// Open knot vector with `n_elements` uniform elements and maximal continuity.
    pub fn open_uniform(degree: usize, n_elements: usize) -> Result<Self> {
        if n_elements == 0 {
            return arg("need at least one element");
        }
        let breaks: Vec<f64> = (0..=n_elements)
            .map(|j| j as f64 / n_elements as f64)
            .collect();
        Self::from_breakpoints(degree, &breaks, &[])
    }

    /// Open knot vector from unique breakpoints; `interior_multiplicity[j]`
    /// applies to breakpoint `j + 1` (default 1).
    pub fn from_breakpoints(
        degree: usize,
        breakpoints: &[f64],
        interior_multiplicity: &[usize],
    ) -> Result<Self> {
        if breakpoints.len() < 2 {
            return arg("need at least two breakpoints");
        }
        let mut knots = vec![breakpoints[0]; degree + 1];
        let last = breakpoints.len() - 1;
        for (j, &b) in breakpoints[1..last].iter().enumerate() {
            let m = interior_multiplicity.get(j).copied().unwrap_or(1);
            knots.extend(std::iter::repeat_n(b, m));
        }
        knots.extend(std::iter::repeat_n(breakpoints[last], degree + 1));
        Self::new(knots, degree)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions `n = len - p - 1`.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn is_open(&self) -> bool {
        let m = self.multiplicities();
        m[0] == self.degree + 1 && m[m.len() - 1] == self.degree + 1
    }

    /// Distinct knot values in increasing order.
    pub fn unique_knots(&self) -> Vec<f64> {
        let mut z = self.knots.clone();
        z.dedup();
        z
    }

    /// Multiplicity of each unique knot (exact comparison).
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for (i, k) in self.knots.iter().enumerate() {
            if i > 0 && *k == self.knots[i - 1] {
                *out.last_mut().unwrap() += 1;
            } else {
                out.push(1);
            }
        }
        out
    }

    pub fn multiplicity_of(&self, value: f64) -> usize {
        self.knots.iter().filter(|&&k| k == value).count()
    }

    pub fn num_elements(&self) -> usize {
        self.unique_knots().len() - 1
    }

    /// Mesh size when all elements have equal length (up to 1e-14).
    pub fn mesh_size(&self) -> Option<f64> {
        let z = self.unique_knots();
        let h = z[1] - z[0];
        z.windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() < 1e-14)
            .then_some(h)
    }

    /// Nonempty elements as `(left, right, span)`.
    pub fn elements(&self) -> Vec<(f64, f64, usize)> {
        (0..self.knots.len() - 1)
            .filter(|&i| self.knots[i] < self.knots[i + 1])
            .map(|i| (self.knots[i], self.knots[i + 1], i))
            .collect()
    }

    /// Index `i` with `knots[i] <= xi < knots[i + 1]`; at `xi = 1` the last
    /// nonempty element is returned.
    pub fn find_span(&self, xi: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&xi) {
            return domain(format!("parameter {xi} outside [0, 1]"));
        }
        let last_nonempty = (0..self.knots.len() - 1)
            .rev()
            .find(|&i| self.knots[i] < self.knots[i + 1])
            .expect("validated knot vector has a nonempty element");
        if xi >= 1.0 {
            return Ok(last_nonempty);
        }
        let i = self.knots.partition_point(|&k| k <= xi) - 1;
        Ok(i.min(last_nonempty))
    }

    /// Nonzero basis values at `xi` via the Cox–De Boor triangle.
    pub fn eval_basis(&self, xi: f64) -> Result<BasisValues> {
        self.check_open()?;
        let span = self.find_span(xi)?;
        Ok(BasisValues {
            span_index: span,
            values: basis_funs(&self.knots, self.degree, span, xi),
            derivatives: Vec::new(),
        })
    }

    /// Basis values plus derivative rows up to `order`.
    pub fn eval_basis_derivatives(&self, xi: f64, order: usize) -> Result<BasisValues> {
        if order > self.degree {
            return arg(format!(
                "derivative order {order} exceeds degree {}",
                self.degree
            ));
        }
        self.check_open()?;
        let span = self.find_span(xi)?;
        let mut rows = ders_basis_funs(&self.knots, self.degree, span, xi, order);
        let values = rows.remove(0);
        Ok(BasisValues {
            span_index: span,
            values,
            derivatives: rows,
        })
    }

    /// Continuity class `p - m` at a unique interior knot (`-1` = discontinuous).
    pub fn continuity_at(&self, zeta: f64) -> Result<i64> {
        let z = self.unique_knots();
        if !z[1..z.len() - 1].contains(&zeta) {
            return arg(format!("{zeta} is not an interior knot"));
        }
        Ok(self.degree as i64 - self.multiplicity_of(zeta) as i64)
    }

    fn check_open(&self) -> Result<()> {
        if self.is_open() {
            Ok(())
        } else {
            arg("basis evaluation requires an open knot vector")
        }
    }
}

/// Open knot vector with `2^level` elements. Breakpoints are the dyadic grid
/// `j / 2^level` pushed through the symmetric power law
/// `t -> 0.5 (2t)^g` on `[0, 0.5]` (mirrored on `[0.5, 1]`).
pub fn refined_knot_vector(degree: usize, level: u32, grading_exponent: f64) -> Result<KnotVector> {
    if level < 1 {
        return arg("refinement level must be at least 1");
    }
    if level > 30 {
        return arg("refinement level too large");
    }
    if !(grading_exponent >= 1.0) || !grading_exponent.is_finite() {
        return arg("grading exponent must be a finite real >= 1");
    }
    let n = 1usize << level;
    let breaks: Vec<f64> = (0..=n)
        .map(|j| graded_breakpoint(j as f64 / n as f64, grading_exponent))
        .collect();
    KnotVector::from_breakpoints(degree, &breaks, &[])
}

fn graded_breakpoint(t: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        return t;
    }
    let pow = |s: f64| {
        if gamma.fract() == 0.0 && gamma <= 32.0 {
            s.powi(gamma as i32)
        } else {
            s.powf(gamma)
        }
    };
    if t <= 0.5 {
        0.5 * pow(2.0 * t)
    } else {
        1.0 - 0.5 * pow(2.0 * (1.0 - t))
    }
}

/// Nonzero basis functions of degree `p` on `span` (NURBS Book A2.2).
pub(crate) fn basis_funs(knots: &[f64], p: usize, span: usize, u: f64) -> Vec<f64> {
    let mut n = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Basis functions and derivatives up to `order` (NURBS Book A2.3).
/// Row `k` of the result is the k-th derivative.
pub(crate) fn ders_basis_funs(
    knots: &[f64],
    p: usize,
    span: usize,
    u: f64,
    order: usize,
) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = if ndu[j][r] == 0.0 { 0.0 } else { ndu[r][j - 1] / ndu[j][r] };
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let order = order.min(p);
    let mut ders = vec![vec![0.0; p + 1]; order + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let inv = |x: f64| if x == 0.0 { 0.0 } else { 1.0 / x };
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=order {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if rk >= 0 {
                let rk = rk as usize;
                a[s2][0] = a[s1][0] * inv(ndu[pk + 1][rk]);
                d = a[s2][0] * ndu[rk][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) * inv(ndu[pk + 1][idx]);
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] * inv(ndu[pk + 1][r]);
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=order {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}
