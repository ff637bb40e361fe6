//! Isogeometric Galerkin solver for `-div(a(x, y) grad u) = F` on a single patch.

mod assembly;
mod band;
mod field;

pub use assembly::PreparedSpace;
pub use band::{BandCholesky, BandMatrix};
pub use field::{Coefficient, CoefficientFn, Source, SourceFn, Test1Field};

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::Mutex;

use crate::error::{arg, domain, Result};
use crate::geometry::{make_space, DiscretizationSpace, Patch};

/// Boundary condition on one face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Per-face conditions; `faces[k] = [at xi_k = 0, at xi_k = 1]`.
/// Dirichlet data is homogeneous and Neumann data is zero flux.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundary {
    pub faces: Vec<[BoundaryKind; 2]>,
}

impl Boundary {
    pub fn dirichlet(dim: usize) -> Self {
        Self {
            faces: vec![[BoundaryKind::Dirichlet; 2]; dim],
        }
    }

    pub fn neumann(dim: usize) -> Self {
        Self {
            faces: vec![[BoundaryKind::Neumann; 2]; dim],
        }
    }
}

/// Quantity of interest extracted from a discrete solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    /// `int_B u dx`
    DomainIntegral,
    /// `u(x0)`
    PointValue(Vec<f64>),
}

/// Value of the functional at one sample, with the deterministic cost of
/// producing it (multiply-adds for assembly and factorization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleValue {
    pub value: f64,
    pub cost: f64,
}

const SPACE_CACHE_LIMIT: usize = 48;

/// Diffusion problem with random coefficient `a(x, y)`, `y` in a box of
/// `stochastic_dim` intervals.
#[derive(Debug, Clone)]
pub struct DiffusionProblem {
    patch: Arc<Patch>,
    coefficient: Coefficient,
    source: Source,
    functional: Functional,
    stochastic_dim: usize,
    parameter_ranges: Vec<(f64, f64)>,
    degree: usize,
    grading: f64,
    boundary: Boundary,
    spaces: Arc<Mutex<HashMap<Vec<u32>, Arc<PreparedSpace>>>>,
}

impl DiffusionProblem {
    /// Full homogeneous Dirichlet boundary and parameters in `[-1, 1]`.
    pub fn new(
        patch: Patch,
        coefficient: Coefficient,
        source: Source,
        functional: Functional,
        stochastic_dim: usize,
        degree: usize,
        grading: f64,
    ) -> Result<Self> {
        if degree == 0 {
            return arg("degree must be at least 1");
        }
        if !(grading >= 1.0) {
            return arg(format!("grading exponent {grading} must be >= 1"));
        }
        if let Functional::PointValue(x0) = &functional {
            if x0.len() != patch.dim() {
                return arg("point functional has the wrong dimension");
            }
        }
        if let Coefficient::Test1(f) = &coefficient {
            if f.num_modes() != stochastic_dim {
                return arg(format!(
                    "field has {} modes but stochastic dimension is {stochastic_dim}",
                    f.num_modes()
                ));
            }
        }
        let d = patch.dim();
        Ok(Self {
            patch: Arc::new(patch),
            coefficient,
            source,
            functional,
            stochastic_dim,
            parameter_ranges: vec![(-1.0, 1.0); stochastic_dim],
            degree,
            grading,
            boundary: Boundary::dirichlet(d),
            spaces: Arc::default(),
        })
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Result<Self> {
        if boundary.faces.len() != self.patch.dim() {
            return arg("boundary needs one entry per direction");
        }
        self.boundary = boundary;
        self.spaces = Arc::default();
        Ok(self)
    }

    /// Physical parameter intervals; samples are given in `[-1, 1]^N` and
    /// mapped affinely before the coefficient is evaluated.
    pub fn with_parameter_ranges(mut self, ranges: Vec<(f64, f64)>) -> Result<Self> {
        if ranges.len() != self.stochastic_dim {
            return arg("one parameter range per stochastic dimension");
        }
        if ranges.iter().any(|(lo, hi)| !(lo < hi)) {
            return arg("parameter ranges must satisfy lo < hi");
        }
        self.parameter_ranges = ranges;
        Ok(self)
    }

    pub fn patch(&self) -> &Patch {
        &self.patch
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.coefficient
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn functional(&self) -> &Functional {
        &self.functional
    }

    pub fn spatial_dim(&self) -> usize {
        self.patch.dim()
    }

    pub fn stochastic_dim(&self) -> usize {
        self.stochastic_dim
    }

    pub fn parameter_ranges(&self) -> &[(f64, f64)] {
        &self.parameter_ranges
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn space(&self, alpha: &[u32]) -> Result<DiscretizationSpace> {
        make_space(&self.patch, alpha, self.degree, self.grading)
    }

    /// Tabulated space for `alpha`, built once and shared.
    pub fn prepared(&self, alpha: &[u32]) -> Result<Arc<PreparedSpace>> {
        if let Some(p) = self.spaces.lock().get(alpha) {
            return Ok(Arc::clone(p));
        }
        let prepared = Arc::new(PreparedSpace::new(
            self.space(alpha)?,
            &self.boundary,
            &self.source,
        )?);
        let mut map = self.spaces.lock();
        if map.len() >= SPACE_CACHE_LIMIT {
            map.clear();
        }
        Ok(Arc::clone(map.entry(alpha.to_vec()).or_insert(prepared)))
    }

    fn physical_parameters(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.stochastic_dim {
            return arg(format!(
                "sample has {} components, expected {}",
                y.len(),
                self.stochastic_dim
            ));
        }
        y.iter()
            .zip(&self.parameter_ranges)
            .map(|(&t, &(lo, hi))| {
                if !(-1.0..=1.0).contains(&t) {
                    domain(format!("sample component {t} outside [-1, 1]"))
                } else {
                    Ok(crate::quadrature::affine_to_interval(t, lo, hi))
                }
            })
            .collect()
    }

    /// Assemble stiffness and load for `space` at sample `y`.
    pub fn assemble(&self, space: &DiscretizationSpace, y: &[f64]) -> Result<(BandMatrix, Vec<f64>)> {
        let prep = PreparedSpace::new(space.clone(), &self.boundary, &self.source)?;
        let mat = prep.stiffness(&self.coefficient, &self.physical_parameters(y)?)?;
        Ok((mat, prep.load.clone()))
    }

    /// Galerkin solution at level `alpha` and sample `y`.
    pub fn solve(&self, alpha: &[u32], y: &[f64]) -> Result<(DiscreteSolution, f64)> {
        let prep = self.prepared(alpha)?;
        let mat = prep.stiffness(&self.coefficient, &self.physical_parameters(y)?)?;
        let substitution = 2.0 * (mat.dim() * (mat.bandwidth() + 1)) as f64;
        let chol = mat.cholesky()?;
        let coefficients = chol.solve(&prep.load);
        let cost = prep.assembly_ops() + chol.flops() + substitution;
        Ok((
            DiscreteSolution {
                prepared: prep,
                coefficients,
            },
            cost,
        ))
    }

    /// `phi_alpha(y)` with its cost.
    pub fn solve_sample(&self, alpha: &[u32], y: &[f64]) -> Result<SampleValue> {
        let (sol, cost) = self.solve(alpha, y)?;
        Ok(SampleValue {
            value: sol.evaluate_functional(&self.functional)?,
            cost,
        })
    }
}

/// Coefficients of a Galerkin solution on the free basis functions.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    prepared: Arc<PreparedSpace>,
    coefficients: Vec<f64>,
}

impl DiscreteSolution {
    /// Wrap a coefficient vector; its length must equal the number of free functions.
    pub fn new(prepared: Arc<PreparedSpace>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != prepared.num_free() {
            return arg(format!(
                "{} coefficients for {} free basis functions",
                coefficients.len(),
                prepared.num_free()
            ));
        }
        Ok(Self {
            prepared,
            coefficients,
        })
    }

    pub fn space(&self) -> &DiscretizationSpace {
        self.prepared.space()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `u_h` at the parametric point `xi`.
    pub fn value_at_parametric(&self, xi: &[f64]) -> Result<f64> {
        let patch = self.prepared.space().patch();
        let lb = patch.local_basis(xi)?;
        let shape = patch.shape();
        let st = patch.strides();
        let mut g = vec![0usize; shape.len()];
        let mut u = 0.0;
        for (&flat, &r) in lb.indices.iter().zip(&lb.values) {
            let mut rem = flat;
            for k in 0..shape.len() {
                g[k] = rem / st[k];
                rem %= st[k];
            }
            if let Some(f) = self.prepared.free_index(&g) {
                u += self.coefficients[f] * r;
            }
        }
        Ok(u)
    }

    pub fn evaluate_functional(&self, functional: &Functional) -> Result<f64> {
        match functional {
            Functional::DomainIntegral => Ok(self
                .coefficients
                .iter()
                .zip(&self.prepared.integral)
                .map(|(c, g)| c * g)
                .sum()),
            Functional::PointValue(x0) => {
                let xi = self.prepared.space().geometry().inverse_map(x0)?;
                self.value_at_parametric(&xi)
            }
        }
    }
}
