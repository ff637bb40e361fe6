use std::sync::Arc;

use super::Patch;
use crate::error::{arg, Result};
use crate::splines::{refined_knot_vector, KnotVector};

/// Isoparametric trial space at refinement level `alpha`: the geometry,
/// elevated to `degree` and refined by knot insertion so that direction `i`
/// has `2^alpha_i` elements (plus any interior geometry breakpoints).
#[derive(Debug, Clone)]
pub struct DiscretizationSpace {
    geometry: Arc<Patch>,
    refined: Patch,
    alpha: Vec<u32>,
    degree: usize,
    grading: f64,
}

impl DiscretizationSpace {
    pub fn geometry(&self) -> &Patch {
        &self.geometry
    }

    /// Geometry re-expressed on the solution knot vectors; its rational basis
    /// is the trial basis.
    pub fn patch(&self) -> &Patch {
        &self.refined
    }

    pub fn knot_vectors(&self) -> &[KnotVector] {
        self.refined.knot_vectors()
    }

    pub fn alpha(&self) -> &[u32] {
        &self.alpha
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn dim(&self) -> usize {
        self.refined.dim()
    }

    /// Basis functions per direction.
    pub fn shape(&self) -> Vec<usize> {
        self.refined.shape()
    }

    pub fn num_basis(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn elements_per_direction(&self) -> Vec<usize> {
        self.knot_vectors()
            .iter()
            .map(KnotVector::num_elements)
            .collect()
    }
}

/// Build the trial space of level `alpha` (components >= 1) over `patch`.
pub fn make_space(
    patch: &Patch,
    alpha: &[u32],
    degree: usize,
    grading: f64,
) -> Result<DiscretizationSpace> {
    if alpha.len() != patch.dim() {
        return arg(format!(
            "alpha has {} components, patch dimension is {}",
            alpha.len(),
            patch.dim()
        ));
    }
    if alpha.contains(&0) {
        return arg("spatial levels must be at least 1");
    }
    let elevated = patch.elevate_to(degree)?;
    let targets = elevated
        .knot_vectors()
        .iter()
        .zip(alpha)
        .map(|(geo, &a)| merged_target(geo, degree, a, grading))
        .collect::<Result<Vec<_>>>()?;
    let refined = elevated.refine_to(&targets)?;
    Ok(DiscretizationSpace {
        geometry: Arc::new(patch.clone()),
        refined,
        alpha: alpha.to_vec(),
        degree,
        grading,
    })
}

fn merged_target(geo: &KnotVector, degree: usize, level: u32, grading: f64) -> Result<KnotVector> {
    let base = refined_knot_vector(degree, level, grading)?;
    let geo_z = geo.unique_knots();
    let mut breaks = base.unique_knots();
    for z in &geo_z[1..geo_z.len() - 1] {
        if !breaks.contains(z) {
            breaks.push(*z);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let mult: Vec<usize> = breaks[1..breaks.len() - 1]
        .iter()
        .map(|&z| geo.multiplicity_of(z).max(1))
        .collect();
    KnotVector::from_breakpoints(degree, &breaks, &mult)
}
