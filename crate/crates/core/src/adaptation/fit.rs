//! Least-squares rate fits.

use std::f64::consts::LOG2_E;

use nalgebra::{DMatrix, DVector};

use super::RateModel;
use crate::backend::Backend;
use crate::error::{arg, Result};
use crate::misc::MultiIndex;

/// Straight line `y = slope x + intercept` with its RMS residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return arg("a line fit needs at least two points");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return arg("a line fit needs distinct abscissae");
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

/// One-direction-at-a-time refinement sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSweep {
    /// Levels of the directions not being swept.
    pub base: Vec<u32>,
    /// Increasing levels for the swept direction; the last one is the reference.
    pub levels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFit {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub error_fits: Vec<LineFit>,
    pub cost_fits: Vec<LineFit>,
    /// `(direction, level, |phi - phi_ref|, cost)` for every sweep point.
    pub samples: Vec<(usize, u32, f64, f64)>,
    pub warnings: Vec<String>,
}

/// Fit `r_i` from `log2 |phi_alpha - phi_ref|` and `c_i` from `log2 cost`
/// against `alpha_i`, one direction at a time at the fixed sample `y`.
pub fn fit_spatial_rates(backend: &dyn Backend, sweep: &SpatialSweep, y: &[f64]) -> Result<SpatialFit> {
    let d = backend.spatial_dim();
    if sweep.base.len() != d {
        return arg("sweep base needs one level per spatial direction");
    }
    if sweep.levels.len() < 4 {
        return arg("a sweep needs at least four levels");
    }
    if sweep.levels.windows(2).any(|w| w[0] >= w[1]) || sweep.levels[0] == 0 {
        return arg("sweep levels must be increasing and >= 1");
    }
    let mut out = SpatialFit {
        r: Vec::with_capacity(d),
        c: Vec::with_capacity(d),
        error_fits: Vec::new(),
        cost_fits: Vec::new(),
        samples: Vec::new(),
        warnings: Vec::new(),
    };
    for dir in 0..d {
        let mut values = Vec::new();
        let mut costs = Vec::new();
        for &l in &sweep.levels {
            let mut alpha = sweep.base.clone();
            alpha[dir] = l;
            let s = backend.solve(&alpha, y)?;
            values.push(s.value);
            costs.push(s.cost);
        }
        let reference = *values.last().unwrap();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        let mut previous = f64::INFINITY;
        for (k, &l) in sweep.levels[..sweep.levels.len() - 1].iter().enumerate() {
            let e = (values[k] - reference).abs();
            out.samples.push((dir, l, e, costs[k]));
            if e > previous {
                out.warnings
                    .push(format!("direction {dir}: error grows from level {} to {l}", l - 1));
            }
            previous = e;
            if e > 0.0 {
                xs.push(l as f64);
                ys.push(e.log2());
            }
        }
        out.samples
            .push((dir, *sweep.levels.last().unwrap(), 0.0, *costs.last().unwrap()));
        let ef = linear_fit(&xs, &ys).map_err(|_| {
            crate::error::Error::Argument(format!("direction {dir}: too few nonzero errors to fit r"))
        })?;
        let lx: Vec<f64> = sweep.levels.iter().map(|&l| l as f64).collect();
        let ly: Vec<f64> = costs.iter().map(|c| c.log2()).collect();
        let cf = linear_fit(&lx, &ly)?;
        if ef.slope >= 0.0 {
            out.warnings.push(format!("direction {dir}: errors do not decay"));
        }
        out.r.push(-ef.slope);
        out.c.push(cf.slope);
        out.error_fits.push(ef);
        out.cost_fits.push(cf);
    }
    Ok(out)
}

/// Reason a stochastic rate was not freely fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GFlag {
    /// Fewer than two distinct levels among the usable observations; prior kept.
    InsufficientVariation(usize),
    /// Least-squares value fell below the floor.
    Floored(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GFit {
    pub g: Vec<f64>,
    pub log2_scale: f64,
    pub flags: Vec<GFlag>,
    /// RMS residual in `log2 E`.
    pub residual: f64,
    /// Observations used (positive and above the noise floor).
    pub used: usize,
}

/// Fit `g` and the offset `s` of
/// `log2 E = s - sum alpha_i r_i - sum g_n 2^{beta_n} log2 e`
/// with `r` fixed and `g_n >= g_min`. Observations at or below `floor`
/// are ignored.
pub fn fit_g_rates(
    observations: &[(MultiIndex, f64)],
    model: &RateModel,
    g_min: f64,
    floor: f64,
) -> Result<GFit> {
    let d = model.spatial_dim();
    let n = model.stochastic_dim();
    let data: Vec<(&MultiIndex, f64)> = observations
        .iter()
        .filter(|(_, e)| e.is_finite() && *e > floor && *e > 0.0)
        .map(|(i, e)| (i, *e))
        .collect();
    if data.iter().any(|(i, _)| i.dim() != d + n) {
        return arg("observation index dimension mismatch");
    }
    let mut flags = Vec::new();
    let mut g = model.g.clone();
    let mut free: Vec<usize> = Vec::new();
    for k in 0..n {
        let mut levels: Vec<u32> = data.iter().map(|(i, _)| i.components()[d + k]).collect();
        levels.sort_unstable();
        levels.dedup();
        if levels.len() >= 2 {
            free.push(k);
        } else {
            flags.push(GFlag::InsufficientVariation(k));
        }
    }
    if data.is_empty() {
        return Ok(GFit {
            g,
            log2_scale: model.log2_scale,
            flags,
            residual: 0.0,
            used: 0,
        });
    }
    let feature = |b: u32| (b as f64).exp2() * LOG2_E;
    let mut s: f64;
    loop {
        let cols = 1 + free.len();
        let mut a = DMatrix::<f64>::zeros(data.len(), cols);
        let mut rhs = DVector::<f64>::zeros(data.len());
        for (row, (i, e)) in data.iter().enumerate() {
            let (al, be) = i.split(d);
            let mut z = e.log2() + al.iter().zip(&model.r).map(|(&a, r)| a as f64 * r).sum::<f64>();
            for k in 0..n {
                if !free.contains(&k) {
                    z += g[k] * feature(be[k]);
                }
            }
            rhs[row] = z;
            a[(row, 0)] = 1.0;
            for (col, &k) in free.iter().enumerate() {
                a[(row, col + 1)] = -feature(be[k]);
            }
        }
        let sol = a
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| crate::error::Error::Argument(format!("rate fit failed: {e}")))?;
        s = sol[0];
        let mut clamped = Vec::new();
        for (col, &k) in free.iter().enumerate() {
            g[k] = sol[col + 1];
            if g[k] < g_min {
                clamped.push(k);
            }
        }
        if clamped.is_empty() {
            break;
        }
        for k in clamped {
            g[k] = g_min;
            free.retain(|&f| f != k);
            flags.push(GFlag::Floored(k));
        }
        if free.is_empty() {
            // only the offset is left
            let mut z = 0.0;
            for (i, e) in &data {
                let (al, be) = i.split(d);
                z += e.log2()
                    + al.iter().zip(&model.r).map(|(&a, r)| a as f64 * r).sum::<f64>()
                    + be.iter().zip(&g).map(|(&b, g)| g * feature(b)).sum::<f64>();
            }
            s = z / data.len() as f64;
            break;
        }
    }
    let residual = {
        let mut m = model.clone();
        m.g = g.clone();
        m.log2_scale = s;
        let ss: f64 = data
            .iter()
            .map(|(i, e)| {
                let (al, be) = i.split(d);
                (e.log2() - m.log2_e_tilde(al, be)).powi(2)
            })
            .sum();
        (ss / data.len() as f64).sqrt()
    };
    flags.sort_by_key(|f| match f {
        GFlag::InsufficientVariation(k) | GFlag::Floored(k) => *k,
    });
    Ok(GFit {
        g,
        log2_scale: s,
        flags,
        residual,
        used: data.len(),
    })
}
