//! Diffusion coefficients, right-hand sides and manufactured solutions.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Result};

/// Log-sine random field on the (thick) quarter ring in cylindrical
/// coordinates: `a = exp(c * gamma)` with
/// `gamma = sum_n amp_n y_n sin(freq_n theta) sin(pi (rho - 1)) [sin(pi z)]`.
/// The `sin(pi z)` factor is present only for the 3D ring (`height` set).
#[derive(Debug, Clone, PartialEq)]
pub struct Test1Field {
    pub c: f64,
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub r_in: f64,
    pub r_out: f64,
    pub height: Option<f64>,
}

impl Test1Field {
    /// Three-mode field with `c = 4`, amplitudes (1, 0.4, 0.1), frequencies (2, 8, 16).
    pub fn standard(r_in: f64, r_out: f64, height: Option<f64>) -> Self {
        Self {
            c: 4.0,
            amplitudes: vec![1.0, 0.4, 0.1],
            frequencies: vec![2.0, 8.0, 16.0],
            r_in,
            r_out,
            height,
        }
    }

    pub fn num_modes(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn gamma(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        const TOL: f64 = 1e-9;
        let rho = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]);
        if rho < self.r_in - TOL || rho > self.r_out + TOL {
            return domain(format!("radius {rho} outside [{}, {}]", self.r_in, self.r_out));
        }
        if !(-TOL..=FRAC_PI_2 + TOL).contains(&theta) {
            return domain(format!("angle {theta} outside the quarter ring"));
        }
        let mut shape = (PI * (rho - 1.0)).sin();
        if let Some(h) = self.height {
            let z = x.get(2).copied().unwrap_or(0.0);
            if z < -TOL || z > h + TOL {
                return domain(format!("height {z} outside [0, {h}]"));
            }
            shape *= (PI * z).sin();
        }
        let mut g = 0.0;
        for ((amp, freq), yn) in self.amplitudes.iter().zip(&self.frequencies).zip(y) {
            g += amp * yn * (freq * theta).sin();
        }
        Ok(g * shape)
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok((self.c * self.gamma(x, y)?).exp())
    }

    /// `exp(c * sum |amp|)`, a bound on `a` and `1/a` for `|y| <= 1`.
    pub fn bound(&self) -> f64 {
        (self.c * self.amplitudes.iter().map(|a| a.abs()).sum::<f64>()).exp()
    }
}

pub type CoefficientFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type SourceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Diffusion coefficient `a(x, y)`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Test1(Test1Field),
    Custom(CoefficientFn),
}

impl Coefficient {
    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Coefficient::Constant(a) => Ok(*a),
            Coefficient::Test1(f) => f.value(x, y),
            Coefficient::Custom(f) => Ok(f(x, y)),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(a) => write!(f, "Constant({a})"),
            Coefficient::Test1(t) => write!(f, "Test1({t:?})"),
            Coefficient::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Right-hand side `F(x)`.
#[derive(Clone)]
pub enum Source {
    Constant(f64),
    /// Forcing of `u = sin(pi x1) sin(pi x2)` on the unit square, `a = 1`.
    ManufacturedSquare,
    /// Forcing of `u = sin(pi (rho - r_in) / L) sin(2 theta)` on the quarter
    /// annulus, `L = r_out - r_in`, `a = 1`.
    ManufacturedAnnulus { r_in: f64, r_out: f64 },
    Custom(SourceFn),
}

impl Source {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Source::Constant(f) => *f,
            Source::ManufacturedSquare => {
                2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()
            }
            Source::ManufacturedAnnulus { r_in, r_out } => {
                let k = PI / (r_out - r_in);
                let rho = x[0].hypot(x[1]);
                let theta = x[1].atan2(x[0]);
                let s = (k * (rho - r_in)).sin();
                let c = (k * (rho - r_in)).cos();
                (2.0 * theta).sin() * (k * k * s - k * c / rho + 4.0 * s / (rho * rho))
            }
            Source::Custom(f) => f(x),
        }
    }

    /// Exact `int u dx` for the manufactured cases.
    pub fn manufactured_integral(&self) -> Option<f64> {
        match self {
            Source::ManufacturedSquare => Some(4.0 / (PI * PI)),
            Source::ManufacturedAnnulus { r_in, r_out } => {
                let l = r_out - r_in;
                Some(l * (2.0 * r_in + l) / PI)
            }
            _ => None,
        }
    }

    /// Exact solution for the manufactured cases.
    pub fn manufactured_solution(&self, x: &[f64]) -> Option<f64> {
        match self {
            Source::ManufacturedSquare => Some((PI * x[0]).sin() * (PI * x[1]).sin()),
            Source::ManufacturedAnnulus { r_in, r_out } => {
                let k = PI / (r_out - r_in);
                let rho = x[0].hypot(x[1]);
                Some((k * (rho - r_in)).sin() * (2.0 * x[1].atan2(x[0])).sin())
            }
            _ => None,
        }
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Constant(v) => write!(f, "Constant({v})"),
            Source::ManufacturedSquare => write!(f, "ManufacturedSquare"),
            Source::ManufacturedAnnulus { r_in, r_out } => {
                write!(f, "ManufacturedAnnulus({r_in}, {r_out})")
            }
            Source::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sample_gives_unit_field() {
        let f = Test1Field::standard(1.0, 2.0, Some(1.0));
        for x in [[1.2, 0.3, 0.5], [0.1, 1.9, 0.9]] {
            assert_eq!(f.value(&x, &[0.0, 0.0, 0.0]).unwrap(), 1.0);
        }
    }

    #[test]
    fn inner_radius_gives_unit_field() {
        let f = Test1Field::standard(1.0, 2.0, None);
        let t: f64 = 0.3;
        let x = [t.cos(), t.sin()];
        assert!((f.value(&x, &[1.0, -1.0, 0.5]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn first_mode_matches_direct_formula() {
        let f = Test1Field::standard(1.0, 2.0, Some(1.0));
        let (rho, theta, z) = (1.3_f64, 0.6_f64, 0.25_f64);
        let x = [rho * theta.cos(), rho * theta.sin(), z];
        let s = (2.0 * theta).sin() * (PI * (rho - 1.0)).sin() * (PI * z).sin();
        let a = f.value(&x, &[1.0, 0.0, 0.0]).unwrap();
        assert!((a - (4.0 * s).exp()).abs() < 1e-13 * a);
    }

    #[test]
    fn outside_ring_is_rejected() {
        let f = Test1Field::standard(1.0, 2.0, None);
        assert!(f.value(&[0.5, 0.1], &[0.0; 3]).is_err());
        assert!(f.value(&[-1.5, 0.1], &[0.0; 3]).is_err());
        let g = Test1Field::standard(1.0, 2.0, Some(1.0));
        assert!(g.value(&[1.5, 0.1, 1.5], &[0.0; 3]).is_err());
    }

    #[test]
    fn annulus_manufactured_forcing_matches_laplacian() {
        // -Lap u by central differences in Cartesian coordinates
        let src = Source::ManufacturedAnnulus { r_in: 1.0, r_out: 2.0 };
        let u = |x: f64, y: f64| src.manufactured_solution(&[x, y]).unwrap();
        let h = 1e-4;
        for (x, y) in [(1.1, 0.4), (0.7, 1.2), (1.0, 1.0)] {
            let lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * u(x, y)) / (h * h);
            let f = src.value(&[x, y]);
            assert!((f + lap).abs() < 1e-5 * (1.0 + f.abs()), "f={f} lap={lap}");
        }
    }
}
