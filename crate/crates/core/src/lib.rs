//! Multi-index stochastic collocation (MISC) for elliptic PDEs with random
//! coefficients, driven by a tensor-product isogeometric Galerkin solver.

pub mod adaptation;
pub mod backend;
pub mod error;
pub mod gauss;
pub mod geometry;
pub mod misc;
pub mod pde;
pub mod quadrature;
pub mod splines;

pub use error::{Error, Result};
