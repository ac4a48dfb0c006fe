//! Numerical lab for a pulsed kinematic dynamo on the two-torus.
//!
//! The planar dynamics is a piecewise-linear hyperbolic map built from two
//! alternating shears of strength `alpha`; an out-of-plane shear `g` couples
//! the planar field to the magnetic phase. The crate provides:
//!
//! * [`map`]: the map, its partition, the time-1 flow and the exact lattice action;
//! * [`shear`]: the mollified shear profile and the rank-1 limit matrix;
//! * [`fields`]: spectral grid fields;
//! * [`operators`]: transfer operators, heat semigroup and pulsed compositions;
//! * [`leaves`]: admissible stable leaves and leaf quadrature;
//! * [`norms`]: sampled anisotropic norms and inequality checks;
//! * [`spectral`]: eigenvalues, growth traces, convergence and flux experiments;
//! * [`cli`]: the batch experiment driver behind the `dynamo` binary.

pub mod cli;
pub mod error;
pub mod fields;
pub mod leaves;
pub mod map;
pub mod norms;
pub mod operators;
pub mod shear;
pub mod spectral;

#[cfg(test)]
mod invariants;

pub use error::{DynamoError, Result};
pub use num_complex::Complex64;
