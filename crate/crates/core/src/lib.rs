//! Numerical tools for SL(2,R) cocycles over minimal rotations: products and growth tests,
//! cone-field certificates, segment perturbations, Kakutani–Rokhlin castles and the
//! perturbation that flattens a non-hyperbolic cocycle.

pub mod base;
pub mod cocycle;
pub mod error;
pub mod hp;
pub mod perturb;
pub mod scenarios;
pub mod sl2;
pub mod surgery;
pub mod towers;

pub use error::{LabError, Result};
