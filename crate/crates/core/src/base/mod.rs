//! Minimal base dynamics on circles, tori and Sturmian shifts.

mod cell;
mod rotation;
mod system;

pub use cell::{circle_distance, Arc, BoxCell, Cell};
pub use rotation::{QNum, QuadraticIrrational, RotationNumber, DYADIC_BITS, DYADIC_ONE};
pub use system::{BaseKind, BasePoint, BaseSystem, DEFAULT_GRID, RETURN_HORIZON};
