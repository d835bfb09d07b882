pub mod charts;
pub mod cones;
mod error;
pub mod flat;
pub mod lattice;
pub mod phg;
pub mod rational;
pub mod solver;
pub mod trig;

pub use error::{Error, Result};
