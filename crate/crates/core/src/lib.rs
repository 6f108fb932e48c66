//! Polygonal virtual element spaces for the Poisson problem.

pub mod cli;
pub mod error;
pub mod mesh;
pub mod oracle;
pub mod polybasis;
pub mod solver;
pub mod space;
pub mod stabilitylab;
pub mod sparse;
pub mod stab;

pub use error::{Result, VemError};
