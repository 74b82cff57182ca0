//! Mimetic spectral element discretization of the mixed vector Poisson and
//! vorticity-velocity-pressure Stokes problems on curvilinear quadrilateral
//! domains.

pub mod basis1d;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod harness;
pub mod solver;
pub mod sparse;
pub mod topology;

pub use error::{Error, Result};
