//! Interior-penalty discontinuous Galerkin discretization of the
//! incompressible Navier-Stokes equations on triangulated rectangles.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod exact;
pub mod forms;
pub mod mesh;
pub mod oracle;
pub mod solver;
pub mod space;
pub mod sparse;

pub use error::{Error, Result};
