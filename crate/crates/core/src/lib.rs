//! Finite-element solver for crack-tip fields in transversely isotropic,
//! strain-limiting elastic solids.

pub mod app;
pub mod assembly;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod io;
pub mod mesh;
pub mod oracle;
pub mod picard;
pub mod postprocess;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod tensor;

pub use error::{Error, Result};
