//! Effective thermal conductivity of periodic coated-sphere composites.
//!
//! The pipeline is: [`microstructure`] packs equal spheres by random
//! sequential adsorption, [`voxelgrid`] rasterizes them with a coating shell
//! into an N³ phase grid, [`solver`] solves the periodic Lippmann–Schwinger
//! equation with FFTs, and [`homogenize`] assembles the 3×3 effective tensor
//! from three unit loadings. [`sweep`] drives seeded batches over
//! (resolution, sphere count, layer) and [`oracles`] holds closed-form
//! references used to validate the solver.

pub mod error;
pub mod fft;
pub mod homogenize;
pub mod microstructure;
pub mod oracles;
pub mod par;
pub mod solver;
pub mod sweep;
pub mod voxelgrid;

pub use error::{Error, Result};
