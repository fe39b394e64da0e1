//! A numerical laboratory for the geometry of self-shrinkers of mean
//! curvature flow: closed-form exemplars, validated triangle meshes,
//! Gaussian-weighted integral calculus, the drift-Laplacian eigenproblem,
//! an ambient integration-by-parts checker, and a least-squares relaxation
//! solver that finds discrete shrinkers as critical points of the Gaussian
//! area functional.
//!
//! Everything is deterministic by construction: fixed seeds, fixed reduction
//! orders, and reports that serialize byte-identically for identical runs.

pub mod catalog;
pub mod config;
pub mod error;
pub mod mesh;
pub mod quad;
pub mod reilly;
pub mod solver;
pub mod spectrum;
pub mod weighted;

pub use error::{Error, Result};

/// Default seed for every randomized suite in the crate.
pub const DEFAULT_SEED: u64 = 0x5EED;
