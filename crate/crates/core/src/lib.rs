//! Exact computations for finite topological dynamical systems: cube groups
//! over the acting group, dynamical cubespaces, higher-order regionally
//! proximal relations, canonical factors and the abelian factor tower.

pub mod config;
pub mod cube;
pub mod cube_group;
pub mod cubespace;
mod dsu;
pub mod error;
pub mod group;
pub mod nrp;
mod orbit;
pub mod report;
pub mod system;
pub mod zoo;

pub use error::{Error, Result};
pub use orbit::DEFAULT_BUDGET;
