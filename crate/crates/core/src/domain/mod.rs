//! Lattice domains built from constructive shapes, complement caps and the
//! geometric quantities attached to them.

mod cap;
pub mod criterion;
mod grid;
pub mod interval;
mod shape;
pub mod solid_angle;

pub use cap::{complement_cap, density, CapError, ComplementCap};
pub use criterion::{criterion_density, DensitySample, DensityVerdict};
pub use grid::{build_grid, build_grid_in, GridDomain, GridError, Lattice, NodeLabel};
pub use shape::{Bounds, Membership, Shape, ShapeError, ShapeSpec};
pub use solid_angle::{
    sigma_hat_bounds, solid_angle_lower_bound, SolidAngleConfig, SolidAngleEstimate,
};
