//! Lattice workbench for nonlinear potential theory of the t-Laplacian.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: building lattice domains from constructive shapes,
//! evaluating the monotone vector field `A(p)` and its discrete energy, the
//! nonlinear Gauss–Seidel solvers for Dirichlet and obstacle problems,
//! capacitary-potential regularity probes, and the level-set bookkeeping used
//! by De Giorgi–type oscillation estimates.
//!
//! File formats, scenario handling and the command line live in the `plap`
//! companion crate.

#![no_std]
#![deny(rust_2018_idioms)]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::manual_memcpy
)]

extern crate alloc;

pub mod capacity;
pub mod degiorgi;
pub mod domain;
pub mod math;
pub mod operator;
mod rng;
pub mod solver;

pub use domain::{
    build_grid, build_grid_in, complement_cap, density, ComplementCap, GridDomain, Lattice,
    NodeLabel, Shape, ShapeSpec,
};
pub use operator::{Field, OperatorKind, OperatorSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Coordinates of a point. Components past the working dimension are zero.
pub type Point = [f64; 3];
