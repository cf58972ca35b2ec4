//! Lattice workbench for Seiberg–Witten monopoles on flat tori.
//!
//! The crate discretizes the monopole equations and functional on periodic
//! 4-tori (and their reduction to 3-tori), provides gradient-flow solvers and
//! property checks, and ships exact calculators for the associated topological
//! formulas.

pub mod clifford;
pub mod error;
pub mod fields;
pub mod functional;
pub mod kahler;
pub mod lattice;
pub mod operators;
pub mod par;
pub mod reduce3d;
pub mod snapshot;
pub mod topo;
pub mod verify;

pub use error::{Error, Result};
