//! Exact computations with directional dynamical cubes on finite Z^d-systems
//! and on unipotent affine maps of rational tori.

pub mod affine;
pub mod battery;
pub mod cube_engine;
pub mod finite_system;
pub mod hypercube;
pub mod proximal;
pub mod return_times;
pub mod structure;
mod text;

pub use text::ParseError;
