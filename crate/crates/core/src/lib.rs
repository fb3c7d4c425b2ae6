//! Exact and Monte Carlo computations for symmetric random walks on `Z^2` and
//! on the lattice torus `Z^2_K`.

pub mod config;
pub mod exact;
pub mod geometry;
pub mod law;
pub mod mc;
pub mod report;
pub mod verify;
