//! Compute-and-forward over imaginary quadratic integers.
//!
//! Ring arithmetic, prime ideals of norm `p`, Construction A lattices and
//! nested codes, computation rates with coefficient search, and a Monte
//! Carlo simulator.

pub mod field;
pub mod ideal;
pub mod lattice;
pub mod plane;
pub mod rate;
pub mod ring;
pub mod rng;
pub mod sim;
