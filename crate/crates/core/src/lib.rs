//! Certified computations for conformal iterated function systems on the line
//! and in the plane.
//!
//! Exact rationals carry every coefficient; irrational quantities (square roots,
//! logarithms, powers) are enclosed in rational intervals with outward rounding.

pub mod arith;
pub mod attractor;
pub mod cli;
pub mod config;
pub mod dimension;
pub mod error;
pub mod examples;
pub mod ifs;
pub mod pressure;
pub mod report;
pub mod separation;
pub mod words;

pub use error::{Error, Result};
