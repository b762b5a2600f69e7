//! Numerical toolkit for partially hyperbolic attractors: hyperbolic times,
//! cone fields, iterated disks with bounded distortion and curvature,
//! empirical measures, and a set of reference systems.

// `!(x > 0.0)` rejects NaN along with the non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cones;
pub mod disks;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod measures;
pub mod models;
pub mod parallel;
pub mod pliss;
pub mod qmc;
pub mod sum;

pub use error::{Error, Result};
