//! Numerical solution of the Beltrami equation on the unit disk.
//!
//! Builds a piecewise-linear quasiconformal self-map of the disk from a
//! prescribed Beltrami coefficient with `sup |mu| < 1`, working outward over
//! concentric rings: each ring is extended by affine mu-conformal
//! interpolants, corrected back to a round disk by a zipper conformal map,
//! and the correction is pushed forward to the retained image points.

pub mod affine;
pub mod beltrami;
pub mod conformal;
pub mod elliptic;
pub mod error;
pub mod mesh;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
