//! Mollifier smoothing of C0-Finsler structures.
//!
//! A continuous Finsler structure is smoothed in two stages: a vertical
//! convolution in each tangent space followed by a radial rescaling that
//! restores homogeneity, then a horizontal convolution of the squared
//! norm glued together by a partition of unity. The geometry module
//! evaluates Chern/Cartan/Hashiguchi/Berwald connections and flag
//! curvature of the result; the harness runs convergence sweeps.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod fd;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod horizontal;
pub mod jet;
pub mod kernel;
pub mod norm;
pub mod piecewise;
pub mod quadrature;
pub mod vertical;

pub use error::{Error, Result};
