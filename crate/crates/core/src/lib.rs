//! Computational laboratory for Reifenberg flat domains and harmonic measure.
//!
//! The crate builds the geometric objects of the construction (dyadic Whitney
//! decompositions, the ball family `{B_Q}` and the enlarged domain `Ω_ε⁺`,
//! iterated snowflake blips) and probes their analytic quantities
//! numerically: one-scale flatness, harmonic measure through walk-on-spheres,
//! pointwise dimension fits and box counting.
//!
//! Everything is generic over the ambient dimension `D = d + 1`, with `D = 2`
//! and `D = 3` supported. Data-parallel loops go through [`par`], which uses
//! rayon when the `parallel` feature is enabled and falls back to plain
//! iteration otherwise; results are identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod enlargement;
pub mod error;
pub mod flatness;
pub mod geometry;
pub mod harmonic;
pub mod measure;
pub mod par;
pub mod snowflake;
pub mod whitney;

pub use error::{Error, Result};
pub use geometry::{Aabb, Ball, Hyperplane, Point};
pub use par::Exec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
