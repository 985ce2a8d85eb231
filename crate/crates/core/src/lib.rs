#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

//! Random 2×2 linear cocycles mixing rank-one and invertible letters over
//! Bernoulli and Markov shifts.

pub mod error;
pub mod families;
pub mod io;
pub mod limits;
pub mod linalg;
pub mod lyapunov;
pub mod model;
pub mod presets;
pub mod rng;
pub mod stationary;
pub mod stats;

pub use error::{CocycleError, Result};
pub use linalg::{proj_dist, wedge, Letter, Mat2, MatrixClass, ProjPoint, Vec2};
pub use model::{Cocycle, CocycleSpec, Word};
pub use stationary::{AtomicMeasure, Observable};
