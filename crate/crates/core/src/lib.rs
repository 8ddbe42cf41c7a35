//! Discrete optimal transport on finite subsets of `R^d`.
//!
//! The crate covers exact Kantorovich solving (transportation simplex plus a
//! vertex-enumeration oracle), Kantorovich / Kantorovich–Rubinshtein / `W_p`
//! distances, the gluing construction that carries a transport plan to new
//! marginals with a certified cost bound, Hausdorff distances between
//! transportation polytopes, parametric continuity diagnostics, and Monge map
//! checks.
//!
//! Everything here is pure computation over `alloc`; file formats and the
//! command line live in the `kantorovich-cli` crate. Disable the default `std`
//! feature to build without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values;
// index loops mirror the matrix formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

mod error;
pub mod gluing;
pub mod hausdorff;
pub mod lp;
mod math;
pub mod matrix;
pub mod measures;
pub mod metrics;
pub mod monge;
pub mod parametric;
pub mod solver;
pub mod suites;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use measures::{CostSpec, Coupling, DiscreteMeasure, MultiCoupling, Point, ShiftMap};
pub use metrics::GroundCost;
pub use solver::TransportResult;
