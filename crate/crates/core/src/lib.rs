//! Desk-scale laboratory for intrinsic square functions on finite spaces of
//! homogeneous type.
//!
//! Every object is evaluated exactly on a finite metric measure space: the
//! test-class suprema `A_ω f(x,k)` are linear programs, dyadic systems are
//! explicit leveled partitions, and the sparse and weighted quantities are
//! finite sums and maxima. The crate is organised bottom-up:
//!
//! - [`space`]: finite metric measure spaces, balls, doubling diagnostics and
//!   the uncentered maximal function.
//! - [`modulus`]: moduli of continuity and their (log-)Dini functionals.
//! - [`dyadic`]: systems of dyadic cubes, adjacency, Carleson constants and
//!   sparsity certificates.
//! - [`intrinsic`]: the functional `A_ω f(x,k)` as a dual transshipment simplex.
//! - [`squarefn`]: the intrinsic square function `G_{ω,β}` and its ratio probes.
//! - [`czwhitney`]: Whitney and Calderón–Zygmund decompositions.
//! - [`sparse`]: stopping-time sparse domination and sparse operators.
//! - [`weights`]: `A_p`, `A_∞`, reverse Hölder and weak-norm measurements.

pub mod czwhitney;
pub mod dyadic;
pub mod error;
pub mod intrinsic;
pub mod modulus;
pub mod sparse;
pub mod space;
pub mod squarefn;
pub mod weights;

pub use error::{Error, Result};
pub use modulus::Modulus;
pub use space::{Ball, GridFunction, MetricMeasureSpace};
