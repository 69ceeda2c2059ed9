//! Asymptotics of Jacobi polynomials `P_n^(alpha_n, beta_n)` whose parameters
//! grow like `A n`, `B n` with `-1 < A, B < 0` and `-2 < A + B < -1`.
//!
//! The crate covers the geometry of the critical trajectories, the phase
//! function and its constants, the outer and Airy-type asymptotic formulas,
//! the limiting zero distribution, and an exact reference oracle built on
//! rational arithmetic and arbitrary-precision floats.

pub mod airy;
pub mod asymptotics;
pub mod bigc;
pub mod error;
pub mod geometry;
pub mod params;
pub mod phase;
pub mod planar;
pub mod quad;
pub mod reference;
pub mod zerodist;

pub use bigc::BigComplex;
pub use error::{JrhError, Result};
pub use geometry::{Geometry, TraceOptions};
pub use params::ParameterPair;
