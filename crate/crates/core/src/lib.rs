//! Bigeometric (proportional) calculus in floating point.
//!
//! The crate is organised bottom-up:
//!
//! * [`calculus`] and [`stirling`]: bigeometric and geometric derivatives,
//!   unsigned Stirling numbers of the first kind and the bigeometric Taylor
//!   polynomial.
//! * [`solvers`]: second- and fourth-order bigeometric Runge-Kutta steppers
//!   working on the logarithm of the right-hand side, a classical RK4
//!   reference and the fixed-step driver with its root-crossing guard.
//! * [`problems`]: the benchmark initial value problems.
//! * [`bench`]: tables, convergence studies, timing curves and report output.

pub mod bench;
pub mod calculus;
mod error;
pub mod problems;
pub mod solvers;
pub mod stirling;

pub use error::{Error, Result};
