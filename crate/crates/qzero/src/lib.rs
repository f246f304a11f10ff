//! High-precision laboratory for orthogonal polynomials on the q-lattice {q^k}.
//!
//! The crate computes the three classical families supported on the lattice
//! (little q-Laguerre, q-Bessel, little q-Jacobi), locates their zeros to
//! certified precision, rescales them as x^{1/n}, and compares the resulting
//! radial distributions with closed-form constrained equilibrium measures —
//! both analytic (module [`potential`]) and numeric via a projected-gradient
//! convex solver (module [`eqsolver`]).
//!
//! Feature `parallel` (default) runs zero refinement, lattice scans and grid
//! verification on a rayon pool; disabling it yields a fully sequential build
//! with identical results.

pub mod eqsolver;
pub mod error;
pub mod families;
pub mod field;
pub mod lattice;
pub mod potential;
pub mod qnum;
pub mod verify;
pub mod zeros;

pub use error::{Error, Result};
