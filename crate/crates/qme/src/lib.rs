//! Quadratic quantum master equations on 2n-dimensional phase space.
//!
//! The library constructs the generator of a quadratic master equation from a
//! system description (Hessian, displacement, per-degree heat baths), decides
//! whether the generated evolution is completely positive and trace preserving
//! (CPTP) via the positive-semidefiniteness of the Hermitian coefficient
//! matrix, extracts Lindblad operators, integrates Gaussian moment dynamics,
//! and cross-validates every closed form against brute-force truncated
//! Fock-space oracles.

pub mod error;
pub mod linalg;
pub mod model;
pub mod propagators;
pub mod cptp;
pub mod analytic;
pub mod dynamics;
pub mod balance;
pub mod fock;

pub use error::QmeError;
