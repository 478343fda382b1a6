//! Solvers and analysis tools for the extended horizontal linear
//! complementarity problem
//!
//! ```text
//! M w = q + H_1 x_1 + ... + H_m x_m,   w, x_i >= 0,
//! w ∘ x_1 = 0,   x_i <= d_i,   (d_i - x_i) ∘ x_{i+1} = 0.
//! ```
//!
//! The problem is rewritten as a piecewise linear system in one vector `y`
//! ([`transform`]), solved by fixed-point iterations ([`solvers`]) and
//! analysed through convergence conditions, global error bounds and the
//! column W-property.

pub mod blockdata;
pub mod cli;
pub mod bounds;
pub mod convergence;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod repro;
pub mod schema;
pub mod solvers;
pub mod transform;
pub mod wproperty;

pub use error::{Error, Result};
