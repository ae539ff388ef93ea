//! Brownian-motion rounding for the relaxed linear equations mod p problem.
//!
//! The crate is organised bottom-up:
//!
//! - [`instance`]: problem model, objective, generators and the brute-force oracle.
//! - [`constellation`]: the canonical vector constellation, its difference
//!   vectors, and lifting of relaxation solutions to a larger domain.
//! - [`sdp`]: the assignment relaxation (P+) and the constellation relaxation
//!   (P), their audits, the P+ → P transform and a desk-scale solver.
//! - [`rounding`]: Gaussian projection, circular walks, extreme sign change
//!   detection and position assignment.
//! - [`brownian`]: hitting-time densities, reflected barrier probabilities and
//!   the quadrature that reproduces the barrier-crossing constants.
//! - [`harness`]: Monte Carlo experiments and report emission used by the CLI.

pub mod brownian;
pub mod constellation;
mod error;
pub mod harness;
pub mod instance;
pub mod linalg;
pub mod rounding;
pub mod stats;
pub mod sdp;

pub use error::{Error, Result};
