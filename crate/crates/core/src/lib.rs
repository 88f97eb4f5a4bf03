//! Covering-number and Rademacher-complexity bounds for rank-constrained
//! linear classes and single-layer attention, with empirical checks.

pub mod attention;
pub mod bounds;
pub mod complexity;
pub mod covering;
pub mod error;
pub mod linalg;
pub mod maurey;

pub use error::{Error, Result};
