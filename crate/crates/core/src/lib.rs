//! Sheaf-theoretic contextuality toolkit.
//!
//! Empirical models over measurement scenarios with exact rational
//! probabilities, the contextual fraction by exact linear programming, and
//! constructions of absolutely maximally contextual correlations (AMCC) from
//! GF(2) parity systems and Boolean constraint models.

pub mod analysis;
pub mod applications;
pub mod catalog;
pub mod construct;
pub mod empirical;
pub mod error;
pub mod ratlp;
pub mod rational;
pub mod scenario;

pub use error::{Error, Result};
pub use rational::{q, Rational};
