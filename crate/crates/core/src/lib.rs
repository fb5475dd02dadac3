//! Toeplitz operators with quasi-radial pseudo-homogeneous symbols on the
//! weighted Bergman spaces of `ℙⁿ(ℂ)` and of the unit ball.
//!
//! Operators act on the monomial basis `{z^α : |α| ≤ m}`; every table and
//! matrix uses the graded lexicographic order of [`indexcore::enumerate_basis`].

pub mod commands;
pub mod config;
pub mod error;
pub mod gamma;
pub mod geom;
pub mod indexcore;
pub mod oracle;
pub mod quad;
pub mod special;
pub mod symbolexpr;
pub mod toeplitz;

pub use error::{Error, Result};
