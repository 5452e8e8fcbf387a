//! Grey-box identification of polynomial NARX models.
//!
//! Structure selection is cast as a three-objective problem (term count,
//! free-run prediction error, steady-state error against a known static
//! curve) and solved with dominance-based evolutionary search; the final
//! model is picked from the accumulated Pareto archive by MMD or MTD
//! a posteriori decision making.

pub mod dataio;
pub mod decision;
pub mod error;
pub mod estimation;
pub mod moea;
pub mod narx;
pub mod validation;

pub use error::{Error, Result};
