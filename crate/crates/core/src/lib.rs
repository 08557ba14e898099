//! Asymptotic optimal experimental designs for linear regression whose errors
//! are long-range dependent, with the short-range exponential case for
//! comparison.

pub mod design;
pub mod error;
pub mod kernels;
pub mod quad;
pub mod reference;
pub mod shortrange;
pub mod tables;
pub mod verify;
pub mod oneparam;
pub mod optimizer;

pub use error::{DesignError, Result};
