pub mod certify;
pub mod error;
pub mod extended;
pub mod geometry;
pub mod inequalities;
pub mod models;
pub mod quadrature;
pub mod report;
pub mod run;
pub mod semigroup;
pub mod symbolic;

pub use error::{CdError, Result};
