//! Offline schema-refinement toolkit: renames ambiguous database columns to
//! improve downstream Text-to-SQL execution accuracy, selects renamings by
//! execution-grounded verification against a query workload, and
//! materializes the result as a non-destructive SQL view layer.

pub mod error;
pub mod fixtures;
pub mod ident;
pub mod schema;
pub mod sqlexec;
pub mod token;

pub use error::{RefineError, Result};
