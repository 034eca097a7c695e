//! Everything around the core acquisition engine that touches the outside
//! world: CSV corpora on disk, JSONL run logs, JSON diagnostic reports,
//! sweep plans, and the `al` command line built from them.

pub mod commands;
pub mod csvio;
pub mod error;
pub mod plan;
pub mod report;
pub mod runlog;

pub use error::AppError;
