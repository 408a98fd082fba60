//! File formats, performance sources, experiment runner and command line
//! for `confsearch`. The algorithms live in `confsearch-core`.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod external;
pub mod persist;
pub mod report;
pub mod schema_file;
pub mod source;
pub mod synthetic;
pub mod tables;

pub use error::{Error, ExitStatus, Result};
