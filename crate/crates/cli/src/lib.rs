//! Library half of the `dgeom` command line tool.

pub mod analyze;
pub mod config;
pub mod error;
pub mod report;
pub mod star;
pub mod sw;
pub mod verify;
