//! Command-line harness: JSON formats, configuration, benchmarks and the
//! command implementations behind the `crowdpose` binary.

pub mod bench;
pub mod commands;
pub mod config;
pub mod formats;
