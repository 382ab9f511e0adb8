//! Command-line front ends over the `streamgen` library: `gen` writes a
//! pipeline's records to standard output, `bench` measures producers and
//! consumers.

pub mod bench;
pub mod config;
pub mod gen;

pub use config::{CliConfig, Parsed};
