//! Infinite, permuted and optionally augmented streams of tab-separated
//! training records, generated from sharded corpora.
//!
//! The crate is organised bottom-up:
//!
//! * [`record`]: the [`Record`] type and its TSV wire format.
//! * [`shard`]: shard discovery, auto-sharding with a checksum cache, the
//!   fair infinite shard permutation and per-shard record readers.
//! * [`ops`]: lazy stream operators (mixers, augmentors, filters, groupers).
//! * [`pipeline`]: named recipes that bind sources and operators into one stream.
//! * [`workers`]: round-robin shard partitioning and the chunked merge of
//!   per-worker streams.
//! * [`bench`]: throughput measurement, synthetic corpora and a dual-pool
//!   consumer simulator.

pub mod bench;
pub mod error;
pub mod ops;
pub mod pipeline;
pub mod record;
pub mod seed;
pub mod shard;
pub mod workers;

pub use error::{Error, Result};
pub use record::{Record, RecordStream};
