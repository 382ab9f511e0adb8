//! Throughput tooling: the pieces needed to reproduce producer/consumer
//! yield-rate measurements on the local machine.
//!
//! Absolute rates are hardware-bound. What carries over between machines is
//! the ordering between producers and how rates scale with worker count.

mod baseline;
mod count;
mod pool;
mod synth;

use std::fmt;
use std::hint::black_box;
use std::time::{Duration, Instant};

pub use baseline::{baseline_decompress, measure_baseline};
pub use count::count_consumer;
pub use pool::{dual_pool_consumer, Batch, DualPool, PoolConfig, SortKey};
pub use synth::{synth_corpus, SynthSpec};

use crate::error::Result;
use crate::record::Record;

/// Default measured run length and warm-up, in lines.
pub const DEFAULT_BENCH_LINES: u64 = 1_000_000;
pub const DEFAULT_WARMUP_LINES: u64 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub producer: String,
    pub num_workers: usize,
    pub lines: u64,
    /// Lines that were counted but did not parse as records.
    pub malformed: u64,
    pub wall_seconds: f64,
    pub lines_per_second: f64,
}

impl ThroughputReport {
    pub fn new(
        producer: &str,
        num_workers: usize,
        lines: u64,
        malformed: u64,
        elapsed: Duration,
    ) -> Self {
        let wall_seconds = elapsed.as_secs_f64().max(1e-9);
        ThroughputReport {
            producer: producer.to_owned(),
            num_workers,
            lines,
            malformed,
            wall_seconds,
            lines_per_second: lines as f64 / wall_seconds,
        }
    }

    /// Machine-readable `key=value` form.
    pub fn summary_line(&self) -> String {
        format!(
            "producer={} workers={} lines={} malformed={} seconds={:.6} lines_per_second={:.1}",
            self.producer,
            self.num_workers,
            self.lines,
            self.malformed,
            self.wall_seconds,
            self.lines_per_second
        )
    }
}

impl fmt::Display for ThroughputReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} worker{}): {} lines in {:.3}s = {:.0} lines/s",
            self.producer,
            self.num_workers,
            if self.num_workers == 1 { "" } else { "s" },
            self.lines,
            self.wall_seconds,
            self.lines_per_second
        )
    }
}

/// Drains `stream` the way the command-line generator would: every record is
/// serialized into an output buffer. The first `warmup` records are excluded
/// from the timing; then up to `lines` records are timed.
pub fn measure_stream<I>(
    producer: &str,
    num_workers: usize,
    mut stream: I,
    warmup: u64,
    lines: u64,
) -> Result<ThroughputReport>
where
    I: Iterator<Item = Result<Record>>,
{
    let mut buf: Vec<u8> = Vec::with_capacity(1 << 17);
    let emit = |r: Record, buf: &mut Vec<u8>| {
        r.write_to(buf);
        buf.push(b'\n');
        if buf.len() >= 1 << 16 {
            black_box(&buf[..]);
            buf.clear();
        }
    };
    for _ in 0..warmup {
        match stream.next() {
            Some(r) => emit(r?, &mut buf),
            None => break,
        }
    }
    let start = Instant::now();
    let mut n = 0u64;
    while n < lines {
        match stream.next() {
            Some(r) => emit(r?, &mut buf),
            None => break,
        }
        n += 1;
    }
    black_box(&buf[..]);
    Ok(ThroughputReport::new(
        producer,
        num_workers,
        n,
        0,
        start.elapsed(),
    ))
}
