use std::ffi::OsString;
use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};

use streamgen::pipeline::{prepare, Registry};
use streamgen::workers::run_workers;

use crate::config::{CliConfig, Parsed};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERRUPTED: i32 = 130;

enum Outcome {
    Done,
    Interrupted,
    PipeClosed,
}

fn is_pipe_closed(e: &io::Error) -> bool {
    e.kind() == io::ErrorKind::BrokenPipe
}

/// The generator's whole life: parse, build, stream, shut down. Returns the
/// process exit code. `interrupted` is polled between records.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write, interrupted: &AtomicBool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let registry = Registry::default();
    let cfg = match CliConfig::parse(argv, &registry) {
        Ok(Parsed::Config(c)) => c,
        Ok(Parsed::Info(text)) => {
            let _ = out.write_all(text.as_bytes());
            return EXIT_OK;
        }
        Err(msg) => {
            let _ = write!(err, "{msg}");
            if !msg.ends_with('\n') {
                let _ = writeln!(err);
            }
            return EXIT_CONFIG;
        }
    };
    let seed = cfg.seed.unwrap_or_else(rand::random);
    let _ = writeln!(err, "seed: {seed}");

    let setup = cfg
        .worker_plan(seed)
        .and_then(|plan| Ok((prepare(&registry, &cfg.pipeline_spec(seed))?, plan)));
    let (prepared, plan) = match setup {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_DATA
            };
        }
    };
    let mut merged = match run_workers(&prepared, &plan) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_DATA
            };
        }
    };

    let limit = cfg.max_records.unwrap_or(u64::MAX);
    let mut buf = Vec::with_capacity(cfg.chunk_size * 128);
    let mut written = 0u64;
    let mut failure = None;
    let mut outcome = Outcome::Done;
    while written < limit {
        if interrupted.load(Ordering::Relaxed) {
            outcome = Outcome::Interrupted;
            break;
        }
        match merged.next() {
            Some(Ok(record)) => {
                record.write_to(&mut buf);
                buf.push(b'\n');
                written += 1;
                if written.is_multiple_of(cfg.chunk_size as u64) {
                    if let Err(e) = out.write_all(&buf).and_then(|_| out.flush()) {
                        outcome = Outcome::PipeClosed;
                        if !is_pipe_closed(&e) {
                            failure = Some(format!("writing output: {e}"));
                        }
                        break;
                    }
                    buf.clear();
                }
            }
            Some(Err(e)) => {
                failure = Some(e.to_string());
                break;
            }
            None => break,
        }
    }
    if !matches!(outcome, Outcome::PipeClosed) {
        if let Err(e) = out.write_all(&buf).and_then(|_| out.flush()) {
            if !is_pipe_closed(&e) && failure.is_none() {
                failure = Some(format!("writing output: {e}"));
            }
        }
    }
    merged.shutdown();
    for (name, value) in prepared.counters.snapshot() {
        let _ = writeln!(err, "{name}: {value}");
    }
    if let Some(msg) = failure {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_DATA;
    }
    match outcome {
        Outcome::Interrupted => {
            let _ = writeln!(err, "interrupted after {written} records");
            EXIT_INTERRUPTED
        }
        Outcome::Done | Outcome::PipeClosed => EXIT_OK,
    }
}
