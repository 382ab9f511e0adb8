use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use super::ThroughputReport;

const CHECK_EVERY: u64 = 4096;

/// Counts newline-delimited records from `input` until EOF (or until `stop`
/// is raised), writing interval and final rates to `log`. Lines that are not
/// valid UTF-8 are counted, and also tallied as malformed.
pub fn count_consumer<R: BufRead>(
    mut input: R,
    report_interval: Option<Duration>,
    stop: Option<&AtomicBool>,
    log: &mut dyn Write,
) -> io::Result<ThroughputReport> {
    let start = Instant::now();
    let mut last_report = start;
    let mut last_lines = 0u64;
    let mut lines = 0u64;
    let mut malformed = 0u64;
    let mut buf = Vec::with_capacity(256);
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        lines += 1;
        if std::str::from_utf8(&buf).is_err() {
            malformed += 1;
        }
        if lines.is_multiple_of(CHECK_EVERY) {
            if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
                break;
            }
            if let Some(every) = report_interval {
                let now = Instant::now();
                if now - last_report >= every {
                    let window = (now - last_report).as_secs_f64();
                    writeln!(
                        log,
                        "{lines} lines, {:.0} lines/s (interval {:.0} lines/s)",
                        lines as f64 / (now - start).as_secs_f64(),
                        (lines - last_lines) as f64 / window
                    )?;
                    last_report = now;
                    last_lines = lines;
                }
            }
        }
    }
    let report = ThroughputReport::new("stdin", 1, lines, malformed, start.elapsed());
    writeln!(log, "{report}")?;
    Ok(report)
}
