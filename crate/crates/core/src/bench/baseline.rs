use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::ThroughputReport;
use crate::error::{Error, Result};
use crate::shard::open_decoded;

/// Plain sequential decompression of `shards` into `out`: no permutation and
/// no parsing. Returns the number of lines written (a trailing line without a
/// newline counts).
pub fn baseline_decompress<W: Write>(shards: &[PathBuf], out: &mut W) -> Result<u64> {
    let mut lines = 0u64;
    for path in shards {
        lines += copy_shard(path, out)?;
    }
    Ok(lines)
}

fn copy_shard<W: Write>(path: &Path, out: &mut W) -> Result<u64> {
    let mut reader = open_decoded(path)?;
    let mut lines = 0u64;
    let mut last = b'\n';
    loop {
        let buf = reader.fill_buf().map_err(|e| Error::io(path, e))?;
        if buf.is_empty() {
            break;
        }
        lines += memchr::memchr_iter(b'\n', buf).count() as u64;
        last = buf[buf.len() - 1];
        out.write_all(buf).map_err(|e| Error::io(path, e))?;
        let n = buf.len();
        reader.consume(n);
    }
    if last != b'\n' {
        lines += 1;
    }
    Ok(lines)
}

pub fn measure_baseline(shards: &[PathBuf]) -> Result<ThroughputReport> {
    let start = Instant::now();
    let lines = baseline_decompress(shards, &mut io::sink())?;
    Ok(ThroughputReport::new(
        "baseline",
        1,
        lines,
        0,
        start.elapsed(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::fs::File;

    #[test]
    fn copies_bytes_and_counts_lines() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tsv.gz");
        let b = dir.path().join("b.tsv");
        let mut enc = GzEncoder::new(File::create(&a).unwrap(), Compression::default());
        enc.write_all(b"1\t2\n3\t4\n").unwrap();
        enc.finish().unwrap();
        std::fs::write(&b, b"5\t6\n7").unwrap();
        let mut out = Vec::new();
        let n = baseline_decompress(&[a, b], &mut out).unwrap();
        assert_eq!(n, 4);
        assert_eq!(out, b"1\t2\n3\t4\n5\t6\n7");
    }
}
