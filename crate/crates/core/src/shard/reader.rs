use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;

use super::Shard;
use crate::error::{Error, Result};
use crate::record::Record;

const READ_BUFFER: usize = 128 * 1024;

/// Opens a file for line reading, decompressing gzip when the name ends in `.gz`.
pub fn open_decoded(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|ext| ext == "gz");
    Ok(if gz {
        Box::new(BufReader::with_capacity(
            READ_BUFFER,
            MultiGzDecoder::new(BufReader::with_capacity(READ_BUFFER, file)),
        ))
    } else {
        Box::new(BufReader::with_capacity(READ_BUFFER, file))
    })
}

/// Records of one shard, in file order. Errors carry the shard path and the
/// 1-based line number; the reader is fused after the first error.
pub struct ShardReader {
    path: PathBuf,
    reader: Box<dyn BufRead + Send>,
    line: u64,
    buf: Vec<u8>,
    done: bool,
}

pub fn read_shard(shard: &Shard) -> Result<ShardReader> {
    Ok(ShardReader {
        path: shard.path.clone(),
        reader: open_decoded(&shard.path)?,
        line: 0,
        buf: Vec::with_capacity(256),
        done: false,
    })
}

impl ShardReader {
    fn fail(&mut self, source: Error) -> Option<Result<Record>> {
        self.done = true;
        Some(Err(Error::Shard {
            path: self.path.clone(),
            line: self.line,
            source: Box::new(source),
        }))
    }
}

impl Iterator for ShardReader {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        self.buf.clear();
        self.line += 1;
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => {
                self.done = true;
                None
            }
            Ok(_) => {
                let line = self.buf.strip_suffix(b"\n").unwrap_or(&self.buf);
                match Record::parse(line) {
                    Ok(r) => Some(Ok(r)),
                    Err(e) => self.fail(e),
                }
            }
            Err(e) => {
                let path = self.path.clone();
                self.fail(Error::io(path, e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    fn shard(path: PathBuf) -> Shard {
        Shard {
            path,
            index: 0,
            source_id: 0,
        }
    }

    fn gz(path: &Path, body: &[u8]) {
        let mut enc = GzEncoder::new(File::create(path).unwrap(), Compression::default());
        enc.write_all(body).unwrap();
        enc.finish().unwrap();
    }

    fn collect(path: PathBuf) -> Vec<String> {
        read_shard(&shard(path))
            .unwrap()
            .map(|r| r.unwrap().serialize())
            .collect()
    }

    #[test]
    fn reads_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.tsv.gz");
        gz(&p, b"a\tb\nc\td\n");
        assert_eq!(collect(p), vec!["a\tb", "c\td"]);
    }

    #[test]
    fn empty_shard_is_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.tsv.gz");
        gz(&p, b"");
        assert!(collect(p).is_empty());
    }

    #[test]
    fn crlf_matches_lf() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tsv.gz");
        let b = dir.path().join("b.tsv");
        gz(&a, b"a\tb\r\nc\td\r\n");
        std::fs::write(&b, b"a\tb\nc\td").unwrap();
        assert_eq!(collect(a), collect(b));
    }

    #[test]
    fn utf8_error_carries_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.tsv.gz");
        gz(&p, b"ok\tfine\nbad\t\xff\nnever\n");
        let items: Vec<_> = read_shard(&shard(p)).unwrap().collect();
        assert_eq!(items.len(), 2);
        match &items[1] {
            Err(Error::Shard { line, source, .. }) => {
                assert_eq!(*line, 2);
                assert!(matches!(**source, Error::Malformed { offset: 4 }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn corrupt_gzip_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("corrupt.tsv.gz");
        std::fs::write(&p, b"\x1f\x8b\x08\x00garbage-garbage").unwrap();
        let items: Vec<_> = read_shard(&shard(p)).unwrap().collect();
        assert!(items.last().unwrap().is_err());
    }
}
