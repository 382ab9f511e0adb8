//! Splitting a monolithic TSV file into cached shards.
//!
//! The cache lives under a root directory with one entry per
//! `(content digest, shard size)` pair:
//!
//! ```text
//! <cache root>/<md5 hex>-<shard size>/
//!     manifest.txt
//!     shard-00000.tsv.gz
//!     shard-00001.tsv.gz
//!     ...
//! ```
//!
//! `manifest.txt` holds `key=value` lines: `source` (original path),
//! `digest` (`md5:<hex>` of the compressed input file), `shard_size`,
//! `shards` (count) and `lines` (total). An entry is reused only when the
//! recorded digest and shard size match the current input and every listed
//! shard file is present.

use std::fs::{self, File};
use std::io::{self, BufRead, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use flate2::write::GzEncoder;
use flate2::Compression;
use md5::{Digest, Md5};

use super::reader::open_decoded;
use crate::error::{Error, Result};

pub const DEFAULT_SHARD_SIZE: usize = 1_000_000;

const MANIFEST: &str = "manifest.txt";
const DIGEST_PREFIX: &str = "md5:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardCache {
    root: PathBuf,
}

impl ShardCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ShardCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_dir(&self, digest_hex: &str, shard_size: usize) -> PathBuf {
        self.root.join(format!("{digest_hex}-{shard_size}"))
    }
}

impl Default for ShardCache {
    /// `$STREAMGEN_CACHE`, else `$XDG_CACHE_HOME/streamgen`, else
    /// `$HOME/.cache/streamgen`, else the system temp directory.
    fn default() -> Self {
        let root = std::env::var_os("STREAMGEN_CACHE")
            .map(PathBuf::from)
            .or_else(|| {
                std::env::var_os("XDG_CACHE_HOME").map(|d| PathBuf::from(d).join("streamgen"))
            })
            .or_else(|| {
                std::env::var_os("HOME").map(|d| PathBuf::from(d).join(".cache").join("streamgen"))
            })
            .unwrap_or_else(|| std::env::temp_dir().join("streamgen"));
        ShardCache { root }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheManifest {
    pub source: PathBuf,
    pub digest: String,
    pub shard_size: usize,
    pub shards: usize,
    pub lines: u64,
}

impl CacheManifest {
    fn render(&self) -> String {
        format!(
            "source={}\ndigest={}\nshard_size={}\nshards={}\nlines={}\n",
            self.source.display(),
            self.digest,
            self.shard_size,
            self.shards,
            self.lines
        )
    }

    fn parse(text: &str) -> Option<Self> {
        let mut source = None;
        let mut digest = None;
        let mut shard_size = None;
        let mut shards = None;
        let mut lines = None;
        for line in text.lines() {
            let (key, value) = line.split_once('=')?;
            match key {
                "source" => source = Some(PathBuf::from(value)),
                "digest" => digest = Some(value.to_owned()),
                "shard_size" => shard_size = value.parse().ok(),
                "shards" => shards = value.parse().ok(),
                "lines" => lines = value.parse().ok(),
                _ => {}
            }
        }
        Some(CacheManifest {
            source: source?,
            digest: digest?,
            shard_size: shard_size?,
            shards: shards?,
            lines: lines?,
        })
    }

    pub fn read(dir: &Path) -> Option<Self> {
        fs::read_to_string(dir.join(MANIFEST))
            .ok()
            .and_then(|t| Self::parse(&t))
    }
}

pub(crate) fn shard_file_name(index: usize) -> String {
    format!("shard-{index:05}.tsv.gz")
}

/// Hex MD5 of the file's bytes as stored on disk (compressed).
pub fn file_digest(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Md5::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

fn is_valid_entry(dir: &Path, digest: &str, shard_size: usize) -> bool {
    match CacheManifest::read(dir) {
        Some(m) => {
            m.digest == digest
                && m.shard_size == shard_size
                && (0..m.shards).all(|i| dir.join(shard_file_name(i)).is_file())
        }
        None => false,
    }
}

type ShardWriter = GzEncoder<BufWriter<File>>;

fn finish_shard(writer: ShardWriter, path: &Path) -> Result<()> {
    writer
        .finish()
        .and_then(|mut w| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Splits `input` into `dir`, returning (shard count, line count).
fn split_into(input: &Path, dir: &Path, shard_size: usize) -> Result<(usize, u64)> {
    let mut reader = open_decoded(input)?;
    let mut line = Vec::with_capacity(256);
    let mut current: Option<(ShardWriter, PathBuf)> = None;
    let mut in_shard = 0usize;
    let mut shards = 0usize;
    let mut lines = 0u64;
    loop {
        line.clear();
        let n = reader
            .read_until(b'\n', &mut line)
            .map_err(|e| Error::io(input, e))?;
        if n == 0 {
            break;
        }
        if current.is_none() {
            let path = dir.join(shard_file_name(shards));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            current = Some((
                GzEncoder::new(BufWriter::new(file), Compression::fast()),
                path,
            ));
            shards += 1;
        }
        let (writer, path) = current.as_mut().expect("shard writer is open");
        writer
            .write_all(&line)
            .map_err(|e| Error::io(path.as_path(), e))?;
        lines += 1;
        in_shard += 1;
        if in_shard == shard_size {
            let (writer, path) = current.take().expect("shard writer is open");
            finish_shard(writer, &path)?;
            in_shard = 0;
        }
    }
    if let Some((writer, path)) = current.take() {
        finish_shard(writer, &path)?;
    }
    Ok((shards, lines))
}

/// Splits a single (optionally gzip-compressed) TSV file into shards of
/// `shard_size` lines and returns the shard directory. A cache entry whose
/// digest matches the input is returned as is, without rewriting anything.
pub fn auto_shard(file: &Path, shard_size: usize, cache: &ShardCache) -> Result<PathBuf> {
    if shard_size == 0 {
        return Err(Error::Config("shard size must be positive".into()));
    }
    let digest_hex = file_digest(file)?;
    let digest = format!("{DIGEST_PREFIX}{digest_hex}");
    let dir = cache.entry_dir(&digest_hex, shard_size);
    if is_valid_entry(&dir, &digest, shard_size) {
        log::debug!(
            "shard cache hit for {} at {}",
            file.display(),
            dir.display()
        );
        return Ok(dir);
    }

    fs::create_dir_all(&cache.root).map_err(|e| Error::io(&cache.root, e))?;
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.subsec_nanos())
        .unwrap_or(0);
    let tmp = cache.root.join(format!(
        ".tmp-{digest_hex}-{shard_size}-{}-{nanos}",
        std::process::id()
    ));
    fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;

    let result = split_into(file, &tmp, shard_size).and_then(|(shards, lines)| {
        if lines == 0 {
            return Err(Error::EmptySource(file.to_path_buf()));
        }
        let manifest = CacheManifest {
            source: file.canonicalize().unwrap_or_else(|_| file.to_path_buf()),
            digest: digest.clone(),
            shard_size,
            shards,
            lines,
        };
        let path = tmp.join(MANIFEST);
        fs::write(&path, manifest.render()).map_err(|e| Error::io(&path, e))?;
        log::info!(
            "split {} into {shards} shards of up to {shard_size} lines under {}",
            file.display(),
            dir.display()
        );
        Ok(())
    });
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }

    if dir.exists() {
        // Stale or partial entry for the same key.
        let _ = fs::remove_dir_all(&dir);
    }
    match fs::rename(&tmp, &dir) {
        Ok(()) => Ok(dir),
        // Another process finished the same entry first.
        Err(_) if is_valid_entry(&dir, &digest, shard_size) => {
            let _ = fs::remove_dir_all(&tmp);
            Ok(dir)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            Err(Error::io(&dir, io::Error::new(e.kind(), e)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::read::MultiGzDecoder;

    fn write_gz(path: &Path, body: &[u8]) {
        let mut enc = GzEncoder::new(File::create(path).unwrap(), Compression::default());
        enc.write_all(body).unwrap();
        enc.finish().unwrap();
    }

    fn gunzip(path: &Path) -> Vec<u8> {
        let mut out = Vec::new();
        MultiGzDecoder::new(File::open(path).unwrap())
            .read_to_end(&mut out)
            .unwrap();
        out
    }

    #[test]
    fn splits_losslessly_with_remainder() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("data.tsv.gz");
        let body: String = (0..25).map(|i| format!("s{i}\tt{i}\n")).collect();
        write_gz(&input, body.as_bytes());
        let cache = ShardCache::new(tmp.path().join("cache"));
        let dir = auto_shard(&input, 10, &cache).unwrap();

        let manifest = CacheManifest::read(&dir).unwrap();
        assert_eq!(
            (manifest.shards, manifest.lines, manifest.shard_size),
            (3, 25, 10)
        );
        assert!(manifest.digest.starts_with("md5:"));

        let parts: Vec<Vec<u8>> = (0..3)
            .map(|i| gunzip(&dir.join(shard_file_name(i))))
            .collect();
        let counts: Vec<usize> = parts
            .iter()
            .map(|p| p.iter().filter(|&&b| b == b'\n').count())
            .collect();
        assert_eq!(counts, vec![10, 10, 5]);
        assert_eq!(parts.concat(), body.into_bytes());
    }

    #[test]
    fn last_line_without_newline_is_kept() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("data.tsv");
        fs::write(&input, b"a\tb\nc\td").unwrap();
        let cache = ShardCache::new(tmp.path().join("cache"));
        let dir = auto_shard(&input, 1, &cache).unwrap();
        assert_eq!(gunzip(&dir.join(shard_file_name(1))), b"c\td");
    }

    #[test]
    fn second_call_hits_cache_and_changed_input_misses() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("data.tsv.gz");
        write_gz(&input, b"x\ty\n");
        let cache = ShardCache::new(tmp.path().join("cache"));
        let first = auto_shard(&input, 1, &cache).unwrap();
        let mtime = fs::metadata(first.join(shard_file_name(0)))
            .unwrap()
            .modified()
            .unwrap();
        let second = auto_shard(&input, 1, &cache).unwrap();
        assert_eq!(first, second);
        let again = fs::metadata(second.join(shard_file_name(0)))
            .unwrap()
            .modified()
            .unwrap();
        assert_eq!(mtime, again);

        write_gz(&input, b"x\ty\nz\tw\n");
        let third = auto_shard(&input, 1, &cache).unwrap();
        assert_ne!(first, third);
        assert_eq!(CacheManifest::read(&third).unwrap().shards, 2);
    }

    #[test]
    fn corrupted_entry_is_rebuilt() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("data.tsv.gz");
        write_gz(&input, b"x\ty\nz\tw\n");
        let cache = ShardCache::new(tmp.path().join("cache"));
        let dir = auto_shard(&input, 1, &cache).unwrap();
        fs::remove_file(dir.join(shard_file_name(1))).unwrap();
        let dir = auto_shard(&input, 1, &cache).unwrap();
        assert!(dir.join(shard_file_name(1)).is_file());
    }

    #[test]
    fn empty_input_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("empty.tsv.gz");
        write_gz(&input, b"");
        let cache = ShardCache::new(tmp.path().join("cache"));
        assert!(matches!(
            auto_shard(&input, 5, &cache),
            Err(Error::EmptySource(_))
        ));
        // No partial entries left behind.
        let leftovers: Vec<_> = fs::read_dir(cache.root()).unwrap().collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn single_line_file_gives_one_shard() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("one.tsv.gz");
        write_gz(&input, b"only\tline\n");
        let cache = ShardCache::new(tmp.path().join("cache"));
        let dir = auto_shard(&input, 1_000_000, &cache).unwrap();
        let m = CacheManifest::read(&dir).unwrap();
        assert_eq!((m.shards, m.lines), (1, 1));
    }
}
