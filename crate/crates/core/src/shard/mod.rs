//! Shard discovery and per-source record streams.
//!
//! A data source is a directory of compressed TSV shards. A single monolithic
//! file is split into a cached shard directory first (see [`ShardCache`]).
//! Shards are ordered by file name and indexed from zero.

mod cache;
mod permutation;
mod reader;
mod stream;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub use cache::{auto_shard, file_digest, CacheManifest, ShardCache, DEFAULT_SHARD_SIZE};
pub use permutation::{shard_permutation_stream, ShardPermutation};
pub use reader::{open_decoded, read_shard, ShardReader};
pub use stream::{identity_processor, Processor, ShardContext, ShardOrder, SourceStream};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard {
    pub path: PathBuf,
    /// Position within the owning source, in file-name order.
    pub index: usize,
    pub source_id: usize,
}

/// Options that control how a source path is turned into shards.
#[derive(Debug, Clone)]
pub struct SourceOptions {
    pub shard_size: usize,
    pub cache: ShardCache,
}

impl Default for SourceOptions {
    fn default() -> Self {
        SourceOptions {
            shard_size: DEFAULT_SHARD_SIZE,
            cache: ShardCache::default(),
        }
    }
}

/// An opened data source. Immutable and cheap to clone; worker partitions are
/// restricted views over the same shard list.
#[derive(Debug, Clone)]
pub struct DataSource {
    root: PathBuf,
    id: usize,
    shards: Arc<[Shard]>,
}

pub(crate) fn is_shard_name(name: &str) -> bool {
    name.ends_with(".tsv.gz") || name.ends_with(".tsv")
}

fn discover(dir: &Path, source_id: usize) -> Result<Vec<Shard>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let is_file = entry.file_type().map_err(|e| Error::io(dir, e))?.is_file();
        if let Some(name) = entry.file_name().to_str() {
            if is_file && is_shard_name(name) {
                names.push(name.to_owned());
            }
        }
    }
    if names.is_empty() {
        return Err(Error::NoShards(dir.to_path_buf()));
    }
    names.sort();
    Ok(names
        .into_iter()
        .enumerate()
        .map(|(index, name)| Shard {
            path: dir.join(name),
            index,
            source_id,
        })
        .collect())
}

/// Opens a directory of shards, or auto-shards a single file through the cache.
pub fn open_source(
    root: impl AsRef<Path>,
    source_id: usize,
    opts: &SourceOptions,
) -> Result<DataSource> {
    let root = root.as_ref();
    let meta = fs::metadata(root).map_err(|_| Error::MissingPath(root.to_path_buf()))?;
    let dir = if meta.is_dir() {
        root.to_path_buf()
    } else {
        auto_shard(root, opts.shard_size, &opts.cache)?
    };
    let shards = discover(&dir, source_id)?;
    Ok(DataSource {
        root: root.to_path_buf(),
        id: source_id,
        shards: shards.into(),
    })
}

impl DataSource {
    /// Builds a source from an explicit shard list (mostly for tests and tools).
    pub fn from_shards(
        root: impl Into<PathBuf>,
        source_id: usize,
        shards: Vec<Shard>,
    ) -> Result<Self> {
        let root = root.into();
        if shards.is_empty() {
            return Err(Error::NoShards(root));
        }
        Ok(DataSource {
            root,
            id: source_id,
            shards: shards.into(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    pub fn num_shards(&self) -> usize {
        self.shards.len()
    }

    /// A view holding only the shards at the given positions. Shard indices
    /// keep their values from the full source.
    pub fn restrict(&self, positions: &[usize]) -> Result<DataSource> {
        let shards = positions
            .iter()
            .map(|&p| {
                self.shards.get(p).cloned().ok_or_else(|| {
                    Error::Config(format!(
                        "shard position {p} out of range for {} ({} shards)",
                        self.root.display(),
                        self.shards.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DataSource::from_shards(self.root.clone(), self.id, shards)
    }

    /// Infinite record stream over this source.
    pub fn stream(&self, seed: u64) -> SourceStream {
        SourceStream::new(self.clone(), seed)
    }
}
