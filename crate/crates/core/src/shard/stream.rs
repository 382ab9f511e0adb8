use std::sync::Arc;

use rand::seq::SliceRandom;

use super::permutation::{shard_permutation_stream, ShardPermutation};
use super::reader::read_shard;
use super::{DataSource, Shard};
use crate::error::{Error, Result};
use crate::record::{Record, RecordStream};
use crate::seed::{self, StreamRng};

/// Turns the records of one shard into the stream a pipeline wants from it:
/// the place where per-source augmentation chains are attached.
pub type Processor =
    Arc<dyn Fn(RecordStream, &ShardContext<'_>) -> Result<RecordStream> + Send + Sync>;

pub fn identity_processor() -> Processor {
    Arc::new(|records, _ctx| Ok(records))
}

/// What a processor knows about the shard it is handed.
pub struct ShardContext<'a> {
    pub shard: &'a Shard,
    /// Number of shard visits made by the owning stream before this one.
    pub visit: u64,
    seed: u64,
}

impl ShardContext<'_> {
    /// A generator for one operator instance, keyed by `label`. Distinct labels
    /// and distinct visits give independent generators.
    pub fn rng(&self, label: &str) -> StreamRng {
        seed::rng(seed::derive(self.seed, label))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShardOrder {
    /// Load the whole shard and emit a uniform permutation of its records.
    #[default]
    Shuffled,
    /// Stream records in file order (needed when adjacency carries meaning,
    /// e.g. consecutive sentences of a document).
    FileOrder,
}

/// Infinite record stream over one data source: shard epochs in permuted
/// order, each shard shuffled in memory and passed through the processor.
///
/// With a single consumer and [`ShardOrder::Shuffled`], every block of
/// records covering one full shard epoch is a permutation of the source.
pub struct SourceStream {
    source: DataSource,
    shards: ShardPermutation,
    order: ShardOrder,
    shuffle_rng: StreamRng,
    processor: Processor,
    processor_seed: u64,
    current: Option<RecordStream>,
    visits: u64,
    idle_shards: usize,
    failed: bool,
}

impl SourceStream {
    pub fn new(source: DataSource, seed: u64) -> Self {
        SourceStream {
            shards: shard_permutation_stream(&source, seed::derive(seed, "shards")),
            source,
            order: ShardOrder::default(),
            shuffle_rng: seed::rng(seed::derive(seed, "records")),
            processor: identity_processor(),
            processor_seed: seed::derive(seed, "processor"),
            current: None,
            visits: 0,
            idle_shards: 0,
            failed: false,
        }
    }

    pub fn with_processor(mut self, processor: Processor) -> Self {
        self.processor = processor;
        self
    }

    pub fn with_order(mut self, order: ShardOrder) -> Self {
        self.order = order;
        self
    }

    pub fn boxed(self) -> RecordStream {
        Box::new(self)
    }

    fn open(&mut self, shard: &Shard) -> Result<RecordStream> {
        let records: RecordStream = match self.order {
            ShardOrder::Shuffled => {
                let mut records = read_shard(shard)?.collect::<Result<Vec<Record>>>()?;
                records.shuffle(&mut self.shuffle_rng);
                Box::new(records.into_iter().map(Ok))
            }
            ShardOrder::FileOrder => Box::new(read_shard(shard)?),
        };
        let ctx = ShardContext {
            shard,
            visit: self.visits,
            seed: seed::derive_indexed(self.processor_seed, "visit", self.visits),
        };
        self.visits += 1;
        (self.processor)(records, &ctx)
    }

    fn fail(&mut self, e: Error) -> Option<Result<Record>> {
        self.failed = true;
        self.current = None;
        Some(Err(e))
    }
}

impl Iterator for SourceStream {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.failed {
                return None;
            }
            if let Some(current) = self.current.as_mut() {
                match current.next() {
                    Some(Ok(r)) => {
                        self.idle_shards = 0;
                        return Some(Ok(r));
                    }
                    Some(Err(e)) => return self.fail(e),
                    None => self.current = None,
                }
            }
            // Any 2n-1 consecutive opens cover one full aligned epoch, so this
            // many empty shards in a row means every shard is empty.
            if self.idle_shards >= 2 * self.shards.len() - 1 {
                let root = self.source.root().to_path_buf();
                return self.fail(Error::EmptySource(root));
            }
            let shard = self.shards.next()?;
            self.idle_shards += 1;
            match self.open(&shard) {
                Ok(s) => self.current = Some(s),
                Err(e) => return self.fail(e),
            }
        }
    }
}
