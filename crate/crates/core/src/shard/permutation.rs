use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{DataSource, Shard};
use crate::seed::{self, StreamRng};

/// Infinite sequence of shards made of back-to-back shard epochs. Each epoch is
/// an independent uniform permutation of the source's shards, so no shard is
/// yielded `n + 1` times before every shard has been yielded `n` times.
pub struct ShardPermutation {
    shards: Arc<[Shard]>,
    order: Vec<usize>,
    pos: usize,
    epoch: u64,
    rng: StreamRng,
}

pub fn shard_permutation_stream(source: &DataSource, seed: u64) -> ShardPermutation {
    ShardPermutation {
        shards: source.shards.clone(),
        order: (0..source.shards.len()).collect(),
        pos: source.shards.len(),
        epoch: 0,
        rng: seed::rng(seed),
    }
}

impl ShardPermutation {
    /// Number of shard epochs started so far.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn len(&self) -> usize {
        self.shards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shards.is_empty()
    }
}

impl Iterator for ShardPermutation {
    type Item = Shard;

    fn next(&mut self) -> Option<Shard> {
        if self.shards.is_empty() {
            return None;
        }
        if self.pos == self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
            self.epoch += 1;
        }
        let shard = self.shards[self.order[self.pos]].clone();
        self.pos += 1;
        Some(shard)
    }
}
