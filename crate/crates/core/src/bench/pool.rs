//! A model of trainer-side consumption: prefetch threads parse incoming lines
//! into one pool while batches are cut from the other. When the filling pool
//! is full and the draining pool is used up, the two swap. Each pool is sorted
//! by a length key before it is cut into batches.

use std::collections::VecDeque;
use std::mem;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::record::Record;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortKey {
    /// Whitespace-delimited tokens in field 0.
    #[default]
    SourceTokens,
    /// Characters in field 0.
    SourceChars,
}

impl SortKey {
    pub fn of(self, record: &Record) -> usize {
        match self {
            SortKey::SourceTokens => record.source().split_whitespace().count(),
            SortKey::SourceChars => record.source().chars().count(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoolConfig {
    pub pool_capacity: usize,
    pub prefetch_threads: usize,
    pub batch_size: usize,
    pub sort_key: SortKey,
    /// Caps emission at this many records per second, to stand in for a
    /// trainer of known speed.
    pub max_rate: Option<f64>,
}

impl PoolConfig {
    pub fn new(pool_capacity: usize, prefetch_threads: usize, batch_size: usize) -> Result<Self> {
        let cfg = PoolConfig {
            pool_capacity,
            prefetch_threads,
            batch_size,
            sort_key: SortKey::default(),
            max_rate: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.pool_capacity < self.batch_size {
            return Err(Error::Config(format!(
                "need pool capacity >= batch size >= 1, got {} and {}",
                self.pool_capacity, self.batch_size
            )));
        }
        if self.prefetch_threads == 0 {
            return Err(Error::Config("need at least one prefetch thread".into()));
        }
        if self.max_rate.is_some_and(|r| r.is_nan() || r <= 0.0) {
            return Err(Error::Config("rate limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    /// Which pool cycle the batch was cut from, counting from 0.
    pub pool: u64,
    pub records: Vec<Record>,
}

struct State {
    filling: Vec<(usize, Record)>,
    readers: usize,
    malformed: u64,
}

struct Shared {
    state: Mutex<State>,
    changed: Condvar,
    stop: AtomicBool,
}

pub struct DualPool {
    shared: Arc<Shared>,
    cfg: PoolConfig,
    batches: VecDeque<Vec<Record>>,
    pool: u64,
    emitted: u64,
    started: Instant,
}

fn prefetch<I>(input: &Mutex<I>, shared: &Shared, cfg: &PoolConfig)
where
    I: Iterator<Item = Vec<u8>>,
{
    loop {
        if shared.stop.load(Ordering::Relaxed) {
            return;
        }
        let Some(line) = input.lock().expect("input lock").next() else {
            return;
        };
        // Parsing happens outside both locks; this is the parallel part.
        let parsed = Record::parse(&line).map(|r| (cfg.sort_key.of(&r), r));
        let mut st = shared.state.lock().expect("pool lock");
        let Ok(item) = parsed else {
            st.malformed += 1;
            continue;
        };
        while st.filling.len() >= cfg.pool_capacity {
            if shared.stop.load(Ordering::Relaxed) {
                return;
            }
            st = shared.changed.wait(st).expect("pool lock");
        }
        st.filling.push(item);
        if st.filling.len() == cfg.pool_capacity {
            shared.changed.notify_all();
        }
    }
}

/// Starts the prefetch threads over `input` (raw lines without terminators)
/// and returns the batch iterator. Every parsable input line ends up in
/// exactly one batch; at end of input the draining pool and then the partial
/// filling pool are emitted.
pub fn dual_pool_consumer<I>(input: I, cfg: PoolConfig) -> Result<DualPool>
where
    I: Iterator<Item = Vec<u8>> + Send + 'static,
{
    cfg.validate()?;
    let shared = Arc::new(Shared {
        state: Mutex::new(State {
            filling: Vec::with_capacity(cfg.pool_capacity),
            readers: cfg.prefetch_threads,
            malformed: 0,
        }),
        changed: Condvar::new(),
        stop: AtomicBool::new(false),
    });
    let input = Arc::new(Mutex::new(input));
    for i in 0..cfg.prefetch_threads {
        let (input, shared, cfg) = (input.clone(), shared.clone(), cfg.clone());
        thread::Builder::new()
            .name(format!("prefetch-{i}"))
            .spawn(move || {
                prefetch(&input, &shared, &cfg);
                let mut st = shared.state.lock().expect("pool lock");
                st.readers -= 1;
                shared.changed.notify_all();
            })
            .map_err(|e| Error::Config(format!("cannot start prefetch thread: {e}")))?;
    }
    Ok(DualPool {
        shared,
        cfg,
        batches: VecDeque::new(),
        pool: 0,
        emitted: 0,
        started: Instant::now(),
    })
}

impl DualPool {
    pub fn malformed(&self) -> u64 {
        self.shared.state.lock().expect("pool lock").malformed
    }

    /// Waits for a full pool (or the end of input) and cuts it into batches.
    fn swap(&mut self) -> bool {
        let mut st = self.shared.state.lock().expect("pool lock");
        while st.filling.len() < self.cfg.pool_capacity && st.readers > 0 {
            st = self.shared.changed.wait(st).expect("pool lock");
        }
        let mut pool = mem::replace(&mut st.filling, Vec::with_capacity(self.cfg.pool_capacity));
        self.shared.changed.notify_all();
        drop(st);
        if pool.is_empty() {
            return false;
        }
        pool.sort_by_key(|(k, _)| *k);
        let mut records = pool.into_iter().map(|(_, r)| r);
        loop {
            let batch: Vec<Record> = records.by_ref().take(self.cfg.batch_size).collect();
            if batch.is_empty() {
                break;
            }
            self.batches.push_back(batch);
        }
        true
    }

    fn throttle(&self, n: usize) {
        if let Some(rate) = self.cfg.max_rate {
            let due = Duration::from_secs_f64((self.emitted + n as u64) as f64 / rate);
            let elapsed = self.started.elapsed();
            if due > elapsed {
                thread::sleep(due - elapsed);
            }
        }
    }
}

impl Iterator for DualPool {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        if self.batches.is_empty() {
            if !self.swap() {
                return None;
            }
            self.pool += 1;
        }
        let records = self.batches.pop_front()?;
        self.throttle(records.len());
        self.emitted += records.len() as u64;
        Some(Batch {
            pool: self.pool - 1,
            records,
        })
    }
}

impl Drop for DualPool {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::Relaxed);
        self.shared.changed.notify_all();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(n: usize) -> Vec<Vec<u8>> {
        (0..n)
            .map(|i| format!("{}\tt\t{i}", "w ".repeat(i % 13 + 1).trim_end()).into_bytes())
            .collect()
    }

    fn ids(batches: &[Batch]) -> Vec<usize> {
        let mut ids: Vec<usize> = batches
            .iter()
            .flat_map(|b| b.records.iter().map(|r| r.get(2).unwrap().parse().unwrap()))
            .collect();
        ids.sort();
        ids
    }

    #[test]
    fn ten_records_two_batches() {
        let cfg = PoolConfig::new(10, 1, 5).unwrap();
        let batches: Vec<Batch> = dual_pool_consumer(lines(10).into_iter(), cfg)
            .unwrap()
            .collect();
        assert_eq!(batches.len(), 2);
        assert_eq!(ids(&batches), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn pool_is_sorted_then_chunked() {
        let input: Vec<Vec<u8>> = [9, 1, 5, 3]
            .iter()
            .map(|&n| vec!["w"; n].join(" ").into_bytes())
            .collect();
        let cfg = PoolConfig::new(4, 1, 2).unwrap();
        let got: Vec<Vec<usize>> = dual_pool_consumer(input.into_iter(), cfg)
            .unwrap()
            .map(|b| {
                b.records
                    .iter()
                    .map(|r| SortKey::SourceTokens.of(r))
                    .collect()
            })
            .collect();
        assert_eq!(got, vec![vec![1, 3], vec![5, 9]]);
    }

    #[test]
    fn conservation_with_many_threads_and_partial_pool() {
        let cfg = PoolConfig::new(100, 4, 7).unwrap();
        let pool = dual_pool_consumer(lines(1234).into_iter(), cfg).unwrap();
        let batches: Vec<Batch> = pool.collect();
        assert_eq!(ids(&batches), (0..1234).collect::<Vec<_>>());
        for w in batches.windows(2) {
            assert!(w[0].pool <= w[1].pool);
        }
        assert_eq!(batches.last().unwrap().pool, 12);
    }

    #[test]
    fn malformed_lines_are_skipped() {
        let mut input = lines(5);
        input.push(b"\xff\tbad".to_vec());
        let cfg = PoolConfig::new(3, 2, 3).unwrap();
        let mut pool = dual_pool_consumer(input.into_iter(), cfg).unwrap();
        let n: usize = pool.by_ref().map(|b| b.records.len()).sum();
        assert_eq!(n, 5);
        assert_eq!(pool.malformed(), 1);
    }

    #[test]
    fn invalid_configs() {
        assert!(PoolConfig::new(4, 1, 5).is_err());
        assert!(PoolConfig::new(4, 0, 2).is_err());
        assert!(PoolConfig::new(4, 1, 0).is_err());
    }

    #[test]
    fn rate_limit_slows_emission() {
        let mut cfg = PoolConfig::new(50, 1, 10).unwrap();
        cfg.max_rate = Some(1000.0);
        let start = Instant::now();
        let n: usize = dual_pool_consumer(lines(200).into_iter(), cfg)
            .unwrap()
            .map(|b| b.records.len())
            .sum();
        assert_eq!(n, 200);
        assert!(start.elapsed() >= Duration::from_millis(190));
    }

    // Prefetch scaling only shows with more than one core.
    #[test]
    fn more_prefetch_threads_are_not_slower() {
        let cores = thread::available_parallelism().map_or(1, |n| n.get());
        if cores < 2 {
            eprintln!("skipping prefetch scaling comparison on a single core");
            return;
        }
        let input = lines(200_000);
        let rate = |threads: usize| {
            let cfg = PoolConfig::new(4096, threads, 64).unwrap();
            let start = Instant::now();
            let n: usize = dual_pool_consumer(input.clone().into_iter(), cfg)
                .unwrap()
                .map(|b| b.records.len())
                .sum();
            n as f64 / start.elapsed().as_secs_f64()
        };
        let one = rate(1);
        let eight = rate(8);
        assert!(
            eight >= one * 0.9,
            "8 threads {eight:.0}/s vs 1 thread {one:.0}/s"
        );
    }
}
