//! Parallel generation.
//!
//! Each worker thread runs the whole pipeline over its own round-robin slice
//! of every source's shards, with its own derived seed. The merger reads
//! `chunk_size` records from worker 0, then worker 1, and so on, cycling
//! forever. When the worker count divides every source's shard count, a
//! window holding one data epoch per worker is a permutation of the data.
//!
//! Queues are bounded (`QUEUE_CHUNKS` chunks per worker), so a slow consumer
//! stalls the workers instead of growing memory.

use std::mem;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use crate::error::{Error, Result};
use crate::pipeline::{prepare, PipelineSpec, PreparedPipeline, Registry};
use crate::record::{Record, RecordStream};
use crate::seed;

pub const DEFAULT_CHUNK_SIZE: usize = 1000;

/// Per-worker queue capacity, in chunks.
pub const QUEUE_CHUNKS: usize = 4;

/// Round-robin assignment: worker `w` gets shards `w, w + n, w + 2n, ...`.
pub fn partition_shards(num_shards: usize, num_workers: usize) -> Result<Vec<Vec<usize>>> {
    if num_workers == 0 || num_shards == 0 {
        return Err(Error::Config(
            "shard and worker counts must both be positive".into(),
        ));
    }
    if num_workers > num_shards {
        return Err(Error::Config(format!(
            "{num_workers} workers but only {num_shards} shards: lower the worker count or use a smaller shard size"
        )));
    }
    Ok((0..num_workers)
        .map(|w| (w..num_shards).step_by(num_workers).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerPlan {
    pub num_workers: usize,
    pub chunk_size: usize,
    pub seed: u64,
}

impl WorkerPlan {
    pub fn new(num_workers: usize, chunk_size: usize, seed: u64) -> Result<Self> {
        if num_workers == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        if chunk_size == 0 {
            return Err(Error::Config("chunk size must be positive".into()));
        }
        Ok(WorkerPlan {
            num_workers,
            chunk_size,
            seed,
        })
    }

    pub fn worker_seed(&self, worker: usize) -> u64 {
        seed::derive_indexed(self.seed, "worker", worker as u64)
    }
}

enum Message {
    Chunk(Vec<Record>),
    Failed(Error),
    Done,
}

struct Worker {
    rx: Receiver<Message>,
    thread: Option<JoinHandle<()>>,
    done: bool,
}

fn worker_loop<F>(factory: F, chunk_size: usize, tx: SyncSender<Message>, stop: Arc<AtomicBool>)
where
    F: FnOnce() -> Result<RecordStream>,
{
    let stream = match factory() {
        Ok(s) => s,
        Err(e) => {
            let _ = tx.send(Message::Failed(e));
            return;
        }
    };
    let mut chunk = Vec::with_capacity(chunk_size);
    for item in stream {
        if stop.load(Ordering::Relaxed) {
            return;
        }
        match item {
            Ok(r) => {
                chunk.push(r);
                if chunk.len() == chunk_size {
                    let full = mem::replace(&mut chunk, Vec::with_capacity(chunk_size));
                    if tx.send(Message::Chunk(full)).is_err() {
                        return;
                    }
                }
            }
            Err(e) => {
                if !chunk.is_empty() {
                    let _ = tx.send(Message::Chunk(chunk));
                }
                let _ = tx.send(Message::Failed(e));
                return;
            }
        }
    }
    if !chunk.is_empty() && tx.send(Message::Chunk(chunk)).is_err() {
        return;
    }
    let _ = tx.send(Message::Done);
}

/// The merged output of several worker streams.
pub struct ChunkedMerge {
    workers: Vec<Worker>,
    turn: usize,
    live: usize,
    current: std::vec::IntoIter<Record>,
    stop: Arc<AtomicBool>,
    finished: bool,
}

impl ChunkedMerge {
    /// Starts one thread per factory. Each factory builds its worker's stream
    /// on the worker thread.
    pub fn spawn<F>(factories: Vec<F>, chunk_size: usize) -> Result<Self>
    where
        F: FnOnce() -> Result<RecordStream> + Send + 'static,
    {
        if factories.is_empty() || chunk_size == 0 {
            return Err(Error::Config(
                "need at least one worker and a positive chunk size".into(),
            ));
        }
        let stop = Arc::new(AtomicBool::new(false));
        let workers = factories
            .into_iter()
            .enumerate()
            .map(|(i, factory)| {
                let (tx, rx) = sync_channel(QUEUE_CHUNKS);
                let stop = stop.clone();
                let thread = thread::Builder::new()
                    .name(format!("worker-{i}"))
                    .spawn(move || worker_loop(factory, chunk_size, tx, stop))
                    .map_err(|e| Error::Config(format!("cannot start worker {i}: {e}")))?;
                Ok(Worker {
                    rx,
                    thread: Some(thread),
                    done: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChunkedMerge {
            live: workers.len(),
            workers,
            turn: 0,
            current: Vec::new().into_iter(),
            stop,
            finished: false,
        })
    }

    pub fn num_workers(&self) -> usize {
        self.workers.len()
    }

    /// Signals workers to stop and waits for them. Workers blocked on a full
    /// queue are released by dropping the queues first.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::Relaxed);
        let workers = mem::take(&mut self.workers);
        let threads: Vec<_> = workers
            .into_iter()
            .filter_map(|mut w| {
                let t = w.thread.take();
                drop(w.rx);
                t
            })
            .collect();
        for t in threads {
            let _ = t.join();
        }
    }

    fn fail(&mut self, worker: usize, source: Error) -> Option<Result<Record>> {
        self.finished = true;
        self.stop.store(true, Ordering::Relaxed);
        Some(Err(Error::Worker {
            worker,
            source: Box::new(source),
        }))
    }
}

impl Iterator for ChunkedMerge {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(r) = self.current.next() {
                return Some(Ok(r));
            }
            if self.finished || self.live == 0 {
                self.finished = true;
                return None;
            }
            let w = self.turn;
            self.turn = (self.turn + 1) % self.workers.len();
            if self.workers[w].done {
                continue;
            }
            // Blocks until this worker's chunk is ready, keeping output order fixed.
            match self.workers[w].rx.recv() {
                Ok(Message::Chunk(chunk)) => self.current = chunk.into_iter(),
                Ok(Message::Failed(e)) => return self.fail(w, e),
                Ok(Message::Done) => {
                    self.workers[w].done = true;
                    self.live -= 1;
                }
                Err(_) => {
                    return self.fail(w, Error::Config("worker thread exited unexpectedly".into()))
                }
            }
        }
    }
}

impl Drop for ChunkedMerge {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
    }
}

/// Runs a prepared pipeline on `plan.num_workers` threads and merges them.
pub fn run_workers(prepared: &PreparedPipeline, plan: &WorkerPlan) -> Result<ChunkedMerge> {
    let n = plan.num_workers;
    let mut per_source = Vec::with_capacity(prepared.sources.len());
    for source in &prepared.sources {
        let parts = partition_shards(source.num_shards(), n).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", source.root().display())),
            other => other,
        })?;
        if source.num_shards() % n != 0 {
            log::warn!(
                "{} has {} shards, not divisible by {n} workers: some workers cycle faster and one \
                 window of output is no longer an exact permutation",
                source.root().display(),
                source.num_shards()
            );
        }
        per_source.push(parts);
    }
    let mut factories = Vec::with_capacity(n);
    for w in 0..n {
        let sources = prepared
            .sources
            .iter()
            .zip(&per_source)
            .map(|(s, parts)| s.restrict(&parts[w]))
            .collect::<Result<Vec<_>>>()?;
        let prepared = prepared.clone();
        let seed = plan.worker_seed(w);
        factories.push(move || prepared.build(sources, seed));
    }
    ChunkedMerge::spawn(factories, plan.chunk_size)
}

/// `prepare` followed by `run_workers`.
pub fn run_pipeline(
    registry: &Registry,
    spec: &PipelineSpec,
    plan: &WorkerPlan,
) -> Result<ChunkedMerge> {
    run_workers(&prepare(registry, spec)?, plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_examples() {
        assert_eq!(
            partition_shards(8, 4).unwrap(),
            vec![vec![0, 4], vec![1, 5], vec![2, 6], vec![3, 7]]
        );
        assert_eq!(
            partition_shards(5, 2).unwrap(),
            vec![vec![0, 2, 4], vec![1, 3]]
        );
        assert!(partition_shards(2, 4).is_err());
        assert!(partition_shards(3, 0).is_err());
    }

    #[test]
    fn partitions_are_disjoint_and_cover() {
        for shards in 1..20 {
            for workers in 1..=shards {
                let parts = partition_shards(shards, workers).unwrap();
                let mut all: Vec<usize> = parts.concat();
                all.sort();
                assert_eq!(all, (0..shards).collect::<Vec<_>>());
                if shards % workers == 0 {
                    assert!(parts.iter().all(|p| p.len() == shards / workers));
                }
            }
        }
    }

    fn labelled(label: &'static str, n: usize) -> impl FnOnce() -> Result<RecordStream> + Send {
        move || {
            Ok(Box::new((0..n).map(move |i| Record::new([format!("{label}{i}")]))) as RecordStream)
        }
    }

    fn merged(m: ChunkedMerge) -> Vec<String> {
        m.map(|r| r.unwrap().serialize()).collect()
    }

    #[test]
    fn chunked_round_robin_order() {
        let m = ChunkedMerge::spawn(vec![labelled("a", 9), labelled("b", 9)], 3).unwrap();
        let got = merged(m);
        let expected: Vec<&str> = vec![
            "a0", "a1", "a2", "b0", "b1", "b2", "a3", "a4", "a5", "b3", "b4", "b5", "a6", "a7",
            "a8", "b6", "b7", "b8",
        ];
        assert_eq!(got, expected);
    }

    #[test]
    fn uneven_finite_workers_drain_completely() {
        let m = ChunkedMerge::spawn(vec![labelled("a", 2), labelled("b", 7)], 3).unwrap();
        assert_eq!(
            merged(m),
            vec!["a0", "a1", "b0", "b1", "b2", "b3", "b4", "b5", "b6"]
        );
    }

    #[test]
    fn worker_error_flushes_partial_chunk_then_fails() {
        let failing = || -> Result<RecordStream> {
            let items: Vec<Result<Record>> = vec![
                Record::new(["x0"]),
                Record::new(["x1"]),
                Err(Error::Config("bad shard".into())),
            ];
            Ok(Box::new(items.into_iter()))
        };
        let ok = || -> Result<RecordStream> {
            Ok(Box::new((0..).map(|i| Record::new([format!("y{i}")]))))
        };
        let mut m = ChunkedMerge::spawn(
            vec![
                Box::new(failing) as Box<dyn FnOnce() -> Result<RecordStream> + Send>,
                Box::new(ok),
            ],
            5,
        )
        .unwrap();
        let mut seen = Vec::new();
        let err = loop {
            match m.next() {
                Some(Ok(r)) => seen.push(r.serialize()),
                Some(Err(e)) => break e,
                None => panic!("stream ended without error"),
            }
        };
        assert_eq!(&seen[..2], &["x0", "x1"]);
        assert!(matches!(err, Error::Worker { worker: 0, .. }));
        assert!(m.next().is_none());
        m.shutdown();
    }

    #[test]
    fn factory_error_is_reported() {
        let bad = || -> Result<RecordStream> { Err(Error::Config("no".into())) };
        let mut m = ChunkedMerge::spawn(vec![bad], 10).unwrap();
        assert!(matches!(
            m.next(),
            Some(Err(Error::Worker { worker: 0, .. }))
        ));
    }

    #[test]
    fn infinite_workers_can_be_shut_down() {
        let inf = |label: &'static str| {
            move || -> Result<RecordStream> {
                Ok(Box::new(
                    (0..).map(move |i| Record::new([format!("{label}{i}")])),
                ))
            }
        };
        let mut m = ChunkedMerge::spawn(vec![inf("a"), inf("b"), inf("c")], 4).unwrap();
        let first: Vec<_> = m
            .by_ref()
            .take(10)
            .map(|r| r.unwrap().serialize())
            .collect();
        assert_eq!(&first[..5], &["a0", "a1", "a2", "a3", "b0"]);
        m.shutdown();
    }

    #[test]
    fn plan_validation() {
        assert!(WorkerPlan::new(0, 10, 1).is_err());
        assert!(WorkerPlan::new(1, 0, 1).is_err());
        let p = WorkerPlan::new(2, 10, 1).unwrap();
        assert_ne!(p.worker_seed(0), p.worker_seed(1));
    }
}
