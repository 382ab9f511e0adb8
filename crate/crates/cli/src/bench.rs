use std::ffi::OsString;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use streamgen::bench::{
    baseline_decompress, count_consumer, dual_pool_consumer, measure_baseline, measure_stream,
    synth_corpus, PoolConfig, SortKey, SynthSpec, ThroughputReport, DEFAULT_BENCH_LINES,
    DEFAULT_WARMUP_LINES,
};
use streamgen::pipeline::{prepare, PipelineSpec, Registry};
use streamgen::shard::{open_source, ShardCache, SourceOptions, DEFAULT_SHARD_SIZE};
use streamgen::workers::{run_workers, WorkerPlan, DEFAULT_CHUNK_SIZE};

use crate::gen::{EXIT_CONFIG, EXIT_DATA, EXIT_OK};

/// Producer and consumer throughput measurements.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct BenchArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic sharded corpus with unique record ids.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        lines: u64,
        #[arg(long, default_value_t = 16)]
        shards: usize,
        #[arg(long, default_value_t = 3)]
        fields: usize,
        #[arg(long, default_value_t = 12)]
        mean_tokens: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "id")]
        id_prefix: String,
    },
    /// Measure a producer: `baseline` (plain decompression) or a pipeline name.
    Produce {
        producer: String,
        #[arg(required = true)]
        sources: Vec<PathBuf>,
        #[arg(short = 'n', long, default_value_t = 1)]
        num_workers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Timed lines, after the warm-up.
        #[arg(long, default_value_t = DEFAULT_BENCH_LINES)]
        lines: u64,
        #[arg(long, default_value_t = DEFAULT_WARMUP_LINES)]
        warmup: u64,
        #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
        #[arg(long, default_value_t = DEFAULT_SHARD_SIZE)]
        shard_size: usize,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long, num_args = 1.., value_name = "W")]
        mix_weights: Option<Vec<f64>>,
        /// Pipeline parameter as key=value; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_key_value)]
        params: Vec<(String, String)>,
        /// Write the produced lines to standard output instead of timing them.
        #[arg(long)]
        emit: bool,
        /// Also print a key=value summary line.
        #[arg(long)]
        summary: bool,
    },
    /// Consume lines from standard input and report the rate.
    Consume {
        /// Use the dual-pool consumer with pools of this many records.
        #[arg(long, value_name = "N")]
        pool: Option<usize>,
        #[arg(long, default_value_t = 1, value_name = "T")]
        threads: usize,
        #[arg(long, default_value_t = 64, value_name = "B")]
        batch: usize,
        /// Cap consumption at this many records per second.
        #[arg(long, value_name = "R")]
        rate: Option<f64>,
        #[arg(long, value_enum, default_value_t = Key::Tokens)]
        sort_key: Key,
        /// Seconds between interim reports.
        #[arg(long, value_name = "S")]
        report_interval: Option<f64>,
        #[arg(long)]
        summary: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Key {
    Tokens,
    Chars,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))
}

fn report(err: &mut dyn Write, r: &ThroughputReport, summary: bool) {
    let _ = writeln!(err, "{r}");
    if summary {
        let _ = writeln!(err, "{}", r.summary_line());
    }
}

fn fail(err: &mut dyn Write, e: &streamgen::Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_DATA
    }
}

pub fn run<I, T>(
    argv: I,
    input: Box<dyn Read + Send>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match BenchArgs::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            let info = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            let _ = if info {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return if info { EXIT_OK } else { EXIT_CONFIG };
        }
    };
    match args.command {
        Command::Synth {
            out: dir,
            lines,
            shards,
            fields,
            mean_tokens,
            seed,
            id_prefix,
        } => {
            let spec = SynthSpec {
                lines,
                shards,
                fields,
                mean_tokens,
                seed,
                id_prefix,
            };
            match synth_corpus(&dir, &spec) {
                Ok(path) => {
                    let _ = writeln!(
                        err,
                        "wrote {lines} lines in {shards} shards to {}",
                        path.display()
                    );
                    EXIT_OK
                }
                Err(e) => fail(err, &e),
            }
        }
        Command::Produce {
            producer,
            sources,
            num_workers,
            seed,
            lines,
            warmup,
            chunk_size,
            shard_size,
            cache_dir,
            mix_weights,
            params,
            emit,
            summary,
        } => {
            let opts = SourceOptions {
                shard_size,
                cache: cache_dir.map(ShardCache::new).unwrap_or_default(),
            };
            if producer == "baseline" {
                let shards = sources
                    .iter()
                    .enumerate()
                    .map(|(i, p)| open_source(p, i, &opts))
                    .collect::<streamgen::Result<Vec<_>>>()
                    .map(|srcs| {
                        srcs.iter()
                            .flat_map(|s| s.shards().iter().map(|sh| sh.path.clone()))
                            .collect::<Vec<_>>()
                    });
                let shards = match shards {
                    Ok(s) => s,
                    Err(e) => return fail(err, &e),
                };
                if emit {
                    let mut w = io::BufWriter::new(out);
                    return match baseline_decompress(&shards, &mut w) {
                        Ok(_) => EXIT_OK,
                        Err(streamgen::Error::Io { source, .. })
                            if source.kind() == io::ErrorKind::BrokenPipe =>
                        {
                            EXIT_OK
                        }
                        Err(e) => fail(err, &e),
                    };
                }
                return match measure_baseline(&shards) {
                    Ok(r) => {
                        report(err, &r, summary);
                        EXIT_OK
                    }
                    Err(e) => fail(err, &e),
                };
            }
            let mut spec = PipelineSpec::new(&producer, sources)
                .with_seed(seed)
                .with_source_options(opts);
            spec.mix_weights = mix_weights;
            spec.params = params.into_iter().collect();
            let merged = WorkerPlan::new(num_workers, chunk_size, seed)
                .and_then(|plan| run_workers(&prepare(&Registry::default(), &spec)?, &plan));
            let mut merged = match merged {
                Ok(m) => m,
                Err(e) => return fail(err, &e),
            };
            if emit {
                let mut w = io::BufWriter::new(out);
                let mut buf = Vec::new();
                for item in merged.by_ref().take((warmup + lines) as usize) {
                    match item {
                        Ok(r) => {
                            buf.clear();
                            r.write_to(&mut buf);
                            buf.push(b'\n');
                            if w.write_all(&buf).is_err() {
                                break;
                            }
                        }
                        Err(e) => return fail(err, &e),
                    }
                }
                let _ = w.flush();
                merged.shutdown();
                return EXIT_OK;
            }
            let result = measure_stream(&producer, num_workers, merged.by_ref(), warmup, lines);
            merged.shutdown();
            match result {
                Ok(r) => {
                    report(err, &r, summary);
                    EXIT_OK
                }
                Err(e) => fail(err, &e),
            }
        }
        Command::Consume {
            pool,
            threads,
            batch,
            rate,
            sort_key,
            report_interval,
            summary,
        } => {
            let interval = report_interval.map(Duration::from_secs_f64);
            let Some(capacity) = pool else {
                return match count_consumer(BufReader::new(input), interval, None, err) {
                    Ok(r) => {
                        if summary {
                            let _ = writeln!(err, "{}", r.summary_line());
                        }
                        EXIT_OK
                    }
                    Err(e) => {
                        let _ = writeln!(err, "error: reading input: {e}");
                        EXIT_DATA
                    }
                };
            };
            let cfg = PoolConfig::new(capacity, threads, batch).map(|mut c| {
                c.max_rate = rate;
                c.sort_key = match sort_key {
                    Key::Tokens => SortKey::SourceTokens,
                    Key::Chars => SortKey::SourceChars,
                };
                c
            });
            let cfg = match cfg {
                Ok(c) => c,
                Err(e) => return fail(err, &e),
            };
            let lines = BufReader::new(input).split(b'\n').map_while(Result::ok);
            let start = Instant::now();
            let mut pool = match dual_pool_consumer(lines, cfg) {
                Ok(p) => p,
                Err(e) => return fail(err, &e),
            };
            let mut n = 0u64;
            let mut batches = 0u64;
            for b in pool.by_ref() {
                n += b.records.len() as u64;
                batches += 1;
            }
            let r =
                ThroughputReport::new("dual-pool", threads, n, pool.malformed(), start.elapsed());
            let _ = writeln!(err, "{batches} batches");
            report(err, &r, summary);
            EXIT_OK
        }
    }
}
