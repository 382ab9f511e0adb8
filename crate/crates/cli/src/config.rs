use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{CommandFactory, FromArgMatches, Parser};
use streamgen::pipeline::{PipelineSpec, Registry};
use streamgen::shard::{ShardCache, SourceOptions, DEFAULT_SHARD_SIZE};
use streamgen::workers::{WorkerPlan, DEFAULT_CHUNK_SIZE};

/// Generate an infinite stream of training records on standard output.
///
/// Pipeline-specific parameters are passed as `--<param> <value>` (or
/// `--<param>=<value>`) and forwarded to the pipeline.
#[derive(Debug, Parser)]
#[command(name = "gen", version)]
struct GenArgs {
    /// Registered pipeline name.
    pipeline: String,

    /// One data source per pipeline input: a directory of shards or a single
    /// TSV file (sharded automatically and cached).
    #[arg(required = true)]
    sources: Vec<PathBuf>,

    /// Top-level mixing weights, one per source.
    #[arg(long, num_args = 1.., value_name = "W")]
    mix_weights: Option<Vec<f64>>,

    #[arg(short = 'n', long, default_value_t = 1, value_name = "N")]
    num_workers: usize,

    /// Random seed; drawn from entropy when absent.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,

    /// Lines per shard when a source is a single file.
    #[arg(long, default_value_t = DEFAULT_SHARD_SIZE, value_name = "L")]
    shard_size: usize,

    /// Lines read from each worker per merge turn, and the output flush size.
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE, value_name = "C")]
    chunk_size: usize,

    /// Stop after this many records.
    #[arg(long, value_name = "M")]
    max_records: Option<u64>,

    /// Where automatically created shards are kept.
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub pipeline: String,
    pub sources: Vec<PathBuf>,
    pub mix_weights: Option<Vec<f64>>,
    pub num_workers: usize,
    pub seed: Option<u64>,
    pub shard_size: usize,
    pub chunk_size: usize,
    pub max_records: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    pub params: BTreeMap<String, String>,
}

fn command(registry: &Registry) -> clap::Command {
    let mut help = String::from("Pipelines:\n");
    for def in registry.iter() {
        help.push_str(&format!(
            "  {} ({} source{})\n",
            def.name,
            def.arity,
            if def.arity == 1 { "" } else { "s" }
        ));
        for p in &def.params {
            help.push_str(&format!(
                "      --{} <value>  {} [default: {}]\n",
                p.name, p.help, p.default
            ));
        }
    }
    GenArgs::command().after_help(help)
}

/// Splits `--key value` pairs that the fixed flag set does not know about out
/// of `argv`, returning the remaining arguments and the extracted params.
fn extract_params(
    argv: Vec<OsString>,
    known: &[String],
) -> Result<(Vec<OsString>, BTreeMap<String, String>), String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut params = BTreeMap::new();
    let mut args = argv.into_iter();
    if let Some(bin) = args.next() {
        rest.push(bin);
    }
    while let Some(arg) = args.next() {
        let Some(text) = arg.to_str().and_then(|s| s.strip_prefix("--")) else {
            rest.push(arg);
            continue;
        };
        if text.is_empty() {
            rest.push(arg);
            rest.extend(args.by_ref());
            break;
        }
        let (key, inline) = match text.split_once('=') {
            Some((k, v)) => (k, Some(v.to_owned())),
            None => (text, None),
        };
        if known.iter().any(|k| k == key) {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => args
                .next()
                .and_then(|v| v.into_string().ok())
                .ok_or_else(|| format!("parameter --{key} needs a value"))?,
        };
        params.insert(key.to_owned(), value);
    }
    Ok((rest, params))
}

pub enum Parsed {
    Config(CliConfig),
    /// Help or version text; print it to stdout and exit 0.
    Info(String),
}

impl CliConfig {
    /// Parses a full argument vector (program name first). Errors carry a
    /// message ready for standard error.
    pub fn parse<I, T>(argv: I, registry: &Registry) -> Result<Parsed, String>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString>,
    {
        let cmd = command(registry);
        let mut known: Vec<String> = cmd
            .get_arguments()
            .filter_map(|a| a.get_long().map(str::to_owned))
            .collect();
        known.extend(["help".to_owned(), "version".to_owned()]);
        let (rest, params) = extract_params(argv.into_iter().map(Into::into).collect(), &known)?;
        let matches = match cmd.try_get_matches_from(rest) {
            Ok(m) => m,
            Err(e) => {
                use clap::error::ErrorKind;
                let text = e.render().to_string();
                return match e.kind() {
                    ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Parsed::Info(text)),
                    _ => Err(text),
                };
            }
        };
        let args = GenArgs::from_arg_matches(&matches).map_err(|e| e.to_string())?;
        if args.max_records == Some(0) {
            return Err("--max-records must be at least 1".into());
        }
        if args.shard_size == 0 {
            return Err("--shard-size must be at least 1".into());
        }
        Ok(Parsed::Config(CliConfig {
            pipeline: args.pipeline,
            sources: args.sources,
            mix_weights: args.mix_weights,
            num_workers: args.num_workers,
            seed: args.seed,
            shard_size: args.shard_size,
            chunk_size: args.chunk_size,
            max_records: args.max_records,
            cache_dir: args.cache_dir,
            params,
        }))
    }

    pub fn pipeline_spec(&self, seed: u64) -> PipelineSpec {
        let cache = self
            .cache_dir
            .clone()
            .map(ShardCache::new)
            .unwrap_or_default();
        let mut spec = PipelineSpec::new(&self.pipeline, self.sources.iter().cloned())
            .with_seed(seed)
            .with_source_options(SourceOptions {
                shard_size: self.shard_size,
                cache,
            });
        spec.mix_weights = self.mix_weights.clone();
        spec.params = self.params.clone();
        spec
    }

    pub fn worker_plan(&self, seed: u64) -> streamgen::Result<WorkerPlan> {
        WorkerPlan::new(self.num_workers, self.chunk_size, seed)
    }
}
