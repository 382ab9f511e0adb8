//! Named pipelines.
//!
//! A pipeline is a recipe: given its opened data sources, a seed and a string
//! parameter map, it returns one infinite record stream. Recipes are
//! registered by name in a [`Registry`]; [`Registry::default`] holds the
//! built-ins.
//!
//! # Adding a pipeline
//!
//! ```
//! use std::sync::Arc;
//! use streamgen::ops::RecordStreamExt;
//! use streamgen::pipeline::{PipelineDef, Registry};
//!
//! let mut registry = Registry::default();
//! registry
//!     .register(
//!         PipelineDef::new("tagged", 1, Arc::new(|ctx| {
//!             let tag = ctx.param("tag").to_owned();
//!             Ok(ctx.source_stream(0).tag_source(&tag)?.boxed())
//!         }))
//!         .with_param("tag", "<2xx>", "tag prepended to every source segment"),
//!     )
//!     .unwrap();
//! ```
//!
//! Per-shard augmentation belongs in a [`Processor`](crate::shard::Processor)
//! attached with `SourceStream::with_processor`; see `builtin.rs` for examples.

mod builtin;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::AtomicU64;
use std::sync::{Arc, Mutex};

pub use builtin::{
    default_pipeline, documents_pipeline, robust_case_pipeline, url_filter_pipeline,
    DEFAULT_CASE_WEIGHTS,
};

use crate::error::{Error, Result};
use crate::ops::{mix, MixSpec};
use crate::record::RecordStream;
use crate::seed;
use crate::shard::{open_source, DataSource, SourceOptions, SourceStream};

/// Everything needed to build a pipeline's stream.
#[derive(Debug, Clone)]
pub struct PipelineSpec {
    pub name: String,
    pub sources: Vec<PathBuf>,
    /// Top-level weights over sources; uniform when absent.
    pub mix_weights: Option<Vec<f64>>,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    pub source_options: SourceOptions,
}

impl PipelineSpec {
    pub fn new<P: Into<PathBuf>>(name: &str, sources: impl IntoIterator<Item = P>) -> Self {
        PipelineSpec {
            name: name.to_owned(),
            sources: sources.into_iter().map(Into::into).collect(),
            mix_weights: None,
            seed: 0,
            params: BTreeMap::new(),
            source_options: SourceOptions::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mix_weights(mut self, weights: Vec<f64>) -> Self {
        self.mix_weights = Some(weights);
        self
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_owned(), value.to_owned());
        self
    }

    pub fn with_source_options(mut self, opts: SourceOptions) -> Self {
        self.source_options = opts;
        self
    }
}

#[derive(Debug, Clone)]
pub struct ParamDef {
    pub name: String,
    pub default: String,
    pub help: String,
}

pub type Builder = Arc<dyn Fn(&BuildContext) -> Result<RecordStream> + Send + Sync>;

#[derive(Clone)]
pub struct PipelineDef {
    pub name: String,
    pub arity: usize,
    pub params: Vec<ParamDef>,
    builder: Builder,
}

impl PipelineDef {
    pub fn new(name: &str, arity: usize, builder: Builder) -> Self {
        PipelineDef {
            name: name.to_owned(),
            arity,
            params: Vec::new(),
            builder,
        }
    }

    pub fn with_param(mut self, name: &str, default: &str, help: &str) -> Self {
        self.params.push(ParamDef {
            name: name.to_owned(),
            default: default.to_owned(),
            help: help.to_owned(),
        });
        self
    }

    pub fn build(&self, ctx: &BuildContext) -> Result<RecordStream> {
        (self.builder)(ctx)
    }
}

impl std::fmt::Debug for PipelineDef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PipelineDef")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct Registry {
    entries: BTreeMap<String, PipelineDef>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, def: PipelineDef) -> Result<()> {
        if self.entries.contains_key(&def.name) {
            return Err(Error::DuplicatePipeline(def.name));
        }
        self.entries.insert(def.name.clone(), def);
        Ok(())
    }

    pub fn resolve(&self, name: &str) -> Result<&PipelineDef> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::UnknownPipeline {
                name: name.to_owned(),
                known: self.names(),
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PipelineDef> {
        self.entries.values()
    }
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry::empty();
        for def in builtin::definitions() {
            r.register(def).expect("built-in names are unique");
        }
        r
    }
}

/// Named counters shared by every worker of a run (e.g. filter drops).
#[derive(Debug, Default)]
pub struct Counters {
    map: Mutex<BTreeMap<String, Arc<AtomicU64>>>,
}

impl Counters {
    pub fn counter(&self, name: &str) -> Arc<AtomicU64> {
        self.map
            .lock()
            .expect("counters lock")
            .entry(name.to_owned())
            .or_default()
            .clone()
    }

    pub fn snapshot(&self) -> Vec<(String, u64)> {
        self.map
            .lock()
            .expect("counters lock")
            .iter()
            .map(|(k, v)| (k.clone(), v.load(std::sync::atomic::Ordering::Relaxed)))
            .collect()
    }
}

/// What a builder sees: its (possibly partitioned) sources, a seed, the
/// top-level mix and resolved parameters.
pub struct BuildContext {
    pub sources: Vec<DataSource>,
    pub mix: MixSpec,
    pub seed: u64,
    pub counters: Arc<Counters>,
    params: BTreeMap<String, String>,
}

impl BuildContext {
    /// Resolved parameter value. Panics on names the pipeline did not declare.
    pub fn param(&self, name: &str) -> &str {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name:?} is not declared by this pipeline"))
    }

    pub fn parse_param<T: FromStr>(&self, name: &str) -> Result<T> {
        let raw = self.param(name);
        raw.parse()
            .map_err(|_| Error::Config(format!("invalid value {raw:?} for --{name}")))
    }

    /// Infinite stream over source `index`, with its own derived seed.
    pub fn source_stream(&self, index: usize) -> SourceStream {
        self.sources[index].stream(seed::derive_indexed(self.seed, "source", index as u64))
    }

    /// Merges per-source streams with the top-level weights.
    pub fn mix_sources(&self, streams: Vec<RecordStream>) -> Result<RecordStream> {
        if streams.len() == 1 {
            return Ok(streams.into_iter().next().expect("one stream"));
        }
        let rng = seed::rng(seed::derive(self.seed, "mix"));
        Ok(Box::new(mix(streams, &self.mix, rng)?))
    }
}

/// A validated spec with its sources opened, ready to be built once or once
/// per worker.
#[derive(Debug, Clone)]
pub struct PreparedPipeline {
    pub def: PipelineDef,
    pub sources: Vec<DataSource>,
    pub mix: MixSpec,
    pub params: BTreeMap<String, String>,
    pub counters: Arc<Counters>,
}

impl PreparedPipeline {
    pub fn context(&self, sources: Vec<DataSource>, seed: u64) -> BuildContext {
        BuildContext {
            sources,
            mix: self.mix.clone(),
            seed,
            counters: self.counters.clone(),
            params: self.params.clone(),
        }
    }

    pub fn build(&self, sources: Vec<DataSource>, seed: u64) -> Result<RecordStream> {
        self.def.build(&self.context(sources, seed))
    }
}

/// Validates `spec` against the registry and opens its sources.
pub fn prepare(registry: &Registry, spec: &PipelineSpec) -> Result<PreparedPipeline> {
    let def = registry.resolve(&spec.name)?.clone();
    if spec.sources.len() != def.arity {
        return Err(Error::Arity {
            pipeline: def.name.clone(),
            expected: def.arity,
            got: spec.sources.len(),
        });
    }
    let mix = match &spec.mix_weights {
        Some(w) if w.len() != def.arity => {
            return Err(Error::InvalidWeights(format!(
                "{} weights given for {} sources",
                w.len(),
                def.arity
            )))
        }
        Some(w) => MixSpec::new(w.clone())?,
        None => MixSpec::uniform(def.arity)?,
    };
    let mut params: BTreeMap<String, String> = def
        .params
        .iter()
        .map(|p| (p.name.clone(), p.default.clone()))
        .collect();
    for (k, v) in &spec.params {
        if !params.contains_key(k) {
            let known: Vec<&str> = def.params.iter().map(|p| p.name.as_str()).collect();
            return Err(Error::Config(format!(
                "pipeline {:?} has no parameter --{k} (known: {})",
                def.name,
                if known.is_empty() {
                    "none".to_owned()
                } else {
                    known.join(", ")
                }
            )));
        }
        params.insert(k.clone(), v.clone());
    }
    let sources = spec
        .sources
        .iter()
        .enumerate()
        .map(|(i, p)| open_source(p, i, &spec.source_options))
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedPipeline {
        def,
        sources,
        mix,
        params,
        counters: Arc::default(),
    })
}

/// Single-stream build: resolve, open, and construct with `spec.seed`.
pub fn build_stream(registry: &Registry, spec: &PipelineSpec) -> Result<RecordStream> {
    let prepared = prepare(registry, spec)?;
    prepared.build(prepared.sources.clone(), spec.seed)
}
