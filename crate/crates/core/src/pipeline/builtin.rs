use std::sync::Arc;

use super::{BuildContext, PipelineDef};
use crate::error::{Error, Result};
use crate::ops::{
    concat_documents, mix_variants, Augment, Identity, LowerCaseSource, MatchFilter, MixSpec,
    RecordStreamExt, TagSource, TitleCaseBoth, URL_PATTERN,
};
use crate::record::{Record, RecordStream};
use crate::shard::{Processor, ShardOrder};

/// Weights of (unchanged, lower-cased source, title-cased both sides).
pub const DEFAULT_CASE_WEIGHTS: [f64; 3] = [0.95, 0.04, 0.01];

pub(super) fn definitions() -> Vec<PipelineDef> {
    vec![
        PipelineDef::new("default", 1, Arc::new(default_pipeline)),
        PipelineDef::new("robust-case", 2, Arc::new(robust_case_pipeline))
            .with_param(
                "case-weights",
                "0.95,0.04,0.01",
                "comma-separated weights of the unchanged, lower-cased and title-cased variants",
            )
            .with_param("bt-tag", "[BT]", "tag prepended to backtranslated sources"),
        PipelineDef::new("url-filter", 1, Arc::new(url_filter_pipeline))
            .with_param(
                "pattern",
                URL_PATTERN,
                "regular expression whose matches must agree",
            )
            .with_param("fields", "0,1", "the two fields to compare"),
        PipelineDef::new("documents", 1, Arc::new(documents_pipeline))
            .with_param("docid-field", "2", "field holding the document id")
            .with_param(
                "max-sentences",
                "8",
                "maximum sentences per pseudo-document",
            )
            .with_param(
                "separator",
                " <sep> ",
                "text placed between joined sentences",
            ),
    ]
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid {what} {raw:?}")))
        })
        .collect()
}

/// One source, shuffled shard by shard, no transformations.
pub fn default_pipeline(ctx: &BuildContext) -> Result<RecordStream> {
    Ok(ctx.source_stream(0).boxed())
}

fn case_processor(weights: MixSpec, tag: Option<TagSource>) -> Processor {
    Arc::new(move |records, shard| {
        let variants: Vec<Box<dyn Augment>> = vec![
            Box::new(Identity),
            Box::new(LowerCaseSource),
            Box::new(TitleCaseBoth),
        ];
        let mixed = mix_variants(records, variants, &weights, shard.rng("case-mix"))?;
        Ok(match &tag {
            // Tagging after case mixing keeps the tag itself out of the casing.
            Some(tag) => mixed.augment(tag.clone()).boxed(),
            None => mixed.boxed(),
        })
    })
}

/// Parallel plus backtranslated data, each with random case variants; the
/// backtranslated side is tagged, then both are mixed by the top-level weights.
pub fn robust_case_pipeline(ctx: &BuildContext) -> Result<RecordStream> {
    let weights = parse_list::<f64>(ctx.param("case-weights"), "case weights")?;
    if weights.len() != 3 {
        return Err(Error::InvalidWeights(format!(
            "case-weights needs 3 values, got {}",
            weights.len()
        )));
    }
    let case_weights = MixSpec::new(weights)?;
    let tag = TagSource::new(ctx.param("bt-tag"))?;
    let parallel = ctx
        .source_stream(0)
        .with_processor(case_processor(case_weights.clone(), None))
        .boxed();
    let backtranslated = ctx
        .source_stream(1)
        .with_processor(case_processor(case_weights, Some(tag)))
        .boxed();
    ctx.mix_sources(vec![parallel, backtranslated])
}

/// Default pipeline minus records whose two fields disagree on pattern matches.
pub fn url_filter_pipeline(ctx: &BuildContext) -> Result<RecordStream> {
    let fields = parse_list::<usize>(ctx.param("fields"), "field list")?;
    let [a, b] = fields[..] else {
        return Err(Error::Config("--fields needs exactly two indices".into()));
    };
    let filter = MatchFilter::new(ctx.param("pattern"), (a, b))?
        .with_counter(ctx.counters.counter("url-filter.dropped"));
    let processor: Processor =
        Arc::new(move |records, _| Ok(records.match_filter(filter.clone()).boxed()));
    Ok(ctx.source_stream(0).with_processor(processor).boxed())
}

/// Pseudo-documents: shards are read in file order, consecutive records with
/// the same document id are joined into chunks of at most `max-sentences`.
pub fn documents_pipeline(ctx: &BuildContext) -> Result<RecordStream> {
    let docid: usize = ctx.parse_param("docid-field")?;
    let max: usize = ctx.parse_param("max-sentences")?;
    let separator = ctx.param("separator").to_owned();
    // Validate once up front rather than on the first shard.
    concat_documents(std::iter::empty::<Result<Vec<Record>>>(), max, &separator)?;
    let processor: Processor = Arc::new(move |records, _| {
        Ok(Box::new(concat_documents(
            records.group_documents(docid),
            max,
            &separator,
        )?))
    });
    Ok(ctx
        .source_stream(0)
        .with_order(ShardOrder::FileOrder)
        .with_processor(processor)
        .boxed())
}
