//! Stream operators.
//!
//! Every operator is a lazy iterator adapter over `Result<Record>` items, so
//! augmentations stack by plain method chaining:
//!
//! ```no_run
//! use streamgen::ops::{RecordStreamExt, MatchFilter};
//! # fn demo(stream: streamgen::RecordStream) -> streamgen::Result<()> {
//! let out = stream
//!     .match_filter(MatchFilter::url())
//!     .lower_case_source()
//!     .tag_source("<2de>")?
//!     .boxed();
//! # drop(out); Ok(()) }
//! ```
//!
//! Errors travel through operators untouched. Operators never touch fields
//! they do not name.
//!
//! # Writing an operator
//!
//! A per-record transformation only needs [`Augment`]:
//!
//! ```
//! use streamgen::ops::Augment;
//! use streamgen::{Record, Result};
//!
//! /// Appends the source length as a trailing metadata field.
//! struct SourceLength;
//!
//! impl Augment for SourceLength {
//!     fn name(&self) -> &'static str {
//!         "source_length"
//!     }
//!
//!     fn apply(&mut self, mut record: Record, _ordinal: u64) -> Result<Record> {
//!         let n = record.source().chars().count();
//!         record.push(n.to_string())?;
//!         Ok(record)
//!     }
//! }
//! ```
//!
//! It can then be used with [`RecordStreamExt::augment`] or as one variant of
//! [`mix_variants`]. Operators that change the number of records (filters,
//! groupers, model-backed segmenters or aligners) are ordinary iterator
//! adapters; [`Identity`] is the minimal example of the `Augment` contract.
//! Stochastic operators should take their generator from
//! [`crate::shard::ShardContext::rng`] under a label of their own.

mod case;
mod documents;
mod filter;
mod mix;
mod tag;

pub use case::{title_case, LowerCaseSource, TitleCaseBoth};
pub use documents::{concat_documents, ConcatDocuments, GroupDocuments, DEFAULT_DOCID_FIELD};
pub use filter::{Filtered, MatchFilter, URL_PATTERN};
pub use mix::{mix, mix_variants, Mix, MixSpec, VariantMix};
pub use tag::TagSource;

use crate::error::Result;
use crate::record::{Record, RecordStream};

/// A one-record-in, one-record-out transformation.
pub trait Augment: Send {
    fn name(&self) -> &'static str;

    /// `ordinal` is the 0-based position of the record in the operator's input,
    /// for error messages.
    fn apply(&mut self, record: Record, ordinal: u64) -> Result<Record>;
}

impl<A: Augment + ?Sized> Augment for Box<A> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn apply(&mut self, record: Record, ordinal: u64) -> Result<Record> {
        (**self).apply(record, ordinal)
    }
}

/// Leaves records unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Augment for Identity {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn apply(&mut self, record: Record, _ordinal: u64) -> Result<Record> {
        Ok(record)
    }
}

pub struct Augmented<I, A> {
    inner: I,
    augment: A,
    ordinal: u64,
}

impl<I, A> Iterator for Augmented<I, A>
where
    I: Iterator<Item = Result<Record>>,
    A: Augment,
{
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = self.inner.next()?;
        let ordinal = self.ordinal;
        self.ordinal += 1;
        Some(record.and_then(|r| self.augment.apply(r, ordinal)))
    }
}

pub trait RecordStreamExt: Iterator<Item = Result<Record>> + Sized {
    fn augment<A: Augment>(self, augment: A) -> Augmented<Self, A> {
        Augmented {
            inner: self,
            augment,
            ordinal: 0,
        }
    }

    fn lower_case_source(self) -> Augmented<Self, LowerCaseSource> {
        self.augment(LowerCaseSource)
    }

    fn title_case_both(self) -> Augmented<Self, TitleCaseBoth> {
        self.augment(TitleCaseBoth)
    }

    fn tag_source(self, tag: &str) -> Result<Augmented<Self, TagSource>> {
        Ok(self.augment(TagSource::new(tag)?))
    }

    fn match_filter(self, filter: MatchFilter) -> Filtered<Self> {
        filter.apply(self)
    }

    fn group_documents(self, docid_field: usize) -> GroupDocuments<Self> {
        GroupDocuments::new(self, docid_field)
    }

    fn boxed(self) -> RecordStream
    where
        Self: Send + 'static,
    {
        Box::new(self)
    }
}

impl<I: Iterator<Item = Result<Record>>> RecordStreamExt for I {}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    #[test]
    fn identity_passes_everything() {
        let input = records(&[&["a", "b", "c"], &["d"]]);
        let out = rows(input.into_iter().augment(Identity));
        assert_eq!(out, vec![vec!["a", "b", "c"], vec!["d"]]);
    }

    #[test]
    fn errors_pass_through_operators() {
        let input: Vec<Result<Record>> = vec![
            Ok(Record::new(["A", "B"]).unwrap()),
            Err(crate::Error::Config("boom".into())),
        ];
        let out: Vec<_> = input.into_iter().lower_case_source().collect();
        assert!(out[0].is_ok());
        assert!(out[1].is_err());
    }
}
