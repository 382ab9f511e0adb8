use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use regex::Regex;

use crate::error::{Error, Result};
use crate::record::Record;

/// URLs that start with http(s) and end on a lowercase letter.
pub const URL_PATTERN: &str = r"\bhttps?:\S+[a-z]\b";

/// Keeps records whose two named fields contain the same multiset of pattern
/// matches. Dropped records are counted; clones share the counter.
#[derive(Debug, Clone)]
pub struct MatchFilter {
    regex: Regex,
    fields: (usize, usize),
    dropped: Arc<AtomicU64>,
}

impl MatchFilter {
    pub fn new(pattern: &str, fields: (usize, usize)) -> Result<Self> {
        Ok(MatchFilter {
            regex: Regex::new(pattern)?,
            fields,
            dropped: Arc::default(),
        })
    }

    /// [`URL_PATTERN`] over fields 0 and 1.
    pub fn url() -> Self {
        Self::new(URL_PATTERN, (0, 1)).expect("URL pattern compiles")
    }

    /// Counts drops into an existing counter (e.g. one shared by all workers).
    pub fn with_counter(mut self, counter: Arc<AtomicU64>) -> Self {
        self.dropped = counter;
        self
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }

    fn matches<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let mut found: Vec<&str> = self.regex.find_iter(text).map(|m| m.as_str()).collect();
        found.sort_unstable();
        found
    }

    pub fn keeps(&self, record: &Record, ordinal: u64) -> Result<bool> {
        let (a, b) = self.fields;
        let field = |i: usize| {
            record.get(i).ok_or_else(|| Error::Operator {
                operator: "match_filter",
                ordinal,
                message: format!("missing field {i} (record has {})", record.len()),
            })
        };
        Ok(self.matches(field(a)?) == self.matches(field(b)?))
    }

    pub fn apply<I>(self, inner: I) -> Filtered<I> {
        Filtered {
            inner,
            filter: self,
            ordinal: 0,
        }
    }
}

pub struct Filtered<I> {
    inner: I,
    filter: MatchFilter,
    ordinal: u64,
}

impl<I> Iterator for Filtered<I>
where
    I: Iterator<Item = Result<Record>>,
{
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let record = match self.inner.next()? {
                Ok(r) => r,
                Err(e) => return Some(Err(e)),
            };
            let ordinal = self.ordinal;
            self.ordinal += 1;
            match self.filter.keeps(&record, ordinal) {
                Ok(true) => return Some(Ok(record)),
                Ok(false) => {
                    self.filter.dropped.fetch_add(1, Ordering::Relaxed);
                }
                Err(e) => return Some(Err(e)),
            }
        }
    }
}
