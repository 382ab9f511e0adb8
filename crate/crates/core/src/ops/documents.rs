use std::collections::VecDeque;
use std::mem;

use crate::error::{Error, Result};
use crate::record::Record;

pub const DEFAULT_DOCID_FIELD: usize = 2;

/// Groups runs of consecutive records that share a document id. Only adjacent
/// records merge; the last group is emitted when the input ends.
pub struct GroupDocuments<I> {
    inner: I,
    docid_field: usize,
    doc: Vec<Record>,
    prev: Option<String>,
    ordinal: u64,
    done: bool,
}

impl<I> GroupDocuments<I> {
    pub fn new(inner: I, docid_field: usize) -> Self {
        GroupDocuments {
            inner,
            docid_field,
            doc: Vec::new(),
            prev: None,
            ordinal: 0,
            done: false,
        }
    }
}

impl<I> Iterator for GroupDocuments<I>
where
    I: Iterator<Item = Result<Record>>,
{
    type Item = Result<Vec<Record>>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let record = match self.inner.next() {
                Some(Ok(r)) => r,
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                None => {
                    self.done = true;
                    break;
                }
            };
            let ordinal = self.ordinal;
            self.ordinal += 1;
            let Some(docid) = record.get(self.docid_field).map(str::to_owned) else {
                self.done = true;
                return Some(Err(Error::Operator {
                    operator: "group_documents",
                    ordinal,
                    message: format!(
                        "missing document id field {} (record has {})",
                        self.docid_field,
                        record.len()
                    ),
                }));
            };
            let boundary = !self.doc.is_empty() && self.prev.as_deref() != Some(docid.as_str());
            self.prev = Some(docid);
            if boundary {
                let finished = mem::replace(&mut self.doc, vec![record]);
                return Some(Ok(finished));
            }
            self.doc.push(record);
        }
        (!self.doc.is_empty()).then(|| Ok(mem::take(&mut self.doc)))
    }
}

/// Joins each document, in chunks of at most `max_sentences` records, into
/// one record: field 0 is the joined sources, field 1 the joined targets.
pub struct ConcatDocuments<G> {
    groups: G,
    max_sentences: usize,
    separator: String,
    pending: VecDeque<Record>,
    ordinal: u64,
}

pub fn concat_documents<G>(
    groups: G,
    max_sentences: usize,
    separator: &str,
) -> Result<ConcatDocuments<G>>
where
    G: Iterator<Item = Result<Vec<Record>>>,
{
    if max_sentences == 0 {
        return Err(Error::Config("max_sentences must be positive".into()));
    }
    if separator.contains(['\t', '\n']) {
        return Err(Error::Config(format!(
            "separator {separator:?} must not contain tabs or newlines"
        )));
    }
    Ok(ConcatDocuments {
        groups,
        max_sentences,
        separator: separator.to_owned(),
        pending: VecDeque::new(),
        ordinal: 0,
    })
}

impl<G> ConcatDocuments<G> {
    fn join(&self, chunk: &[Record], field: usize) -> Result<String> {
        let parts = chunk
            .iter()
            .map(|r| {
                r.get(field).ok_or_else(|| Error::Operator {
                    operator: "concat_documents",
                    ordinal: self.ordinal,
                    message: format!("member record lacks field {field}"),
                })
            })
            .collect::<Result<Vec<&str>>>()?;
        Ok(parts.join(&self.separator))
    }
}

impl<G> Iterator for ConcatDocuments<G>
where
    G: Iterator<Item = Result<Vec<Record>>>,
{
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(r) = self.pending.pop_front() {
            return Some(Ok(r));
        }
        let group = match self.groups.next()? {
            Ok(g) => g,
            Err(e) => return Some(Err(e)),
        };
        if group.is_empty() {
            return Some(Err(Error::Operator {
                operator: "concat_documents",
                ordinal: self.ordinal,
                message: "empty document".into(),
            }));
        }
        for chunk in group.chunks(self.max_sentences) {
            let joined = self
                .join(chunk, 0)
                .and_then(|src| Ok((src, self.join(chunk, 1)?)))
                .and_then(|(src, tgt)| Record::new([src, tgt]));
            match joined {
                Ok(r) => self.pending.push_back(r),
                Err(e) => {
                    self.pending.clear();
                    return Some(Err(e));
                }
            }
        }
        self.ordinal += 1;
        self.pending.pop_front().map(Ok)
    }
}
