use super::Augment;
use crate::error::{Error, Result};
use crate::record::Record;

/// Prefixes field 0 with a tag and a single space.
#[derive(Debug, Clone)]
pub struct TagSource {
    tag: String,
}

impl TagSource {
    pub fn new(tag: &str) -> Result<Self> {
        if tag.is_empty() || tag.contains(['\t', '\n']) {
            return Err(Error::Config(format!(
                "invalid tag {tag:?}: must be non-empty without tabs or newlines"
            )));
        }
        Ok(TagSource {
            tag: tag.to_owned(),
        })
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }
}

impl Augment for TagSource {
    fn name(&self) -> &'static str {
        "tag_source"
    }

    fn apply(&mut self, mut record: Record, _ordinal: u64) -> Result<Record> {
        if let Some(source) = record.field_mut(0) {
            let mut tagged = String::with_capacity(self.tag.len() + 1 + source.len());
            tagged.push_str(&self.tag);
            tagged.push(' ');
            tagged.push_str(source);
            *source = tagged;
        }
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::testing::*;
    use crate::ops::RecordStreamExt;

    #[test]
    fn prefixes_source() {
        let out = rows(
            records(&[&["guten tag", "good day"], &["", ""]])
                .into_iter()
                .tag_source("[BT]")
                .unwrap(),
        );
        assert_eq!(
            out,
            vec![vec!["[BT] guten tag", "good day"], vec!["[BT] ", ""]]
        );
        let out = rows(
            records(&[&["hi", "hallo"]])
                .into_iter()
                .tag_source("<2de>")
                .unwrap(),
        );
        assert_eq!(out, vec![vec!["<2de> hi", "hallo"]]);
    }

    #[test]
    fn rejects_bad_tags() {
        assert!(TagSource::new("").is_err());
        assert!(TagSource::new("a\tb").is_err());
        assert!(TagSource::new("a\nb").is_err());
    }
}
