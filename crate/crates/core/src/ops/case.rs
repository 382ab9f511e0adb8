use super::Augment;
use crate::error::{Error, Result};
use crate::record::Record;

/// Upper-cases the first character of every whitespace-delimited word and
/// lower-cases the rest, using full Unicode case mappings. Whitespace is kept
/// as is.
pub fn title_case(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word_start = true;
    for c in text.chars() {
        if c.is_whitespace() {
            out.push(c);
            word_start = true;
        } else if word_start {
            out.extend(c.to_uppercase());
            word_start = false;
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// Lower-cases field 0 only.
#[derive(Debug, Clone, Copy, Default)]
pub struct LowerCaseSource;

impl Augment for LowerCaseSource {
    fn name(&self) -> &'static str {
        "lower_case_source"
    }

    fn apply(&mut self, mut record: Record, _ordinal: u64) -> Result<Record> {
        if let Some(source) = record.field_mut(0) {
            if source.chars().any(char::is_uppercase) {
                *source = source.to_lowercase();
            }
        }
        Ok(record)
    }
}

/// Title-cases fields 0 and 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct TitleCaseBoth;

impl Augment for TitleCaseBoth {
    fn name(&self) -> &'static str {
        "title_case_both"
    }

    fn apply(&mut self, mut record: Record, ordinal: u64) -> Result<Record> {
        if record.len() < 2 {
            return Err(Error::Operator {
                operator: self.name(),
                ordinal,
                message: format!("needs 2 fields, record has {}", record.len()),
            });
        }
        for i in 0..2 {
            let field = record.field_mut(i).expect("checked length");
            *field = title_case(field);
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
    fn lower_case_touches_only_source() {
        let out = rows(
            records(&[&["Hello World", "Ziel"], &["ABC"], &["", "x"]])
                .into_iter()
                .lower_case_source(),
        );
        assert_eq!(
            out,
            vec![vec!["hello world", "Ziel"], vec!["abc"], vec!["", "x"]]
        );
    }

    #[test]
    fn lower_case_is_unicode_aware() {
        let out = rows(
            records(&[&["ÜBER ΣΑΣ", "T"]])
                .into_iter()
                .lower_case_source(),
        );
        assert_eq!(out[0][0], "über σας");
    }

    #[test]
    fn title_case_examples() {
        let out = rows(
            records(&[
                &["hello world", "guten tag"],
                &["HELLO", "TAG"],
                &["a b", "c d", "doc7"],
            ])
            .into_iter()
            .title_case_both(),
        );
        assert_eq!(
            out,
            vec![
                vec!["Hello World", "Guten Tag"],
                vec!["Hello", "Tag"],
                vec!["A B", "C D", "doc7"],
            ]
        );
    }

    #[test]
    fn title_case_keeps_whitespace_and_handles_unicode() {
        assert_eq!(
            title_case("  éCOLE\u{a0}straße  x"),
            "  École\u{a0}Straße  X"
        );
        assert_eq!(title_case(""), "");
        assert_eq!(title_case("they're"), "They're");
    }

    #[test]
    fn title_case_needs_two_fields() {
        let out: Vec<_> = records(&[&["a", "b"], &["only"]])
            .into_iter()
            .title_case_both()
            .collect();
        match &out[1] {
            Err(Error::Operator {
                operator, ordinal, ..
            }) => {
                assert_eq!(*operator, "title_case_both");
                assert_eq!(*ordinal, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
