//! The record model and its TSV wire format.
//!
//! A record is one line of UTF-8 text split on tab characters. Field 0 is
//! conventionally the source segment and field 1 the target segment; anything
//! after that is metadata. Nothing here enforces a field count: pipelines and
//! operators state their own expectations.

use std::fmt;

use crate::error::{Error, Result};

/// A boxed, sendable record stream. Every operator consumes and produces one.
pub type RecordStream = Box<dyn Iterator<Item = Result<Record>> + Send>;

/// One parsed TSV row.
///
/// Invariants: at least one field, and no field contains a tab or a newline.
/// Together they make `Record::parse(r.serialize()) == r` hold for every
/// record that can be constructed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Record {
    fields: Vec<String>,
}

fn check_field(value: &str) -> Result<()> {
    if value.bytes().any(|b| b == b'\t' || b == b'\n') {
        return Err(Error::InvalidField(format!(
            "{value:?} contains a tab or newline"
        )));
    }
    Ok(())
}

impl Record {
    pub fn new<I, S>(fields: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let fields: Vec<String> = fields.into_iter().map(Into::into).collect();
        if fields.is_empty() {
            return Err(Error::InvalidField(
                "a record needs at least one field".into(),
            ));
        }
        for f in &fields {
            check_field(f)?;
        }
        Ok(Record { fields })
    }

    /// Parses one line (without its `\n`). A single trailing `\r` is dropped.
    pub fn parse(line: &[u8]) -> Result<Self> {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        let text = std::str::from_utf8(line).map_err(|e| Error::Malformed {
            offset: e.valid_up_to(),
        })?;
        Self::parse_str(text)
    }

    pub fn parse_str(line: &str) -> Result<Self> {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.contains('\n') {
            return Err(Error::InvalidField("line contains a newline".into()));
        }
        Ok(Record {
            fields: line.split('\t').map(str::to_owned).collect(),
        })
    }

    pub fn serialize(&self) -> String {
        self.fields.join("\t")
    }

    /// Appends the serialized record (no line terminator) to `buf`.
    pub fn write_to(&self, buf: &mut Vec<u8>) {
        for (i, f) in self.fields.iter().enumerate() {
            if i > 0 {
                buf.push(b'\t');
            }
            buf.extend_from_slice(f.as_bytes());
        }
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.fields.get(index).map(String::as_str)
    }

    pub fn source(&self) -> &str {
        &self.fields[0]
    }

    pub fn target(&self) -> Option<&str> {
        self.get(1)
    }

    /// Replaces an existing field.
    pub fn set(&mut self, index: usize, value: impl Into<String>) -> Result<()> {
        let value = value.into();
        check_field(&value)?;
        let len = self.fields.len();
        match self.fields.get_mut(index) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::InvalidField(format!(
                "field {index} out of range for a record with {len} fields"
            ))),
        }
    }

    /// Appends a new trailing field.
    pub fn push(&mut self, value: impl Into<String>) -> Result<()> {
        let value = value.into();
        check_field(&value)?;
        self.fields.push(value);
        Ok(())
    }

    /// Mutable access for in-crate transforms that cannot introduce tabs or newlines.
    pub(crate) fn field_mut(&mut self, index: usize) -> Option<&mut String> {
        self.fields.get_mut(index)
    }

    pub fn into_fields(self) -> Vec<String> {
        self.fields
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, field) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str("\t")?;
            }
            f.write_str(field)?;
        }
        Ok(())
    }
}
