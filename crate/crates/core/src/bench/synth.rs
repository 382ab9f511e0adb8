use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{self, StreamRng};

/// Shape of a synthetic corpus.
///
/// Each record is `source \t target \t id [\t metaN ...]`. Ids are
/// `<id_prefix><n>` and unique across the corpus. Every text field starts
/// with a token whose first two letters are upper case, so lower-casing the
/// source and title-casing either side always change the text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSpec {
    pub lines: u64,
    pub shards: usize,
    /// Total fields per record, at least 3.
    pub fields: usize,
    pub mean_tokens: usize,
    pub seed: u64,
    pub id_prefix: String,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            lines: 1000,
            shards: 1,
            fields: 3,
            mean_tokens: 10,
            seed: 0,
            id_prefix: "id".into(),
        }
    }
}

fn push_token(rng: &mut StreamRng, out: &mut String, leading: bool) {
    let len = rng.random_range(2..=8);
    for i in 0..len {
        let c = char::from(b'a' + rng.random_range(0..26u8));
        let upper = (leading && i < 2) || rng.random_bool(0.25);
        out.push(if upper { c.to_ascii_uppercase() } else { c });
    }
}

fn push_text(rng: &mut StreamRng, out: &mut String, mean_tokens: usize) {
    let n = rng.random_range(1..=2 * mean_tokens - 1);
    for t in 0..n {
        if t > 0 {
            out.push(' ');
        }
        push_token(rng, out, t == 0);
    }
}

/// Writes `spec.shards` gzip shards named `part-NNNNN.tsv.gz` into `dir`, each
/// holding a contiguous block of records. Output bytes depend only on `spec`.
pub fn synth_corpus(dir: &Path, spec: &SynthSpec) -> Result<PathBuf> {
    if spec.lines == 0 || spec.shards == 0 || spec.shards as u64 > spec.lines {
        return Err(Error::Config(format!(
            "need 1 <= shards <= lines, got {} shards for {} lines",
            spec.shards, spec.lines
        )));
    }
    if spec.fields < 3 || spec.mean_tokens == 0 {
        return Err(Error::Config(
            "need at least 3 fields and 1 mean token".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = seed::rng(seed::derive(spec.seed, "synth"));
    let mut line = String::with_capacity(256);
    let shards = spec.shards as u64;
    for s in 0..shards {
        let begin = s * spec.lines / shards;
        let end = (s + 1) * spec.lines / shards;
        let path = dir.join(format!("part-{s:05}.tsv.gz"));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = GzEncoder::new(BufWriter::new(file), Compression::fast());
        for id in begin..end {
            line.clear();
            push_text(&mut rng, &mut line, spec.mean_tokens);
            line.push('\t');
            push_text(&mut rng, &mut line, spec.mean_tokens);
            line.push('\t');
            line.push_str(&spec.id_prefix);
            line.push_str(&id.to_string());
            for m in 3..spec.fields {
                line.push_str("\tmeta");
                line.push_str(&m.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())
                .map_err(|e| Error::io(&path, e))?;
        }
        out.finish()
            .and_then(|mut w| w.flush())
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shard::{open_source, read_shard, SourceOptions};
    use std::collections::HashSet;

    #[test]
    fn shards_are_even_and_ids_unique() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            lines: 300,
            shards: 3,
            ..SynthSpec::default()
        };
        synth_corpus(dir.path(), &spec).unwrap();
        let src = open_source(dir.path(), 0, &SourceOptions::default()).unwrap();
        let mut ids = HashSet::new();
        for shard in src.shards() {
            let recs: Vec<_> = read_shard(shard).unwrap().map(|r| r.unwrap()).collect();
            assert_eq!(recs.len(), 100);
            for r in recs {
                assert_eq!(r.len(), 3);
                assert!(r.source().chars().take(2).all(|c| c.is_ascii_uppercase()));
                ids.insert(r.get(2).unwrap().to_owned());
            }
        }
        assert_eq!(ids.len(), 300);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            lines: 200,
            shards: 2,
            fields: 5,
            ..SynthSpec::default()
        };
        synth_corpus(a.path(), &spec).unwrap();
        synth_corpus(b.path(), &spec).unwrap();
        for name in ["part-00000.tsv.gz", "part-00001.tsv.gz"] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap()
            );
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let dir = tempfile::tempdir().unwrap();
        let bad = |s: SynthSpec| synth_corpus(dir.path(), &s).is_err();
        assert!(bad(SynthSpec {
            lines: 0,
            ..SynthSpec::default()
        }));
        assert!(bad(SynthSpec {
            lines: 2,
            shards: 3,
            ..SynthSpec::default()
        }));
        assert!(bad(SynthSpec {
            fields: 2,
            ..SynthSpec::default()
        }));
    }
}
