//! File formats: line-aligned text, multi-reference JSONL/TSV, edit JSONL.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::align::{EditRecord, EditSet};
use crate::error::{Error, Result};
use crate::score::MultiRefExample;
use crate::tokenize::TokenizerOptions;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Streams the lines of a UTF-8 file. Errors name the file and line.
pub struct Lines {
    path: PathBuf,
    inner: std::io::Lines<BufReader<File>>,
    line: usize,
    reject_tabs: bool,
}

impl Lines {
    pub fn open(path: &Path) -> Result<Self> {
        Ok(Lines {
            path: path.to_owned(),
            inner: open(path)?.lines(),
            line: 0,
            reject_tabs: true,
        })
    }

    /// Allows tab characters (for TSV inputs).
    pub fn allow_tabs(mut self) -> Self {
        self.reject_tabs = false;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Number of lines read so far.
    pub fn line(&self) -> usize {
        self.line
    }
}

impl Iterator for Lines {
    type Item = Result<String>;

    fn next(&mut self) -> Option<Self::Item> {
        let next = self.inner.next()?;
        self.line += 1;
        let at = |e: Error| e.at(&self.path, Some(self.line));
        Some(match next {
            Err(e) => Err(at(Error::Malformed(e.to_string()))),
            Ok(s) if self.reject_tabs && s.contains('\t') => Err(at(Error::TabInText)),
            Ok(s) => Ok(s.strip_suffix('\r').map(str::to_owned).unwrap_or(s)),
        })
    }
}

/// Reads every line of a text file; an empty file is a data error.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let lines = Lines::open(path)?.collect::<Result<Vec<_>>>()?;
    if lines.is_empty() {
        return Err(Error::Malformed("empty input file".into()).at(path, None));
    }
    Ok(lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefsFormat {
    /// Pick by extension (`.tsv` is TSV), otherwise JSONL.
    #[default]
    Auto,
    Jsonl,
    Tsv,
}

impl FromStr for RefsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(RefsFormat::Auto),
            "jsonl" => Ok(RefsFormat::Jsonl),
            "tsv" => Ok(RefsFormat::Tsv),
            other => Err(Error::InvalidParameter(format!(
                "unknown references format {other:?} (expected auto, jsonl or tsv)"
            ))),
        }
    }
}

impl RefsFormat {
    pub fn resolve(self, path: &Path) -> RefsFormat {
        match self {
            RefsFormat::Auto => {
                let tsv = path
                    .extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
                if tsv {
                    RefsFormat::Tsv
                } else {
                    RefsFormat::Jsonl
                }
            }
            other => other,
        }
    }
}

#[derive(Deserialize)]
struct ExampleRecord {
    #[serde(default)]
    id: Option<serde_json::Value>,
    source: String,
    references: Vec<String>,
}

fn id_string(id: Option<serde_json::Value>, line: usize) -> String {
    match id {
        Some(serde_json::Value::String(s)) => s,
        Some(other) => other.to_string(),
        None => line.to_string(),
    }
}

/// Parses one multi-reference record. Blank lines yield `None`.
pub fn parse_example(
    text: &str,
    line: usize,
    format: RefsFormat,
    tokenizer: &TokenizerOptions,
) -> Result<Option<MultiRefExample>> {
    if text.trim().is_empty() {
        return Ok(None);
    }
    let (id, source, references) = match format {
        RefsFormat::Tsv => {
            let mut fields = text.split('\t');
            let source = fields.next().unwrap_or_default().to_owned();
            let refs: Vec<String> = fields.map(str::to_owned).collect();
            (line.to_string(), source, refs)
        }
        RefsFormat::Jsonl | RefsFormat::Auto => {
            let rec: ExampleRecord =
                serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
            for r in std::iter::once(&rec.source).chain(&rec.references) {
                if r.contains('\t') {
                    return Err(Error::TabInText);
                }
            }
            (id_string(rec.id, line), rec.source, rec.references)
        }
    };
    if references.is_empty() {
        return Err(Error::NoReferences);
    }
    Ok(Some(MultiRefExample {
        id,
        source: tokenizer.apply(&source),
        references: references.iter().map(|r| tokenizer.apply(r)).collect(),
    }))
}

/// Streams multi-reference examples from a JSONL or TSV file.
pub fn example_stream(
    path: &Path,
    format: RefsFormat,
    tokenizer: TokenizerOptions,
) -> Result<impl Iterator<Item = Result<MultiRefExample>>> {
    let format = format.resolve(path);
    let path_buf = path.to_owned();
    let lines = Lines::open(path)?.allow_tabs();
    Ok(lines.enumerate().filter_map(move |(i, line)| {
        let parsed = line.and_then(|text| {
            parse_example(&text, i + 1, format, &tokenizer)
                .map_err(|e| e.at(&path_buf, Some(i + 1)))
        });
        parsed.transpose()
    }))
}

/// Reads all examples; an empty file is a data error.
pub fn read_examples(
    path: &Path,
    format: RefsFormat,
    tokenizer: TokenizerOptions,
) -> Result<Vec<MultiRefExample>> {
    let examples = example_stream(path, format, tokenizer)?.collect::<Result<Vec<_>>>()?;
    if examples.is_empty() {
        return Err(Error::Malformed("no examples".into()).at(path, None));
    }
    Ok(examples)
}

/// Writes one edit record as a JSON line.
pub fn write_edit_record<W: Write>(mut w: W, id: &str, edits: &EditSet) -> Result<()> {
    let record = EditRecord {
        id: id.to_owned(),
        spans: edits.spans.clone(),
    };
    let line = serde_json::to_string(&record).map_err(|e| Error::Malformed(e.to_string()))?;
    writeln!(w, "{line}").map_err(|e| Error::io("<output>", e))
}
