//! Analysis metrics: compression ratio, Flesch-Kincaid grade, per-token
//! IDF information density and 1:1 synonym substitution counts.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::align::{edits_between, CostModel, EditSet, MergeMode};
use crate::datagen::SentencePair;
use crate::error::{Error, Result};
use crate::parallel::with_workers;
use crate::tokenize::{count_syllables, is_word, TokenSequence};

/// Corpus compression: total target tokens over total source tokens.
pub fn compression_ratio<'a, I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a SentencePair>,
{
    let mut any = false;
    let (mut src, mut tgt) = (0usize, 0usize);
    for p in pairs {
        any = true;
        src += p.source.len();
        tgt += p.target.len();
    }
    if !any {
        return Err(Error::NoPairs);
    }
    if src == 0 {
        return Err(Error::EmptySequence);
    }
    Ok(tgt as f64 / src as f64)
}

/// Flesch-Kincaid grade of one sentence. Punctuation-only tokens are not words.
pub fn fk_grade(tokens: &TokenSequence) -> Result<f64> {
    let mut words = 0u64;
    let mut syllables = 0u64;
    for t in tokens.tokens.iter().filter(|t| is_word(t)) {
        words += 1;
        syllables += u64::from(count_syllables(t)?);
    }
    if words == 0 {
        return Err(Error::NoWords);
    }
    let words = words as f64;
    Ok(0.39 * words + 11.8 * (syllables as f64 / words) - 15.59)
}

/// Logarithm base for IDF. Natural log by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogBase(f64);

impl LogBase {
    pub const E: LogBase = LogBase(std::f64::consts::E);

    pub fn new(base: f64) -> Result<Self> {
        if base.is_finite() && base > 0.0 && base != 1.0 {
            Ok(LogBase(base))
        } else {
            Err(Error::InvalidParameter(format!(
                "log base must be positive and not 1, got {base}"
            )))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    fn log(&self, x: f64) -> f64 {
        if self.0 == std::f64::consts::E {
            x.ln()
        } else {
            x.ln() / self.0.ln()
        }
    }
}

impl Default for LogBase {
    fn default() -> Self {
        LogBase::E
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" | "ln" => Ok(LogBase::E),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("invalid log base {other:?}")))
                .and_then(LogBase::new),
        }
    }
}

/// Document frequencies over a collection of `doc_count` documents.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DfTable {
    pub doc_count: u64,
    pub df: BTreeMap<String, u64>,
}

impl DfTable {
    pub fn add_document<S: AsRef<str>>(&mut self, tokens: &[S]) {
        self.doc_count += 1;
        let unique: HashSet<&str> = tokens.iter().map(AsRef::as_ref).collect();
        for t in unique {
            *self.df.entry(t.to_owned()).or_default() += 1;
        }
    }

    /// Table of two disjoint document shards.
    pub fn merge(&mut self, other: &DfTable) {
        self.doc_count += other.doc_count;
        for (t, n) in &other.df {
            *self.df.entry(t.clone()).or_default() += n;
        }
    }

    pub fn df(&self, token: &str) -> u64 {
        self.df.get(token).copied().unwrap_or(0)
    }

    /// `log(N / df)`; unseen tokens are treated as `df = 1`.
    pub fn idf(&self, token: &str, base: LogBase) -> f64 {
        let df = self.df(token).max(1);
        base.log(self.doc_count as f64 / df as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.doc_count == 0 {
            return Err(Error::NoDocuments);
        }
        if let Some((t, n)) = self.df.iter().find(|(_, &n)| n == 0 || n > self.doc_count) {
            return Err(Error::Malformed(format!(
                "df({t}) = {n} outside 1..={}",
                self.doc_count
            )));
        }
        Ok(())
    }

    /// `#N=<doc_count>` header, then `token<TAB>df` rows in byte order.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "#N={}", self.doc_count)?;
        for (t, n) in &self.df {
            writeln!(w, "{t}\t{n}")?;
        }
        w.flush()
    }

    /// Parses the table file format. Errors carry 1-based line numbers.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::Malformed(e.to_string()))?,
            None => return Err(Error::NoDocuments),
        };
        let doc_count = header
            .strip_prefix("#N=")
            .and_then(|n| n.trim().parse::<u64>().ok())
            .ok_or_else(|| {
                Error::Malformed(format!("expected `#N=<count>` header, found {header:?}"))
                    .on_line(1)
            })?;
        let mut table = DfTable {
            doc_count,
            df: BTreeMap::new(),
        };
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::Malformed(e.to_string()).on_line(lineno))?;
            if line.is_empty() {
                continue;
            }
            let (token, n) = line
                .split_once('\t')
                .and_then(|(t, n)| Some((t, n.parse::<u64>().ok()?)))
                .ok_or_else(|| {
                    Error::Malformed(format!("expected `token<TAB>df`, found {line:?}"))
                        .on_line(lineno)
                })?;
            if n == 0 || n > doc_count {
                return Err(
                    Error::Malformed(format!("df({token}) = {n} outside 1..={doc_count}"))
                        .on_line(lineno),
                );
            }
            if table.df.insert(token.to_owned(), n).is_some() {
                return Err(Error::Malformed(format!("duplicate token {token:?}")).on_line(lineno));
            }
        }
        table.validate()?;
        Ok(table)
    }
}

/// Builds a table from a stream of tokenized documents.
pub fn build_df_table<I, D, S>(documents: I) -> Result<DfTable>
where
    I: IntoIterator<Item = D>,
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut table = DfTable::default();
    for doc in documents {
        table.add_document(doc.as_ref());
    }
    if table.doc_count == 0 {
        return Err(Error::NoDocuments);
    }
    Ok(table)
}

/// Shard-and-merge build across `workers` threads.
pub fn build_df_table_parallel(documents: &[TokenSequence], workers: usize) -> Result<DfTable> {
    if documents.is_empty() {
        return Err(Error::NoDocuments);
    }
    with_workers(workers, || {
        documents
            .par_iter()
            .fold(DfTable::default, |mut t, d| {
                t.add_document(&d.tokens);
                t
            })
            .reduce(DfTable::default, |mut a, b| {
                a.merge(&b);
                a
            })
    })
}

pub fn mean_token_idf(tokens: &TokenSequence, table: &DfTable, base: LogBase) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::EmptySequence);
    }
    let sum: f64 = tokens.tokens.iter().map(|t| table.idf(t, base)).sum();
    Ok(sum / tokens.len() as f64)
}

/// Symmetric set of lowercase synonym pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    pairs: HashSet<(String, String)>,
}

impl SynonymLexicon {
    fn key(a: &str, b: &str) -> (String, String) {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Reflexive pairs are ignored.
    pub fn insert(&mut self, a: &str, b: &str) {
        let key = Self::key(a, b);
        if key.0 != key.1 {
            self.pairs.insert(key);
        }
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&Self::key(a, b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Reads `word1<TAB>word2` rows; blank lines are skipped.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lex = SynonymLexicon::default();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Malformed(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line.split_once('\t').ok_or_else(|| {
                Error::Malformed(format!("expected `word1<TAB>word2`, found {line:?}"))
                    .on_line(i + 1)
            })?;
            lex.insert(a.trim(), b.trim());
        }
        Ok(lex)
    }
}

impl<A: AsRef<str>, B: AsRef<str>> FromIterator<(A, B)> for SynonymLexicon {
    fn from_iter<T: IntoIterator<Item = (A, B)>>(iter: T) -> Self {
        let mut lex = SynonymLexicon::default();
        for (a, b) in iter {
            lex.insert(a.as_ref(), b.as_ref());
        }
        lex
    }
}

/// Number of one-token-for-one-token spans that swap in a listed synonym.
pub fn count_synonym_subs(edits: &EditSet, lexicon: &SynonymLexicon) -> u64 {
    edits
        .spans
        .iter()
        .filter(|s| s.end - s.start == 1 && s.replacement.len() == 1)
        .filter(|s| lexicon.contains(&edits.source.tokens[s.start], &s.replacement[0]))
        .count() as u64
}

/// `(after - before) / |before|`, undefined when `before` is zero.
pub fn relative_change(before: f64, after: f64) -> Option<f64> {
    (before != 0.0).then(|| (after - before) / before.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyzeConfig {
    pub log_base: LogBase,
    pub merge_mode: MergeMode,
    pub costs: CostModel,
    pub workers: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            log_base: LogBase::E,
            merge_mode: MergeMode::Merged,
            costs: CostModel::default(),
            workers: 1,
        }
    }
}

/// Per-sentence analysis values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRow {
    pub id: String,
    pub compression: f64,
    pub fk_src: f64,
    pub fk_hyp: f64,
    pub mean_idf_src: f64,
    pub mean_idf_hyp: f64,
    pub synonym_subs: Option<u64>,
    pub similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub sentences: usize,
    pub compression_ratio: f64,
    pub fk_src: f64,
    pub fk_hyp: f64,
    pub fk_relative_change: Option<f64>,
    pub mean_idf_src: f64,
    pub mean_idf_hyp: f64,
    pub idf_relative_change: Option<f64>,
    pub synonym_substitutions_per_sentence: Option<f64>,
    pub mean_similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub report: MetricsReport,
    pub rows: Vec<AnalysisRow>,
}

fn in_sentence(index: usize, side: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::InSentence {
        index,
        side,
        source: Box::new(e),
    }
}

fn analyze_one(
    index: usize,
    src: &TokenSequence,
    hyp: &TokenSequence,
    table: &DfTable,
    lexicon: Option<&SynonymLexicon>,
    cfg: &AnalyzeConfig,
) -> Result<AnalysisRow> {
    if src.is_empty() {
        return Err(in_sentence(index, "source")(Error::EmptySequence));
    }
    let fk_src = fk_grade(src).map_err(in_sentence(index, "source"))?;
    let fk_hyp = fk_grade(hyp).map_err(in_sentence(index, "hypothesis"))?;
    let mean_idf_src =
        mean_token_idf(src, table, cfg.log_base).map_err(in_sentence(index, "source"))?;
    let mean_idf_hyp =
        mean_token_idf(hyp, table, cfg.log_base).map_err(in_sentence(index, "hypothesis"))?;
    let synonym_subs = lexicon.map(|lex| {
        let edits = edits_between(src, hyp, cfg.merge_mode, &cfg.costs);
        count_synonym_subs(&edits, lex)
    });
    Ok(AnalysisRow {
        id: (index + 1).to_string(),
        compression: hyp.len() as f64 / src.len() as f64,
        fk_src,
        fk_hyp,
        mean_idf_src,
        mean_idf_hyp,
        synonym_subs,
        similarity: None,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Analyzes line-aligned source/hypothesis sentences.
///
/// Sentence-level values are averaged in input order, so results do not
/// depend on the worker count.
pub fn analyze(
    sources: &[TokenSequence],
    hypotheses: &[TokenSequence],
    table: &DfTable,
    lexicon: Option<&SynonymLexicon>,
    similarity: Option<&[f64]>,
    cfg: &AnalyzeConfig,
) -> Result<Analysis> {
    if sources.len() != hypotheses.len() {
        return Err(Error::LengthMismatch {
            left_name: "sources".into(),
            left: sources.len(),
            right_name: "hypotheses".into(),
            right: hypotheses.len(),
        });
    }
    if let Some(sim) = similarity {
        if sim.len() != sources.len() {
            return Err(Error::LengthMismatch {
                left_name: "sources".into(),
                left: sources.len(),
                right_name: "similarity".into(),
                right: sim.len(),
            });
        }
    }
    if sources.is_empty() {
        return Err(Error::NoPairs);
    }
    table.validate()?;

    let mut rows = with_workers(cfg.workers, || {
        sources
            .par_iter()
            .zip(hypotheses.par_iter())
            .enumerate()
            .map(|(i, (s, h))| analyze_one(i, s, h, table, lexicon, cfg))
            .collect::<Result<Vec<_>>>()
    })??;
    if let Some(sim) = similarity {
        for (row, &v) in rows.iter_mut().zip(sim) {
            row.similarity = Some(v);
        }
    }

    let src_tokens: usize = sources.iter().map(TokenSequence::len).sum();
    let hyp_tokens: usize = hypotheses.iter().map(TokenSequence::len).sum();
    let fk_src = mean(rows.iter().map(|r| r.fk_src));
    let fk_hyp = mean(rows.iter().map(|r| r.fk_hyp));
    let mean_idf_src = mean(rows.iter().map(|r| r.mean_idf_src));
    let mean_idf_hyp = mean(rows.iter().map(|r| r.mean_idf_hyp));
    let synonym_substitutions_per_sentence = lexicon.map(|_| {
        mean(
            rows.iter()
                .map(|r| r.synonym_subs.unwrap_or_default() as f64),
        )
    });
    let report = MetricsReport {
        sentences: rows.len(),
        compression_ratio: hyp_tokens as f64 / src_tokens as f64,
        fk_src,
        fk_hyp,
        fk_relative_change: relative_change(fk_src, fk_hyp),
        mean_idf_src,
        mean_idf_hyp,
        idf_relative_change: relative_change(mean_idf_src, mean_idf_hyp),
        synonym_substitutions_per_sentence,
        mean_similarity: similarity.map(|s| mean(s.iter().copied())),
    };
    Ok(Analysis { report, rows })
}
