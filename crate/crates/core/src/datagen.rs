//! Training-pair synthesis and candidate filtering.
//!
//! Everything here works one line (or one example) at a time so corpora of
//! any size stream through in constant memory. The per-line functions are
//! pure; the iterator adapters add line bookkeeping and a drop report.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::score::MultiRefExample;
use crate::tokenize::{TokenSequence, TokenizerOptions};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Origin {
    RoundTrip(String),
    MultiRef(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::RoundTrip(pivot) => write!(f, "roundtrip:{pivot}"),
            Origin::MultiRef(set) => write!(f, "multiref:{set}"),
        }
    }
}

/// A (wordy, concise) training pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub source: TokenSequence,
    pub target: TokenSequence,
    pub origin: Origin,
}

impl SentencePair {
    pub fn compression(&self) -> f64 {
        self.target.len() as f64 / self.source.len() as f64
    }

    /// `source<TAB>target` using the original text of both sides.
    pub fn to_tsv(&self) -> String {
        format!("{}\t{}", self.source.raw.trim(), self.target.raw.trim())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterRules {
    pub min_words: usize,
    pub require_balanced_quotes: bool,
    pub min_compression: f64,
    pub max_compression: f64,
}

impl Default for FilterRules {
    fn default() -> Self {
        FilterRules {
            min_words: 15,
            require_balanced_quotes: true,
            min_compression: 0.5,
            max_compression: 0.999,
        }
    }
}

impl FilterRules {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x <= 1.0;
        if !in_unit(self.min_compression) || !in_unit(self.max_compression) {
            return Err(Error::InvalidParameter(format!(
                "compression bounds must lie in (0, 1], got [{}, {}]",
                self.min_compression, self.max_compression
            )));
        }
        if self.min_compression > self.max_compression {
            return Err(Error::InvalidParameter(format!(
                "min compression {} exceeds max compression {}",
                self.min_compression, self.max_compression
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropReason {
    Identical,
    EqualLength,
    Compression,
    MinWords,
    Quotes,
    TooFewReferences,
}

impl DropReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DropReason::Identical => "identical",
            DropReason::EqualLength => "equal_length",
            DropReason::Compression => "compression",
            DropReason::MinWords => "min_words",
            DropReason::Quotes => "quotes",
            DropReason::TooFewReferences => "too_few_references",
        }
    }
}

/// Per-rule drop counts. `input == kept + sum(dropped)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DropReport {
    pub input: u64,
    pub kept: u64,
    pub dropped: BTreeMap<&'static str, u64>,
}

impl DropReport {
    pub fn record_kept(&mut self) {
        self.input += 1;
        self.kept += 1;
    }

    pub fn record_drop(&mut self, reason: DropReason) {
        self.input += 1;
        *self.dropped.entry(reason.as_str()).or_default() += 1;
    }

    pub fn record<T>(&mut self, outcome: &Outcome<T>) {
        match outcome {
            Outcome::Kept(_) => self.record_kept(),
            Outcome::Dropped(r) => self.record_drop(*r),
        }
    }

    pub fn merge(&mut self, other: &DropReport) {
        self.input += other.input;
        self.kept += other.kept;
        for (k, v) in &other.dropped {
            *self.dropped.entry(k).or_default() += v;
        }
    }

    pub fn dropped_total(&self) -> u64 {
        self.dropped.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    Kept(T),
    Dropped(DropReason),
}

impl<T> Outcome<T> {
    pub fn kept(self) -> Option<T> {
        match self {
            Outcome::Kept(t) => Some(t),
            Outcome::Dropped(_) => None,
        }
    }
}

fn reject_tabs(text: &str) -> Result<()> {
    if text.contains('\t') {
        Err(Error::TabInText)
    } else {
        Ok(())
    }
}

/// Orients one original/round-trip line pair, longer side as source.
pub fn pair_line(
    original: &str,
    roundtrip: &str,
    rules: &FilterRules,
    tokenizer: &TokenizerOptions,
    pivot: &str,
) -> Result<Outcome<SentencePair>> {
    reject_tabs(original)?;
    reject_tabs(roundtrip)?;
    let a = tokenizer.apply(original);
    let b = tokenizer.apply(roundtrip);
    if a.tokens == b.tokens {
        return Ok(Outcome::Dropped(DropReason::Identical));
    }
    if a.len() == b.len() {
        return Ok(Outcome::Dropped(DropReason::EqualLength));
    }
    let (source, target) = if a.len() > b.len() { (a, b) } else { (b, a) };
    let pair = SentencePair {
        source,
        target,
        origin: Origin::RoundTrip(pivot.to_owned()),
    };
    let ratio = pair.compression();
    if ratio < rules.min_compression || ratio > rules.max_compression {
        return Ok(Outcome::Dropped(DropReason::Compression));
    }
    Ok(Outcome::Kept(pair))
}

/// Streaming round-trip pairing over two line-aligned inputs.
///
/// Yields one outcome per line; the first line present in only one input
/// produces [`Error::StreamDivergence`] and ends the stream.
pub struct RoundTripPairs<A, B> {
    originals: A,
    roundtrips: B,
    rules: FilterRules,
    tokenizer: TokenizerOptions,
    pivot: String,
    line: usize,
    report: DropReport,
    done: bool,
}

pub fn pair_roundtrip<A, B>(
    originals: A,
    roundtrips: B,
    rules: FilterRules,
    tokenizer: TokenizerOptions,
    pivot: &str,
) -> RoundTripPairs<A::IntoIter, B::IntoIter>
where
    A: IntoIterator,
    B: IntoIterator,
    A::Item: AsRef<str>,
    B::Item: AsRef<str>,
{
    RoundTripPairs {
        originals: originals.into_iter(),
        roundtrips: roundtrips.into_iter(),
        rules,
        tokenizer,
        pivot: pivot.to_owned(),
        line: 0,
        report: DropReport::default(),
        done: false,
    }
}

impl<A, B> RoundTripPairs<A, B> {
    pub fn report(&self) -> &DropReport {
        &self.report
    }

    pub fn into_report(self) -> DropReport {
        self.report
    }
}

impl<A, B> Iterator for RoundTripPairs<A, B>
where
    A: Iterator,
    B: Iterator,
    A::Item: AsRef<str>,
    B::Item: AsRef<str>,
{
    type Item = Result<Outcome<SentencePair>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let (o, r) = (self.originals.next(), self.roundtrips.next());
        self.line += 1;
        let divergence = |longer: &str, shorter: &str| Error::StreamDivergence {
            line: self.line,
            longer: longer.into(),
            shorter: shorter.into(),
        };
        let result = match (o, r) {
            (None, None) => {
                self.done = true;
                return None;
            }
            (Some(_), None) => Err(divergence("originals", "roundtrips")),
            (None, Some(_)) => Err(divergence("roundtrips", "originals")),
            (Some(o), Some(r)) => pair_line(
                o.as_ref(),
                r.as_ref(),
                &self.rules,
                &self.tokenizer,
                &self.pivot,
            ),
        };
        match &result {
            Ok(outcome) => self.report.record(outcome),
            Err(_) => self.done = true,
        }
        Some(result)
    }
}

/// Lines per parallel batch in [`pair_roundtrip_parallel`].
pub const BATCH_LINES: usize = 16 * 1024;

/// Batched, multi-threaded [`pair_roundtrip`]. Kept pairs reach `sink` in
/// input order; memory is bounded by one batch.
#[allow(clippy::too_many_arguments)]
pub fn pair_roundtrip_parallel<A, B, F>(
    originals: A,
    roundtrips: B,
    rules: &FilterRules,
    tokenizer: &TokenizerOptions,
    pivot: &str,
    workers: usize,
    mut sink: F,
) -> Result<DropReport>
where
    A: IntoIterator<Item = Result<String>>,
    B: IntoIterator<Item = Result<String>>,
    F: FnMut(&SentencePair) -> Result<()>,
{
    let pool = crate::parallel::pool(workers)?;
    let mut originals = originals.into_iter();
    let mut roundtrips = roundtrips.into_iter();
    let mut report = DropReport::default();
    let mut line = 0usize;
    let mut batch: Vec<(String, String)> = Vec::with_capacity(BATCH_LINES);
    loop {
        batch.clear();
        let first_line = line + 1;
        let mut finished = false;
        while batch.len() < BATCH_LINES {
            let (o, r) = (originals.next(), roundtrips.next());
            line += 1;
            match (o, r) {
                (None, None) => {
                    finished = true;
                    break;
                }
                (Some(o), Some(r)) => batch.push((o?, r?)),
                (o, _) => {
                    let (longer, shorter) = if o.is_some() {
                        ("originals", "roundtrips")
                    } else {
                        ("roundtrips", "originals")
                    };
                    // lines before the divergence are still emitted
                    process_batch(
                        &pool,
                        &batch,
                        first_line,
                        rules,
                        tokenizer,
                        pivot,
                        &mut report,
                        &mut sink,
                    )?;
                    return Err(Error::StreamDivergence {
                        line,
                        longer: longer.into(),
                        shorter: shorter.into(),
                    });
                }
            }
        }
        process_batch(
            &pool,
            &batch,
            first_line,
            rules,
            tokenizer,
            pivot,
            &mut report,
            &mut sink,
        )?;
        if finished {
            return Ok(report);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn process_batch<F>(
    pool: &rayon::ThreadPool,
    batch: &[(String, String)],
    first_line: usize,
    rules: &FilterRules,
    tokenizer: &TokenizerOptions,
    pivot: &str,
    report: &mut DropReport,
    sink: &mut F,
) -> Result<()>
where
    F: FnMut(&SentencePair) -> Result<()>,
{
    use rayon::prelude::*;
    let outcomes: Vec<Result<Outcome<SentencePair>>> = pool.install(|| {
        batch
            .par_iter()
            .map(|(o, r)| pair_line(o, r, rules, tokenizer, pivot))
            .collect()
    });
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome.map_err(|e| e.on_line(first_line + i))?;
        report.record(&outcome);
        if let Outcome::Kept(pair) = outcome {
            sink(&pair)?;
        }
    }
    Ok(())
}

/// Longest reference becomes the source, shortest the target; ties go to
/// the lowest index.
pub fn derive_pair(example: &MultiRefExample, set_id: &str) -> Outcome<SentencePair> {
    let refs = &example.references;
    if refs.len() < 2 {
        return Outcome::Dropped(DropReason::TooFewReferences);
    }
    let mut longest = 0;
    let mut shortest = 0;
    for (k, r) in refs.iter().enumerate() {
        if r.len() > refs[longest].len() {
            longest = k;
        }
        if r.len() < refs[shortest].len() {
            shortest = k;
        }
    }
    if refs[longest].len() == refs[shortest].len() {
        return Outcome::Dropped(DropReason::EqualLength);
    }
    Outcome::Kept(SentencePair {
        source: refs[longest].clone(),
        target: refs[shortest].clone(),
        origin: Origin::MultiRef(set_id.to_owned()),
    })
}

/// Applies [`derive_pair`] over a stream of examples, tallying drops.
pub fn derive_multiref<'a, I>(
    examples: I,
    set_id: &'a str,
    report: &'a mut DropReport,
) -> impl Iterator<Item = SentencePair> + 'a
where
    I: IntoIterator<Item = MultiRefExample> + 'a,
{
    examples.into_iter().filter_map(move |ex| {
        let outcome = derive_pair(&ex, set_id);
        report.record(&outcome);
        outcome.kept()
    })
}

fn is_inner_apostrophe(prev: Option<char>, next: Option<char>) -> bool {
    matches!((prev, next), (Some(p), Some(n)) if p.is_alphanumeric() && n.is_alphanumeric())
}

/// Straight double and single quotes pair up; curly quotes balance open
/// against close. Apostrophes between two word characters are ignored.
pub fn quotes_balanced(text: &str) -> bool {
    let chars: Vec<char> = text.chars().collect();
    let (mut straight_double, mut straight_single) = (0usize, 0usize);
    let (mut open_double, mut close_double) = (0usize, 0usize);
    let (mut open_single, mut close_single) = (0usize, 0usize);
    for (i, &c) in chars.iter().enumerate() {
        let inner = || {
            is_inner_apostrophe(
                i.checked_sub(1).map(|p| chars[p]),
                chars.get(i + 1).copied(),
            )
        };
        match c {
            '"' => straight_double += 1,
            '\'' if !inner() => straight_single += 1,
            '\u{201C}' => open_double += 1,
            '\u{201D}' => close_double += 1,
            '\u{2018}' => open_single += 1,
            '\u{2019}' if !inner() => close_single += 1,
            _ => {}
        }
    }
    straight_double % 2 == 0
        && straight_single % 2 == 0
        && open_double == close_double
        && open_single == close_single
}

/// The first rule a candidate sentence violates, if any.
pub fn check_candidate(sentence: &TokenSequence, rules: &FilterRules) -> Option<DropReason> {
    if sentence.len() < rules.min_words {
        return Some(DropReason::MinWords);
    }
    if rules.require_balanced_quotes && !quotes_balanced(&sentence.raw) {
        return Some(DropReason::Quotes);
    }
    None
}

/// Keeps sentences that pass every rule; drops are tallied in the report.
pub fn filter_candidates<'a, I>(
    sentences: I,
    rules: &'a FilterRules,
    report: &'a mut DropReport,
) -> impl Iterator<Item = TokenSequence> + 'a
where
    I: IntoIterator<Item = TokenSequence> + 'a,
{
    sentences
        .into_iter()
        .filter_map(move |s| match check_candidate(&s, rules) {
            None => {
                report.record_kept();
                Some(s)
            }
            Some(reason) => {
                report.record_drop(reason);
                None
            }
        })
}
