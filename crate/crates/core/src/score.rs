//! Multi-reference edit-span F-beta scoring and leave-one-out agreement.
//!
//! Each sentence is scored against every reference independently; the
//! reference giving the best sentence-level F-beta is kept (ties: more true
//! positives, then fewer false positives, then the lower index). Corpus
//! counts are plain sums, so the report does not depend on sentence order or
//! on how many workers computed it. A cumulative selection mode, in which
//! each sentence picks the reference maximizing the running corpus F-beta,
//! is available for parity with M2/ERRANT-style scorers.

use std::collections::HashMap;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::Serialize;

use crate::align::{edits_between, CostModel, EditSet, EditSpan, MergeMode};
use crate::error::{Error, Result};
use crate::parallel::with_workers;
use crate::tokenize::TokenSequence;

/// A source sentence and its independent reference rewrites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiRefExample {
    pub id: String,
    pub source: TokenSequence,
    pub references: Vec<TokenSequence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Counts { tp, fp, fn_ }
    }

    pub fn prf(&self, beta: f64) -> Prf {
        compute_prf(self.tp, self.fp, self.fn_, beta)
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

/// Precision, recall and F-beta from edit counts.
///
/// Precision is 1 when the system proposed no edits and recall is 1 when
/// the gold standard has none.
pub fn compute_prf(tp: u64, fp: u64, fn_: u64, beta: f64) -> Prf {
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        1.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    Prf {
        precision,
        recall,
        f_beta: f_beta(precision, recall, beta),
    }
}

/// `(1 + β²)·P·R / (β²·P + R)`, or 0 when the denominator vanishes.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Whether two edits are the same for scoring purposes.
fn edit_key(span: &EditSpan, ignore_case: bool) -> (usize, usize, Vec<String>) {
    let replacement = if ignore_case {
        span.replacement.iter().map(|t| t.to_lowercase()).collect()
    } else {
        span.replacement.clone()
    };
    (span.start, span.end, replacement)
}

/// Multiset match of hypothesis edits against one reference's edits.
pub fn match_edits(hyp: &EditSet, reference: &EditSet, ignore_case: bool) -> Counts {
    let mut gold: HashMap<_, u64> = HashMap::new();
    for span in &reference.spans {
        *gold.entry(edit_key(span, ignore_case)).or_default() += 1;
    }
    let mut tp = 0;
    for span in &hyp.spans {
        if let Some(n) = gold.get_mut(&edit_key(span, ignore_case)) {
            if *n > 0 {
                *n -= 1;
                tp += 1;
            }
        }
    }
    Counts::new(
        tp,
        hyp.spans.len() as u64 - tp,
        reference.spans.len() as u64 - tp,
    )
}

/// `a` beats `b`: higher F, then more tp, then fewer fp.
fn better(a: Counts, b: Counts, beta: f64) -> bool {
    let (fa, fb) = (a.prf(beta).f_beta, b.prf(beta).f_beta);
    if fa != fb {
        return fa > fb;
    }
    if a.tp != b.tp {
        return a.tp > b.tp;
    }
    a.fp < b.fp
}

fn best_index(candidates: &[Counts], beta: f64) -> usize {
    let mut best = 0;
    for (k, &c) in candidates.iter().enumerate().skip(1) {
        if better(c, candidates[best], beta) {
            best = k;
        }
    }
    best
}

/// Counts against every reference; all edit sets must share one source.
fn candidate_counts(hyp: &EditSet, refs: &[EditSet], ignore_case: bool) -> Result<Vec<Counts>> {
    if refs.is_empty() {
        return Err(Error::NoReferences);
    }
    if refs.iter().any(|r| r.source.tokens != hyp.source.tokens) {
        return Err(Error::InconsistentSource);
    }
    Ok(refs
        .iter()
        .map(|r| match_edits(hyp, r, ignore_case))
        .collect())
}

/// Scores one hypothesis against its references and returns the chosen
/// reference index with its counts.
pub fn score_sentence(
    hyp: &EditSet,
    refs: &[EditSet],
    beta: f64,
    ignore_case: bool,
) -> Result<(usize, Counts)> {
    let candidates = candidate_counts(hyp, refs, ignore_case)?;
    let k = best_index(&candidates, beta);
    Ok((k, candidates[k]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Best reference per sentence, independent of other sentences.
    #[default]
    Independent,
    /// Best reference given the counts accumulated so far (order dependent).
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreConfig {
    pub beta: f64,
    pub merge_mode: MergeMode,
    pub ignore_case: bool,
    pub selection: Selection,
    pub costs: CostModel,
    pub workers: usize,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            beta: 0.5,
            merge_mode: MergeMode::Merged,
            ignore_case: false,
            selection: Selection::Independent,
            costs: CostModel::default(),
            workers: 1,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter(
                "worker count must be at least 1".into(),
            ));
        }
        self.costs.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceScore {
    pub id: String,
    pub reference: usize,
    #[serde(flatten)]
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub beta: f64,
    pub sentences: usize,
    #[serde(flatten)]
    pub counts: Counts,
    #[serde(flatten)]
    pub prf: Prf,
    pub per_sentence: Vec<SentenceScore>,
}

impl ScoreReport {
    fn from_sentences(per_sentence: Vec<SentenceScore>, beta: f64) -> Self {
        let counts = per_sentence
            .iter()
            .fold(Counts::default(), |acc, s| acc + s.counts);
        ScoreReport {
            beta,
            sentences: per_sentence.len(),
            counts,
            prf: counts.prf(beta),
            per_sentence,
        }
    }
}

fn sentence_candidates(
    hyp: &TokenSequence,
    source: &TokenSequence,
    references: &[&TokenSequence],
    cfg: &ScoreConfig,
) -> Result<Vec<Counts>> {
    let hyp_edits = edits_between(source, hyp, cfg.merge_mode, &cfg.costs);
    let ref_edits: Vec<EditSet> = references
        .iter()
        .map(|r| edits_between(source, r, cfg.merge_mode, &cfg.costs))
        .collect();
    candidate_counts(&hyp_edits, &ref_edits, cfg.ignore_case)
}

fn select(ids: Vec<String>, candidates: Vec<Vec<Counts>>, cfg: &ScoreConfig) -> ScoreReport {
    let mut running = Counts::default();
    let per_sentence = ids
        .into_iter()
        .zip(candidates)
        .map(|(id, cands)| {
            let k = match cfg.selection {
                Selection::Independent => best_index(&cands, cfg.beta),
                Selection::Cumulative => {
                    let shifted: Vec<Counts> = cands.iter().map(|&c| running + c).collect();
                    cumulative_best(&shifted, cfg.beta)
                }
            };
            running += cands[k];
            SentenceScore {
                id,
                reference: k,
                counts: cands[k],
            }
        })
        .collect();
    ScoreReport::from_sentences(per_sentence, cfg.beta)
}

/// M2-style tie-breaking: F, then tp, then fewer fp, then fewer fn.
fn cumulative_best(candidates: &[Counts], beta: f64) -> usize {
    let mut best = 0;
    for (k, &c) in candidates.iter().enumerate().skip(1) {
        let b = candidates[best];
        let (fc, fb) = (c.prf(beta).f_beta, b.prf(beta).f_beta);
        let wins = fc > fb
            || (fc == fb && c.tp > b.tp)
            || (fc == fb && c.tp == b.tp && c.fp < b.fp)
            || (fc == fb && c.tp == b.tp && c.fp == b.fp && c.fn_ < b.fn_);
        if wins {
            best = k;
        }
    }
    best
}

/// Scores line-aligned hypotheses against multi-reference examples.
pub fn score_corpus(
    hypotheses: &[TokenSequence],
    examples: &[MultiRefExample],
    cfg: &ScoreConfig,
) -> Result<ScoreReport> {
    cfg.validate()?;
    if hypotheses.len() != examples.len() {
        return Err(Error::LengthMismatch {
            left_name: "hypotheses".into(),
            left: hypotheses.len(),
            right_name: "references".into(),
            right: examples.len(),
        });
    }
    let candidates = with_workers(cfg.workers, || {
        hypotheses
            .par_iter()
            .zip(examples.par_iter())
            .map(|(hyp, ex)| {
                let refs: Vec<&TokenSequence> = ex.references.iter().collect();
                sentence_candidates(hyp, &ex.source, &refs, cfg)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let ids = examples.iter().map(|e| e.id.clone()).collect();
    Ok(select(ids, candidates, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub annotator: String,
    pub held_out: String,
    #[serde(flatten)]
    pub counts: Counts,
    #[serde(flatten)]
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementGrid {
    pub beta: f64,
    pub annotators: usize,
    pub sentences: usize,
    pub rows: Vec<AgreementRow>,
}

/// Scores each annotator's rewrites against the remaining annotators'.
pub fn leave_one_out(examples: &[MultiRefExample], cfg: &ScoreConfig) -> Result<AgreementGrid> {
    cfg.validate()?;
    let n = examples.first().map(|e| e.references.len()).unwrap_or(0);
    if n < 2 {
        return Err(Error::TooFewAnnotators(n));
    }
    if let Some(bad) = examples.iter().find(|e| e.references.len() != n) {
        return Err(Error::RaggedAnnotations {
            id: bad.id.clone(),
            expected: n,
            found: bad.references.len(),
        });
    }
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let candidates = with_workers(cfg.workers, || {
            examples
                .par_iter()
                .map(|ex| {
                    let others: Vec<&TokenSequence> = ex
                        .references
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != k)
                        .map(|(_, r)| r)
                        .collect();
                    sentence_candidates(&ex.references[k], &ex.source, &others, cfg)
                })
                .collect::<Result<Vec<_>>>()
        })??;
        let ids = examples.iter().map(|e| e.id.clone()).collect();
        let report = select(ids, candidates, cfg);
        rows.push(AgreementRow {
            annotator: format!("A{}", k + 1),
            held_out: format!("Without A{}", k + 1),
            counts: report.counts,
            prf: report.prf,
        });
    }
    Ok(AgreementGrid {
        beta: cfg.beta,
        annotators: n,
        sentences: examples.len(),
        rows,
    })
}
