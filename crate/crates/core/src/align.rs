//! Token-level alignment and edit-span extraction.
//!
//! Alignment is a weighted Levenshtein DP over tokens. Edits are then read
//! off the alignment either one per non-match operation (`split`) or as
//! maximal runs of adjacent non-match operations (`merged`).

use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::TokenSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Match,
    Substitute,
    Delete,
    Insert,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignOp {
    pub kind: OpKind,
    pub src: Range<usize>,
    pub tgt: Range<usize>,
}

/// Per-operation costs. Matches are free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostModel {
    pub substitute: f64,
    /// Substituting a token by a case variant of itself.
    pub case_substitute: f64,
    pub insert: f64,
    pub delete: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            substitute: 1.0,
            case_substitute: 0.25,
            insert: 1.0,
            delete: 1.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.substitute,
            self.case_substitute,
            self.insert,
            self.delete,
        ];
        if all.iter().all(|c| c.is_finite() && *c > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "alignment costs must be positive and finite".into(),
            ))
        }
    }

    fn substitution(&self, a: &str, b: &str) -> f64 {
        if a.to_lowercase() == b.to_lowercase() {
            self.case_substitute
        } else {
            self.substitute
        }
    }
}

#[derive(Debug, Clone)]
pub struct Alignment<'a> {
    pub source: &'a TokenSequence,
    pub target: &'a TokenSequence,
    pub ops: Vec<AlignOp>,
    pub cost: f64,
}

/// Minimal-cost alignment of `src` to `tgt` under the default cost model.
pub fn align<'a>(src: &'a TokenSequence, tgt: &'a TokenSequence) -> Alignment<'a> {
    align_with(src, tgt, &CostModel::default())
}

pub fn align_with<'a>(
    src: &'a TokenSequence,
    tgt: &'a TokenSequence,
    costs: &CostModel,
) -> Alignment<'a> {
    let s = &src.tokens;
    let t = &tgt.tokens;
    let (n, m) = (s.len(), t.len());
    let width = m + 1;
    let mut dp = vec![0.0f64; (n + 1) * width];
    for j in 1..=m {
        dp[j] = dp[j - 1] + costs.insert;
    }
    for i in 1..=n {
        dp[i * width] = dp[(i - 1) * width] + costs.delete;
        for j in 1..=m {
            let diag = if s[i - 1] == t[j - 1] {
                0.0
            } else {
                costs.substitution(&s[i - 1], &t[j - 1])
            };
            let best = (dp[(i - 1) * width + j - 1] + diag)
                .min(dp[(i - 1) * width + j] + costs.delete)
                .min(dp[i * width + j - 1] + costs.insert);
            dp[i * width + j] = best;
        }
    }

    // Backtrace preference: match > substitute > delete > insert.
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i * width + j];
        if i > 0 && j > 0 {
            let diag = dp[(i - 1) * width + j - 1];
            if s[i - 1] == t[j - 1] && diag == here {
                ops.push(op(OpKind::Match, i - 1, j - 1, 1, 1));
                i -= 1;
                j -= 1;
                continue;
            }
            if s[i - 1] != t[j - 1] && diag + costs.substitution(&s[i - 1], &t[j - 1]) == here {
                ops.push(op(OpKind::Substitute, i - 1, j - 1, 1, 1));
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[(i - 1) * width + j] + costs.delete == here {
            ops.push(op(OpKind::Delete, i - 1, j, 1, 0));
            i -= 1;
            continue;
        }
        debug_assert!(j > 0);
        ops.push(op(OpKind::Insert, i, j - 1, 0, 1));
        j -= 1;
    }
    ops.reverse();

    Alignment {
        source: src,
        target: tgt,
        ops,
        cost: dp[n * width + m],
    }
}

fn op(kind: OpKind, i: usize, j: usize, di: usize, dj: usize) -> AlignOp {
    AlignOp {
        kind,
        src: i..i + di,
        tgt: j..j + dj,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeMode {
    #[default]
    Merged,
    Split,
}

impl FromStr for MergeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merged" => Ok(MergeMode::Merged),
            "split" => Ok(MergeMode::Split),
            other => Err(Error::InvalidParameter(format!(
                "unknown merge mode {other:?} (expected merged or split)"
            ))),
        }
    }
}

/// Replace source tokens `start..end` with `replacement`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EditSpan {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
}

impl EditSpan {
    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    pub fn is_deletion(&self) -> bool {
        self.replacement.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditSet {
    pub source: TokenSequence,
    pub spans: Vec<EditSpan>,
}

impl EditSet {
    pub fn empty(source: TokenSequence) -> Self {
        EditSet {
            source,
            spans: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Applies every span to the source, right to left.
    pub fn apply(&self) -> Vec<String> {
        let mut out = self.source.tokens.clone();
        for span in self.spans.iter().rev() {
            out.splice(span.start..span.end, span.replacement.iter().cloned());
        }
        out
    }

    /// Structural checks: bounds, ordering, no overlap, no identity rewrites.
    pub fn validate(&self) -> Result<()> {
        let n = self.source.len();
        let mut prev_end = 0;
        for span in &self.spans {
            if span.start > span.end || span.end > n {
                return Err(Error::Malformed(format!(
                    "span {}..{} out of bounds for {n} source tokens",
                    span.start, span.end
                )));
            }
            if span.start < prev_end {
                return Err(Error::Malformed(format!(
                    "span {}..{} overlaps previous span or is out of order",
                    span.start, span.end
                )));
            }
            if self.source.tokens[span.start..span.end] == span.replacement[..] {
                return Err(Error::Malformed(format!(
                    "span {}..{} is an identity rewrite",
                    span.start, span.end
                )));
            }
            prev_end = span.end;
        }
        Ok(())
    }
}

pub fn extract_edits(alignment: &Alignment<'_>, mode: MergeMode) -> EditSet {
    let tgt = &alignment.target.tokens;
    let mut spans: Vec<EditSpan> = Vec::new();
    // Whether the previous op was a non-match, i.e. the last span may grow.
    let mut open = false;
    for op in &alignment.ops {
        if op.kind == OpKind::Match {
            open = false;
            continue;
        }
        let replacement = &tgt[op.tgt.clone()];
        match (mode, open, spans.last_mut()) {
            (MergeMode::Merged, true, Some(last)) => {
                last.end = op.src.end;
                last.replacement.extend_from_slice(replacement);
            }
            _ => spans.push(EditSpan {
                start: op.src.start,
                end: op.src.end,
                replacement: replacement.to_vec(),
            }),
        }
        open = true;
    }
    EditSet {
        source: alignment.source.clone(),
        spans,
    }
}

/// Aligns and extracts in one step.
pub fn edits_between(
    src: &TokenSequence,
    tgt: &TokenSequence,
    mode: MergeMode,
    costs: &CostModel,
) -> EditSet {
    extract_edits(&align_with(src, tgt, costs), mode)
}

/// One line of the edit exchange format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRecord {
    pub id: String,
    pub spans: Vec<EditSpan>,
}
