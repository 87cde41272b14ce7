//! C ABI over `concise-core`.
//!
//! Every fallible function returns a [`ConciseStatus`] and writes its result
//! through an out-pointer. On failure a message is available from
//! [`concise_last_error`] on the calling thread. Strings returned through
//! `char **` out-pointers are owned by the caller and must be released with
//! [`concise_string_free`]. Handles are released with their `_free` function.
//! Text arguments are NUL-terminated UTF-8 and are tokenized with the rule
//! tokenizer.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use concise::align::{edits_between, CostModel, MergeMode};
use concise::metrics::{self, DfTable, LogBase, SynonymLexicon};
use concise::score::{self, MultiRefExample, ScoreConfig};
use concise::tokenize::{count_syllables, TokenSequence, TokenizerOptions};
use concise::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConciseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DataError = 4,
    IoError = 5,
    Panic = 6,
}

/// Precision, recall and F-beta.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcisePrf {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

/// Document-frequency table.
pub struct ConciseDfTable(DfTable);

/// Synonym lexicon.
pub struct ConciseLexicon(SynonymLexicon);

/// Accumulates multi-reference examples and hypotheses for corpus scoring.
pub struct ConciseScorer {
    config: ScoreConfig,
    examples: Vec<MultiRefExample>,
    hypotheses: Vec<TokenSequence>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ConciseStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::Io { .. } => ConciseStatus::IoError,
            Error::InvalidParameter(_) => ConciseStatus::InvalidArgument,
            _ => ConciseStatus::DataError,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> ConciseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            ConciseStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal error: {msg}"));
            ConciseStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ConciseStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| Failure(ConciseStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(ConciseStatus::DataError, "output contains NUL".into()))
}

fn json<T: serde::Serialize>(value: &T) -> Result<*mut c_char, Failure> {
    let s = serde_json::to_string(value)
        .map_err(|e| Failure(ConciseStatus::DataError, e.to_string()))?;
    owned_string(s)
}

fn log_base(base: f64) -> Result<LogBase, Failure> {
    LogBase::new(base).map_err(Failure::from)
}

fn tokenizer() -> TokenizerOptions {
    TokenizerOptions::default()
}

/// Library version and supported format versions. Static; do not free.
#[no_mangle]
pub extern "C" fn concise_version() -> *const c_char {
    concat!(
        env!("CARGO_PKG_VERSION"),
        " (formats: edits-jsonl v1, df-table v1, report-json v1)\0"
    )
    .as_ptr()
    .cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library on the same thread; do not free.
#[no_mangle]
pub extern "C" fn concise_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from a `char **` out-pointer of this library and not have
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn concise_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Tokenizes `text` and writes the tokens as a JSON array of strings.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concise_tokenize_json(
    text: *const c_char,
    pretokenized: bool,
    out_json: *mut *mut c_char,
) -> ConciseStatus {
    guard(|| {
        let raw = self::text(text, "text")?;
        let out_json = out(out_json, "out_json")?;
        let opts = TokenizerOptions {
            pretokenized,
            ..Default::default()
        };
        *out_json = json(&opts.apply(raw).tokens)?;
        Ok(())
    })
}

/// Heuristic syllable count of one token.
///
/// # Safety
/// `token` must be a NUL-terminated string; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concise_count_syllables(
    token: *const c_char,
    out_count: *mut u32,
) -> ConciseStatus {
    guard(|| {
        let token = text(token, "token")?;
        *out(out_count, "out_count")? = count_syllables(token)?;
        Ok(())
    })
}

/// Precision, recall and F-beta from edit counts.
///
/// # Safety
/// `out_prf` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concise_compute_prf(
    true_positives: u64,
    false_positives: u64,
    false_negatives: u64,
    beta: f64,
    out_prf: *mut ConcisePrf,
) -> ConciseStatus {
    guard(|| {
        let out_prf = out(out_prf, "out_prf")?;
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Failure(
                ConciseStatus::InvalidArgument,
                format!("beta must be positive and finite, got {beta}"),
            ));
        }
        let p = score::compute_prf(true_positives, false_positives, false_negatives, beta);
        *out_prf = ConcisePrf {
            precision: p.precision,
            recall: p.recall,
            f_beta: p.f_beta,
        };
        Ok(())
    })
}

/// Flesch-Kincaid grade of one sentence.
///
/// # Safety
/// `sentence` must be a NUL-terminated string; `out_grade` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concise_fk_grade(
    sentence: *const c_char,
    out_grade: *mut f64,
) -> ConciseStatus {
    guard(|| {
        let s = text(sentence, "sentence")?;
        *out(out_grade, "out_grade")? = metrics::fk_grade(&tokenizer().apply(s))?;
        Ok(())
    })
}

/// Edit spans turning `source` into `target`, as a JSON array of
/// `{"start","end","replacement"}` objects over source token indices.
///
/// # Safety
/// `source` and `target` must be NUL-terminated strings; `out_json` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn concise_extract_edits_json(
    source: *const c_char,
    target: *const c_char,
    split: bool,
    out_json: *mut *mut c_char,
) -> ConciseStatus {
    guard(|| {
        let (s, t) = (text(source, "source")?, text(target, "target")?);
        let out_json = out(out_json, "out_json")?;
        let mode = if split {
            MergeMode::Split
        } else {
            MergeMode::Merged
        };
        let tok = tokenizer();
        let edits = edits_between(&tok.apply(s), &tok.apply(t), mode, &CostModel::default());
        *out_json = json(&edits.spans)?;
        Ok(())
    })
}

/// Loads a document-frequency table written by `concise build-df`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concise_df_table_load(
    path: *const c_char,
    out_table: *mut *mut ConciseDfTable,
) -> ConciseStatus {
    guard(|| {
        let path = Path::new(text(path, "path")?);
        let out_table = out(out_table, "out_table")?;
        let reader = concise::io::open(path)?;
        let table = DfTable::read_from(reader).map_err(|e| match e {
            Error::Line { line, source } => source.at(path, Some(line)),
            other => other.at(path, None),
        })?;
        *out_table = Box::into_raw(Box::new(ConciseDfTable(table)));
        Ok(())
    })
}

/// # Safety
/// `table` must be NULL or a handle from [`concise_df_table_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn concise_df_table_free(table: *mut ConciseDfTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of documents the table was built from; 0 for a NULL handle.
///
/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn concise_df_table_doc_count(table: *const ConciseDfTable) -> u64 {
    table.as_ref().map_or(0, |t| t.0.doc_count)
}

/// IDF of one token in the given logarithm base (e.g. `M_E`, 2, 10).
///
/// # Safety
/// `table` must be a live handle, `token` a NUL-terminated string and
/// `out_idf` writable.
#[no_mangle]
pub unsafe extern "C" fn concise_df_table_idf(
    table: *const ConciseDfTable,
    token: *const c_char,
    base: f64,
    out_idf: *mut f64,
) -> ConciseStatus {
    guard(|| {
        let table = handle(table, "table")?;
        let token = text(token, "token")?;
        let base = log_base(base)?;
        *out(out_idf, "out_idf")? = table.0.idf(token, base);
        Ok(())
    })
}

/// Mean token IDF of a sentence.
///
/// # Safety
/// `table` must be a live handle, `sentence` a NUL-terminated string and
/// `out_idf` writable.
#[no_mangle]
pub unsafe extern "C" fn concise_df_table_mean_idf(
    table: *const ConciseDfTable,
    sentence: *const c_char,
    base: f64,
    out_idf: *mut f64,
) -> ConciseStatus {
    guard(|| {
        let table = handle(table, "table")?;
        let s = text(sentence, "sentence")?;
        let base = log_base(base)?;
        *out(out_idf, "out_idf")? = metrics::mean_token_idf(&tokenizer().apply(s), &table.0, base)?;
        Ok(())
    })
}

/// Loads a `word1<TAB>word2` synonym lexicon.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_lexicon` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concise_lexicon_load(
    path: *const c_char,
    out_lexicon: *mut *mut ConciseLexicon,
) -> ConciseStatus {
    guard(|| {
        let path = Path::new(text(path, "path")?);
        let out_lexicon = out(out_lexicon, "out_lexicon")?;
        let lex = SynonymLexicon::read_from(concise::io::open(path)?).map_err(|e| match e {
            Error::Line { line, source } => source.at(path, Some(line)),
            other => other.at(path, None),
        })?;
        *out_lexicon = Box::into_raw(Box::new(ConciseLexicon(lex)));
        Ok(())
    })
}

/// # Safety
/// `lexicon` must be NULL or a handle from [`concise_lexicon_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn concise_lexicon_free(lexicon: *mut ConciseLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Number of single-token substitutions from `source` to `target` that swap
/// in a listed synonym.
///
/// # Safety
/// `lexicon` must be a live handle, `source` and `target` NUL-terminated
/// strings and `out_count` writable.
#[no_mangle]
pub unsafe extern "C" fn concise_lexicon_count_synonym_subs(
    lexicon: *const ConciseLexicon,
    source: *const c_char,
    target: *const c_char,
    split: bool,
    out_count: *mut u64,
) -> ConciseStatus {
    guard(|| {
        let lex = handle(lexicon, "lexicon")?;
        let (s, t) = (text(source, "source")?, text(target, "target")?);
        let out_count = out(out_count, "out_count")?;
        let mode = if split {
            MergeMode::Split
        } else {
            MergeMode::Merged
        };
        let tok = tokenizer();
        let edits = edits_between(&tok.apply(s), &tok.apply(t), mode, &CostModel::default());
        *out_count = metrics::count_synonym_subs(&edits, &lex.0);
        Ok(())
    })
}

/// Creates an empty scorer.
///
/// # Safety
/// `out_scorer` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concise_scorer_new(
    beta: f64,
    ignore_case: bool,
    split: bool,
    out_scorer: *mut *mut ConciseScorer,
) -> ConciseStatus {
    guard(|| {
        let out_scorer = out(out_scorer, "out_scorer")?;
        let config = ScoreConfig {
            beta,
            ignore_case,
            merge_mode: if split {
                MergeMode::Split
            } else {
                MergeMode::Merged
            },
            ..Default::default()
        };
        config.validate()?;
        *out_scorer = Box::into_raw(Box::new(ConciseScorer {
            config,
            examples: Vec::new(),
            hypotheses: Vec::new(),
        }));
        Ok(())
    })
}

/// Adds one sentence: its source, the system hypothesis and `n_refs`
/// reference rewrites.
///
/// # Safety
/// `scorer` must be a live handle; `id`, `source`, `hypothesis` and the
/// `n_refs` entries of `refs` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn concise_scorer_add(
    scorer: *mut ConciseScorer,
    id: *const c_char,
    source: *const c_char,
    hypothesis: *const c_char,
    refs: *const *const c_char,
    n_refs: usize,
) -> ConciseStatus {
    guard(|| {
        let scorer = out(scorer, "scorer")?;
        let id = text(id, "id")?;
        let source = text(source, "source")?;
        let hyp = text(hypothesis, "hypothesis")?;
        if n_refs == 0 {
            return Err(Error::NoReferences.into());
        }
        if refs.is_null() {
            return Err(null("refs"));
        }
        let tok = tokenizer();
        let references = std::slice::from_raw_parts(refs, n_refs)
            .iter()
            .map(|r| text(*r, "reference").map(|r| tok.apply(r)))
            .collect::<Result<Vec<_>, _>>()?;
        scorer.examples.push(MultiRefExample {
            id: id.to_owned(),
            source: tok.apply(source),
            references,
        });
        scorer.hypotheses.push(tok.apply(hyp));
        Ok(())
    })
}

/// Scores everything added so far and writes the corpus report as JSON
/// (same shape as `concise score` output).
///
/// # Safety
/// `scorer` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concise_scorer_report_json(
    scorer: *const ConciseScorer,
    out_json: *mut *mut c_char,
) -> ConciseStatus {
    guard(|| {
        let scorer = handle(scorer, "scorer")?;
        let out_json = out(out_json, "out_json")?;
        if scorer.examples.is_empty() {
            return Err(Failure(
                ConciseStatus::DataError,
                "no sentences added".into(),
            ));
        }
        let report = score::score_corpus(&scorer.hypotheses, &scorer.examples, &scorer.config)?;
        *out_json = json(&report)?;
        Ok(())
    })
}

/// # Safety
/// `scorer` must be NULL or a handle from [`concise_scorer_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn concise_scorer_free(scorer: *mut ConciseScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}
