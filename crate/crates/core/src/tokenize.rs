//! Rule-based word tokenization and heuristic syllable counting.
//!
//! The tokenizer follows Penn-Treebank conventions closely enough for
//! span-level scoring: split on whitespace, peel punctuation off both ends of
//! each chunk, and split English clitics at the apostrophe (`don't` becomes
//! `do` + `n't`). Every token it emits is a fixed point, so re-tokenizing the
//! space-joined output reproduces it exactly.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Punctuation detached from the front of a chunk.
const LEADING: &[char] = &[
    '"', '\'', '(', '[', '{', '<', '`', '\u{201C}', '\u{2018}', '\u{00AB}', '\u{00BF}', '\u{00A1}',
];

/// Punctuation detached from the back of a chunk.
const TRAILING: &[char] = &[
    '.', ',', ';', ':', '!', '?', ')', ']', '}', '>', '"', '\'', '\u{201D}', '\u{2019}',
    '\u{2026}', '\u{00BB}',
];

const CLITICS: &[&str] = &[
    "n't",
    "'s",
    "'re",
    "'ve",
    "'ll",
    "'d",
    "'m",
    "n\u{2019}t",
    "\u{2019}s",
    "\u{2019}re",
    "\u{2019}ve",
    "\u{2019}ll",
    "\u{2019}d",
    "\u{2019}m",
];

/// A tokenized sentence together with the text it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub raw: String,
}

impl TokenSequence {
    /// Tokenizes `raw` with the rule tokenizer.
    pub fn new(raw: &str) -> Self {
        tokenize(raw)
    }

    /// Treats `raw` as already tokenized: tokens are its whitespace-separated fields.
    pub fn pretokenized(raw: &str) -> Self {
        TokenSequence {
            tokens: raw.split_whitespace().map(str::to_owned).collect(),
            raw: raw.to_owned(),
        }
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let tokens: Vec<String> = tokens.iter().map(|t| t.as_ref().to_owned()).collect();
        let raw = tokens.join(" ");
        TokenSequence { tokens, raw }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined with single spaces.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// How raw text lines become [`TokenSequence`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TokenizerOptions {
    /// Split on whitespace only.
    pub pretokenized: bool,
    /// Apply Unicode NFC normalization before tokenizing.
    pub nfc: bool,
}

impl TokenizerOptions {
    pub fn apply(&self, raw: &str) -> TokenSequence {
        let text: std::borrow::Cow<'_, str> = if self.nfc {
            raw.nfc().collect::<String>().into()
        } else {
            raw.into()
        };
        if self.pretokenized {
            TokenSequence::pretokenized(&text)
        } else {
            tokenize(&text)
        }
    }
}

pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        split_chunk(chunk, &mut tokens);
    }
    TokenSequence {
        tokens,
        raw: text.to_owned(),
    }
}

fn is_clitic(s: &str) -> bool {
    CLITICS.iter().any(|c| c.eq_ignore_ascii_case(s))
}

/// Index at which a clitic suffix starts, if the chunk ends in one and has
/// a non-empty stem.
fn clitic_boundary(s: &str) -> Option<usize> {
    CLITICS.iter().find_map(|c| {
        let split = s.len().checked_sub(c.len())?;
        if split == 0 || !s.is_char_boundary(split) {
            return None;
        }
        s[split..].eq_ignore_ascii_case(c).then_some(split)
    })
}

/// A final period stays on abbreviations such as `D.C.` or `U.S.`.
fn keeps_final_period(body: &str) -> bool {
    body.contains('.') && body.chars().any(char::is_alphabetic)
}

fn split_chunk(s: &str, out: &mut Vec<String>) {
    let mut chars = s.chars();
    let Some(first) = chars.next() else {
        return;
    };
    if chars.next().is_none() || is_clitic(s) {
        out.push(s.to_owned());
        return;
    }
    if LEADING.contains(&first) {
        out.push(first.to_string());
        split_chunk(&s[first.len_utf8()..], out);
        return;
    }
    let last = s.chars().next_back().expect("non-empty");
    let body = &s[..s.len() - last.len_utf8()];
    if TRAILING.contains(&last) && !(last == '.' && keeps_final_period(body)) {
        split_chunk(body, out);
        out.push(last.to_string());
        return;
    }
    if let Some(split) = clitic_boundary(s) {
        split_chunk(&s[..split], out);
        out.push(s[split..].to_owned());
        return;
    }
    out.push(s.to_owned());
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Heuristic syllable count: maximal vowel groups, minus a silent final `e`
/// after a consonant, never below one. Tokens without letters count as one.
pub fn count_syllables(token: &str) -> Result<u32> {
    if token.is_empty() {
        return Err(Error::EmptyToken);
    }
    let letters: Vec<char> = token
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return Ok(1);
    }
    let mut groups = 0u32;
    let mut in_group = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    if let [.., before, 'e'] = letters[..] {
        if !is_vowel(before) {
            groups = groups.saturating_sub(1);
        }
    }
    Ok(groups.max(1))
}

/// True when the token contains at least one letter or digit.
pub fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}
