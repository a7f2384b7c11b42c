//! Offline script detection, dictionary translation and punctuation-free
//! tokenization into candidate location keywords.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinguaError {
    #[error("no script content")]
    NoScriptContent,
    #[error("translation dictionary: {0}")]
    BadDictionary(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Supported scripts, matching the configured recognizer heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptId {
    Latin,
    Devanagari,
    Telugu,
}

impl ScriptId {
    /// Language implied by a script for ambiguity filtering.
    pub fn language(&self) -> &'static str {
        match self {
            ScriptId::Latin => "English",
            ScriptId::Devanagari => "Hindi",
            ScriptId::Telugu => "Telugu",
        }
    }
}

/// Majority vote over letters per Unicode block (ASCII letters;
/// Devanagari U+0900-U+097F; Telugu U+0C00-U+0C7F). Digits, punctuation
/// and whitespace are ignored; ties break Latin > Devanagari > Telugu.
pub fn detect_script(text: &str) -> Result<ScriptId, LinguaError> {
    let mut latin = 0usize;
    let mut devanagari = 0usize;
    let mut telugu = 0usize;
    for c in text.chars() {
        match c {
            'A'..='Z' | 'a'..='z' => latin += 1,
            '\u{0900}'..='\u{097F}' => devanagari += 1,
            '\u{0C00}'..='\u{0C7F}' => telugu += 1,
            _ => {}
        }
    }
    if latin + devanagari + telugu == 0 {
        return Err(LinguaError::NoScriptContent);
    }
    if latin >= devanagari && latin >= telugu {
        Ok(ScriptId::Latin)
    } else if devanagari >= telugu {
        Ok(ScriptId::Devanagari)
    } else {
        Ok(ScriptId::Telugu)
    }
}

/// Native-script word to English lookup table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranslationDict {
    entries: HashMap<String, String>,
}

impl TranslationDict {
    pub fn new(entries: HashMap<String, String>) -> Result<Self, LinguaError> {
        if entries.keys().any(|k| k.is_empty()) {
            return Err(LinguaError::BadDictionary("empty key".into()));
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Load a UTF-8 TSV file of `native<TAB>english` rows.
    pub fn load_tsv(path: &Path) -> Result<Self, LinguaError> {
        let text = std::fs::read_to_string(path)?;
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (native, english) = line.split_once('\t').ok_or_else(|| {
                LinguaError::BadDictionary(format!("line {}: missing tab", i + 1))
            })?;
            if native.is_empty() {
                return Err(LinguaError::BadDictionary(format!("line {}: empty key", i + 1)));
            }
            entries.insert(native.to_string(), english.to_string());
        }
        Ok(Self { entries })
    }

    pub fn lookup(&self, word: &str) -> Option<&str> {
        self.entries.get(word).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Word-by-word dictionary translation. Unknown words pass through and
/// the whitespace structure is preserved exactly.
pub fn translate_to_english(text: &str, dict: &TranslationDict) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !word.is_empty() {
                out.push_str(dict.lookup(&word).unwrap_or(&word));
                word.clear();
            }
            out.push(c);
        } else {
            word.push(c);
        }
    }
    if !word.is_empty() {
        out.push_str(dict.lookup(&word).unwrap_or(&word));
    }
    out
}

/// Punctuation-free token with its byte span in the input string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

const STRIP_PUNCT: &[char] = &[
    '.', ',', ';', ':', '!', '?', '\'', '"', '(', ')', '[', ']', '{', '}',
];

/// Tokenize: split on whitespace, drop punctuation, and split hyphenated
/// compounds into separate tokens. Tokens never contain punctuation;
/// empty fragments are dropped and input order is preserved.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (offset, chunk) in split_whitespace_indices(text) {
        for (frag_off, frag) in split_punct_indices(chunk) {
            if !frag.is_empty() {
                tokens.push(Token {
                    text: frag.to_string(),
                    start: offset + frag_off,
                    end: offset + frag_off + frag.len(),
                });
            }
        }
    }
    tokens
}

fn split_punct_indices(chunk: &str) -> impl Iterator<Item = (usize, &str)> {
    chunk
        .split(|c: char| c == '-' || STRIP_PUNCT.contains(&c))
        .map(move |frag| (byte_offset_of(chunk, frag), frag))
}

fn split_whitespace_indices(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_whitespace()
        .map(move |chunk| (byte_offset_of(text, chunk), chunk))
}

fn byte_offset_of(haystack: &str, needle: &str) -> usize {
    needle.as_ptr() as usize - haystack.as_ptr() as usize
}

/// Location vocabulary built from the gazetteer's Taluk and Division
/// names; matching is case-folded.
#[derive(Debug, Clone, Default)]
pub struct LocationIndex {
    names: std::collections::HashSet<String>,
}

impl LocationIndex {
    pub fn from_names<I: IntoIterator<Item = String>>(names: I) -> Self {
        Self {
            names: names.into_iter().map(|n| fold(&n)).collect(),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(&fold(name))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

pub(crate) fn fold(s: &str) -> String {
    s.trim().to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Keep tokens whose text matches a gazetteer name; order and
/// multiplicity are preserved.
pub fn filter_location_tokens(tokens: &[Token], index: &LocationIndex) -> Vec<Token> {
    tokens
        .iter()
        .filter(|t| index.contains(&t.text))
        .cloned()
        .collect()
}
