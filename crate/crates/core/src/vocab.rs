//! Pieces, vocabularies and the word-boundary convention shared by every
//! tokenizer: each word is prefixed with the meta symbol `▁`, so decoding
//! is the same for all of them.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const META: char = '\u{2581}';
pub const META_STR: &str = "\u{2581}";
pub const UNK: &str = "<unk>";

/// An ordered set of pieces with dense ids. `<unk>` always has id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pieces: Vec<String>,
    index: HashMap<String, u32>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary {
            pieces: Vec::new(),
            index: HashMap::new(),
        };
        v.pieces.push(UNK.to_string());
        v.index.insert(UNK.to_string(), 0);
        v
    }

    /// Builds a vocabulary from pieces listed after `<unk>`. Duplicates
    /// (including a second `<unk>`) are rejected.
    pub fn from_pieces<I, S>(pieces: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary::new();
        for p in pieces {
            let p = p.into();
            if !v.push(p.clone()) {
                return Err(Error::InvalidInput(format!("duplicate vocabulary piece `{p}`")));
            }
        }
        Ok(v)
    }

    /// Appends a piece; returns false if it was already present.
    pub fn push(&mut self, piece: String) -> bool {
        if self.index.contains_key(&piece) {
            return false;
        }
        self.index.insert(piece.clone(), self.pieces.len() as u32);
        self.pieces.push(piece);
        true
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.index.get(piece).copied()
    }

    pub fn piece(&self, id: u32) -> Option<&str> {
        self.pieces.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.index.contains_key(piece)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }
}

/// Splits normalized text into words, each as a codepoint sequence with the
/// meta symbol prepended.
pub fn pretokenize(text: &str) -> Vec<Vec<char>> {
    text.split_whitespace().map(word_symbols).collect()
}

pub(crate) fn word_symbols(word: &str) -> Vec<char> {
    std::iter::once(META).chain(word.chars()).collect()
}

/// Concatenates pieces, turns meta symbols back into spaces and drops the
/// leading space.
pub fn decode<S: AsRef<str>>(pieces: &[S]) -> String {
    let joined: String = pieces.iter().map(AsRef::as_ref).collect();
    let text = joined.replace(META, " ");
    match text.strip_prefix(' ') {
        Some(rest) => rest.to_string(),
        None => text,
    }
}

/// Number of codepoints of the original word a piece stands for.
pub(crate) fn piece_span(piece: &str) -> usize {
    if piece == UNK {
        1
    } else {
        piece.chars().count()
    }
}
