//! Character-level tokenizer: `▁` then one piece per codepoint or per
//! extended grapheme cluster. The vocabulary is implicit, so nothing is ever
//! unknown.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::Error;
use crate::text::normalize;
use crate::vocab::META_STR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CharMode {
    #[default]
    Codepoint,
    Grapheme,
}

impl fmt::Display for CharMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CharMode::Codepoint => "codepoint",
            CharMode::Grapheme => "grapheme",
        })
    }
}

impl FromStr for CharMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "codepoint" => Ok(CharMode::Codepoint),
            "grapheme" => Ok(CharMode::Grapheme),
            other => Err(Error::InvalidInput(format!("unknown character mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CharTokenizer {
    pub mode: CharMode,
}

impl CharTokenizer {
    pub fn new(mode: CharMode) -> Self {
        CharTokenizer { mode }
    }

    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut pieces = vec![META_STR.to_string()];
        match self.mode {
            CharMode::Codepoint => pieces.extend(word.chars().map(String::from)),
            CharMode::Grapheme => pieces.extend(word.graphemes(true).map(str::to_string)),
        }
        pieces
    }

    pub fn encode(&self, text: &str) -> Vec<Vec<String>> {
        normalize(text)
            .split_whitespace()
            .map(|w| self.encode_word(w))
            .collect()
    }
}
