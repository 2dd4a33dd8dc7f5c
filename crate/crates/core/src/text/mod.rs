//! Corpus ingestion and normalization shared by the tokenizers, the
//! metrics and the NER pipeline.
//!
//! A sentence is one line of input and a word is a maximal run of
//! non-whitespace characters after normalization.

pub(crate) mod conll;
mod lexicon;

use std::fs;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub use conll::{iob2_valid, parse_conll, repair_iob2, ConllParse, NerDocument, NerSentence, Tag, TagParseError};
pub use lexicon::{load_morph_lexicon, MorphEntry, MorphLexicon};

/// NFC-normalizes `text`, collapses whitespace runs to a single space and
/// trims both ends. No case folding is applied.
pub fn normalize(text: &str) -> String {
    let composed: String = text.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    for word in composed.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    /// The line as read, before normalization.
    pub raw: String,
    pub words: Vec<String>,
}

impl Sentence {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let words = normalize(&raw)
            .split(' ')
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect();
        Sentence { raw, words }
    }

    /// The normalized text, i.e. the words joined by single spaces.
    pub fn text(&self) -> String {
        self.words.join(" ")
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub language: String,
    pub script: String,
}

impl Corpus {
    /// Builds a corpus from in-memory lines; blank lines are dropped.
    pub fn from_lines<I, S>(lines: I, language: &str, script: &str) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let sentences = lines
            .into_iter()
            .map(|l| Sentence::new(l.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        Corpus {
            sentences,
            language: language.to_string(),
            script: script.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(|s| s.words.len()).sum()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flat_map(|s| s.words.iter().map(String::as_str))
    }

    /// Concatenates several corpora under a new language tag.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Corpus>, language: &str, script: &str) -> Corpus {
        Corpus {
            sentences: parts.into_iter().flat_map(|c| c.sentences.iter().cloned()).collect(),
            language: language.to_string(),
            script: script.to_string(),
        }
    }
}

/// Loads a newline-delimited UTF-8 corpus. Blank lines are skipped and
/// invalid UTF-8 is rejected with its 1-based line number.
pub fn load_corpus(path: impl AsRef<Path>, language: &str, script: &str) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let lines = split_utf8_lines(&bytes, &path.display().to_string())?;
    let corpus = Corpus::from_lines(lines, language, script);
    log::debug!("loaded {} sentences from {}", corpus.len(), path.display());
    Ok(corpus)
}

/// Splits raw bytes into lines, validating each one separately so that an
/// encoding error can be reported with a line number.
pub(crate) fn split_utf8_lines<'a>(bytes: &'a [u8], source_name: &str) -> Result<Vec<&'a str>> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut lines = Vec::new();
    if bytes.is_empty() {
        return Ok(lines);
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    for (i, line) in body.split(|&b| b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        let line = std::str::from_utf8(line).map_err(|_| Error::InvalidUtf8 {
            source_name: source_name.to_string(),
            line: i + 1,
        })?;
        lines.push(line);
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_basics() {
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("a  b\t c"), "a b c");
        assert_eq!(normalize("  lead and trail \n"), "lead and trail");
    }

    #[test]
    fn normalize_composes_nukta() {
        // KA + NUKTA is a composition exclusion, so NFC keeps the sequence;
        // this is what the Unicode data says (checked with Python's
        // unicodedata.normalize("NFC", ...)).
        assert_eq!(normalize("\u{0915}\u{093C}"), "\u{0915}\u{093C}");
        // QA (U+0958) decomposes canonically and does not recompose.
        assert_eq!(normalize("\u{0958}"), "\u{0915}\u{093C}");
        // Bengali O vowel sign composes from E + AA.
        assert_eq!(normalize("\u{0995}\u{09C7}\u{09BE}"), "\u{0995}\u{09CB}");
        // Latin e + combining acute composes.
        assert_eq!(normalize("e\u{0301}"), "\u{00E9}");
    }

    #[test]
    fn sentence_words_have_no_whitespace() {
        let s = Sentence::new("  ক  খ\u{00A0}গ ");
        assert_eq!(s.words, vec!["ক", "খ", "গ"]);
        assert_eq!(s.text(), "ক খ গ");
    }

    #[test]
    fn invalid_utf8_reports_line() {
        let bytes = b"ok\nstill ok\n\xff\xfe\n";
        let err = split_utf8_lines(bytes, "mem").unwrap_err();
        match err {
            Error::InvalidUtf8 { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn load_corpus_skips_blank_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        fs::write(&path, "a b\n\n   \nc\r\n").unwrap();
        let corpus = load_corpus(&path, "xx", "Latn").unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.word_count(), 3);
        assert_eq!(corpus.language, "xx");
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn normalize_idempotent_on_combining_marks(
            s in proptest::collection::vec(prop_oneof![
                Just('a'), Just(' '), Just('\t'), Just('\u{0301}'), Just('\u{0327}'),
                Just('\u{093C}'), Just('\u{0915}'), Just('\u{09C7}'), Just('\u{09BE}'),
                Just('\u{2000}'), Just('\u{00A0}'), Just('\u{0958}'),
            ], 0..24)
        ) {
            let s: String = s.into_iter().collect();
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once.clone());
            let joined = Sentence::new(&s).text();
            prop_assert_eq!(joined, once);
        }
    }
}
