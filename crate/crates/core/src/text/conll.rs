use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{normalize, split_utf8_lines};
use crate::error::{Error, Result};

/// An IOB2 tag. Entity types are non-empty runs of ASCII capitals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    O,
    B(String),
    I(String),
}

impl Tag {
    pub fn label(&self) -> Option<&str> {
        match self {
            Tag::O => None,
            Tag::B(l) | Tag::I(l) => Some(l),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Tag::O)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(l) => write!(f, "B-{l}"),
            Tag::I(l) => write!(f, "I-{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagParseError(pub String);

impl fmt::Display for TagParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tag `{}` does not match O|[BI]-[A-Z]+", self.0)
    }
}

impl std::error::Error for TagParseError {}

impl FromStr for Tag {
    type Err = TagParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Tag::O);
        }
        let bad = || TagParseError(s.to_string());
        let (prefix, label) = s.split_once('-').ok_or_else(bad)?;
        if label.is_empty() || !label.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(bad());
        }
        match prefix {
            "B" => Ok(Tag::B(label.to_string())),
            "I" => Ok(Tag::I(label.to_string())),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// True when every `I-T` continues a `B-T` or `I-T` of the same type.
pub fn iob2_valid(tags: &[Tag]) -> bool {
    let mut prev: Option<&str> = None;
    for tag in tags {
        match tag {
            Tag::O => prev = None,
            Tag::B(l) => prev = Some(l),
            Tag::I(l) => {
                if prev != Some(l.as_str()) {
                    return false;
                }
            }
        }
    }
    true
}

/// Rewrites every orphan `I-T` to `B-T` in place and returns the number of
/// rewrites.
pub fn repair_iob2(tags: &mut [Tag]) -> usize {
    let mut repairs = 0;
    let mut prev: Option<String> = None;
    for tag in tags.iter_mut() {
        if let Tag::I(l) = tag {
            if prev.as_deref() != Some(l.as_str()) {
                *tag = Tag::B(l.clone());
                repairs += 1;
            }
        }
        prev = tag.label().map(str::to_string);
    }
    repairs
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NerSentence {
    pub words: Vec<String>,
    pub tags: Vec<Tag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NerDocument {
    pub sentences: Vec<NerSentence>,
    pub label_set: BTreeSet<String>,
    pub language: String,
}

impl NerDocument {
    /// Builds a document, checking that words and tags line up and that
    /// every sentence is valid IOB2.
    pub fn new(sentences: Vec<NerSentence>, language: &str) -> Result<Self> {
        let mut label_set = BTreeSet::new();
        for (i, s) in sentences.iter().enumerate() {
            if s.words.len() != s.tags.len() {
                return Err(Error::InvalidInput(format!(
                    "sentence {i}: {} words but {} tags",
                    s.words.len(),
                    s.tags.len()
                )));
            }
            if !iob2_valid(&s.tags) {
                return Err(Error::InvalidInput(format!("sentence {i}: invalid IOB2 sequence")));
            }
            label_set.extend(s.tags.iter().filter_map(|t| t.label().map(str::to_string)));
        }
        Ok(NerDocument {
            sentences,
            label_set,
            language: language.to_string(),
        })
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

    /// Parses CoNLL two-column text. Orphan `I-T` tags are repaired to `B-T`.
    pub fn parse_str(text: &str, source_name: &str) -> Result<ConllParse> {
        parse_lines(text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)), source_name)
    }

    /// Renders the canonical CoNLL form: `word<TAB>tag` lines with one blank
    /// line between sentences.
    pub fn to_conll(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sentences.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for (w, t) in s.words.iter().zip(&s.tags) {
                out.push_str(w);
                out.push('\t');
                out.push_str(&t.to_string());
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllParse {
    pub document: NerDocument,
    /// How many orphan `I-T` tags were rewritten to `B-T`.
    pub repairs: usize,
}

pub fn parse_conll(path: impl AsRef<Path>) -> Result<ConllParse> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let lines = split_utf8_lines(&bytes, &name)?;
    let parsed = parse_lines(lines.into_iter(), &name)?;
    if parsed.repairs > 0 {
        log::warn!("{name}: repaired {} orphan I- tags", parsed.repairs);
    }
    Ok(parsed)
}

fn parse_lines<'a>(lines: impl Iterator<Item = &'a str>, source_name: &str) -> Result<ConllParse> {
    let mut sentences = Vec::new();
    let mut current = NerSentence::default();
    let mut repairs = 0;
    let mut flush = |current: &mut NerSentence, sentences: &mut Vec<NerSentence>| {
        if !current.words.is_empty() {
            repairs += repair_iob2(&mut current.tags);
            sentences.push(std::mem::take(current));
        }
    };
    for (i, line) in lines.enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            flush(&mut current, &mut sentences);
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let word = normalize(fields[0]);
        if word.is_empty() || word.contains(' ') {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("invalid word `{}`", fields[0]),
            ));
        }
        let tag: Tag = fields[1]
            .trim()
            .parse()
            .map_err(|e: TagParseError| Error::parse(source_name, lineno, e.to_string()))?;
        current.words.push(word);
        current.tags.push(tag);
    }
    flush(&mut current, &mut sentences);
    let document = NerDocument::new(sentences, "")?;
    Ok(ConllParse { document, repairs })
}
