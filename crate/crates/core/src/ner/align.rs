use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::text::Tag;
use crate::tokenizer::Tokenizer;

/// Label of a piece: the word tag on a word's first piece, `Cont` elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PieceTag {
    Tag(Tag),
    Cont,
}

impl fmt::Display for PieceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceTag::Tag(t) => t.fmt(f),
            PieceTag::Cont => f.write_str("CONT"),
        }
    }
}

impl Serialize for PieceTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignedSentence {
    pub pieces: Vec<String>,
    pub piece_tags: Vec<PieceTag>,
    pub word_starts: Vec<usize>,
}

impl AlignedSentence {
    pub fn word_count(&self) -> usize {
        self.word_starts.len()
    }

    /// Pieces belonging to word `i`.
    pub fn word_pieces(&self, i: usize) -> &[String] {
        let start = self.word_starts[i];
        let end = self.word_starts.get(i + 1).copied().unwrap_or(self.pieces.len());
        &self.pieces[start..end]
    }

    /// Collapses piece tags back to one tag per word.
    pub fn word_tags(&self) -> Vec<Tag> {
        self.word_starts
            .iter()
            .map(|&s| match &self.piece_tags[s] {
                PieceTag::Tag(t) => t.clone(),
                PieceTag::Cont => unreachable!("word start carries CONT"),
            })
            .collect()
    }
}

pub fn align_labels<S: AsRef<str>>(words: &[S], tags: &[Tag], tokenizer: &Tokenizer) -> Result<AlignedSentence> {
    if words.len() != tags.len() {
        return Err(Error::InvalidInput(format!(
            "{} words but {} tags",
            words.len(),
            tags.len()
        )));
    }
    let mut out = AlignedSentence {
        pieces: Vec::new(),
        piece_tags: Vec::new(),
        word_starts: Vec::with_capacity(words.len()),
    };
    for (word, tag) in words.iter().zip(tags) {
        let pieces = tokenizer.encode_word(word.as_ref());
        if pieces.is_empty() {
            return Err(Error::Internal(format!(
                "word `{}` encoded to no pieces",
                word.as_ref()
            )));
        }
        out.word_starts.push(out.pieces.len());
        out.piece_tags.push(PieceTag::Tag(tag.clone()));
        out.piece_tags
            .extend(std::iter::repeat_n(PieceTag::Cont, pieces.len() - 1));
        out.pieces.extend(pieces);
    }
    Ok(out)
}
