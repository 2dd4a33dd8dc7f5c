//! Intrinsic tokenizer measurements over a corpus: sequence length, fertility,
//! split and unknown rates, vocabulary compression and morpheme-boundary
//! agreement with a gold lexicon.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{Corpus, MorphLexicon};
use crate::tokenizer::Tokenizer;
use crate::vocab::{piece_span, META_STR, UNK};

/// Aggregate piece statistics for one tokenizer over one corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub sentences: usize,
    pub words: usize,
    pub pieces: usize,
    pub split_words: usize,
    pub unk_pieces: usize,
    pub word_types: BTreeSet<String>,
    pub piece_types: BTreeSet<String>,
}

impl CorpusStats {
    pub fn collect(tokenizer: &Tokenizer, corpus: &Corpus) -> Self {
        let mut stats = CorpusStats::default();
        for sentence in &corpus.sentences {
            stats.sentences += 1;
            for word in &sentence.words {
                let pieces = tokenizer.encode_word(word);
                stats.words += 1;
                stats.pieces += pieces.len();
                if is_split(&pieces) {
                    stats.split_words += 1;
                }
                stats.unk_pieces += pieces.iter().filter(|p| p.as_str() == UNK).count();
                stats.word_types.insert(word.clone());
                stats.piece_types.extend(pieces);
            }
        }
        stats
    }

    /// Combines statistics of two disjoint corpus partitions.
    pub fn merge(mut self, other: CorpusStats) -> CorpusStats {
        self.sentences += other.sentences;
        self.words += other.words;
        self.pieces += other.pieces;
        self.split_words += other.split_words;
        self.unk_pieces += other.unk_pieces;
        self.word_types.extend(other.word_types);
        self.piece_types.extend(other.piece_types);
        self
    }

    fn require_words(&self) -> Result<()> {
        if self.words == 0 {
            Err(Error::InvalidInput("corpus has no words".into()))
        } else {
            Ok(())
        }
    }
}

/// A word counts as split when it still has two or more pieces after a lone
/// leading `▁` is fused with the piece that follows it.
pub fn is_split(pieces: &[String]) -> bool {
    let fused = if pieces.len() >= 2 && pieces[0] == META_STR {
        pieces.len() - 1
    } else {
        pieces.len()
    };
    fused >= 2
}

fn nonempty(corpus: &Corpus) -> Result<()> {
    if corpus.is_empty() {
        Err(Error::InvalidInput("corpus is empty".into()))
    } else {
        Ok(())
    }
}

/// Mean number of pieces per sentence.
pub fn tokens_per_sentence(tokenizer: &Tokenizer, corpus: &Corpus) -> Result<f64> {
    nonempty(corpus)?;
    let s = CorpusStats::collect(tokenizer, corpus);
    Ok(s.pieces as f64 / s.sentences as f64)
}

/// Pieces per word, each word's `▁` included.
pub fn fertility(tokenizer: &Tokenizer, corpus: &Corpus) -> Result<f64> {
    let s = CorpusStats::collect(tokenizer, corpus);
    s.require_words()?;
    Ok(s.pieces as f64 / s.words as f64)
}

pub fn word_split_rate(tokenizer: &Tokenizer, corpus: &Corpus) -> Result<f64> {
    let s = CorpusStats::collect(tokenizer, corpus);
    s.require_words()?;
    Ok(s.split_words as f64 / s.words as f64)
}

/// Fraction of emitted pieces that are `<unk>`.
pub fn unk_rate(tokenizer: &Tokenizer, corpus: &Corpus) -> Result<f64> {
    nonempty(corpus)?;
    let s = CorpusStats::collect(tokenizer, corpus);
    s.require_words()?;
    Ok(s.unk_pieces as f64 / s.pieces as f64)
}

/// Distinct word types over distinct emitted piece types, and that ratio
/// relative to a baseline tokenizer's raw ratio when one is given.
pub fn vocab_compression(
    tokenizer: &Tokenizer,
    corpus: &Corpus,
    baseline_raw: Option<f64>,
) -> Result<(f64, Option<f64>)> {
    nonempty(corpus)?;
    let s = CorpusStats::collect(tokenizer, corpus);
    s.require_words()?;
    let raw = s.word_types.len() as f64 / s.piece_types.len() as f64;
    Ok((raw, baseline_raw.map(|b| raw / b)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted: usize,
    pub gold: usize,
    pub matched: usize,
    /// Set when the tokenizer predicted no interior boundary at all, in which
    /// case precision is reported as 0.
    pub zero_predicted: bool,
}

/// Interior piece-junction offsets (in codepoints of the word) of an
/// encoding. The junction right after a lone `▁` is not interior.
pub fn predicted_boundaries(pieces: &[String]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut offset: isize = -1; // the leading ▁ is not part of the surface
    let total: isize = pieces.iter().map(|p| piece_span(p) as isize).sum::<isize>() - 1;
    for p in &pieces[..pieces.len().saturating_sub(1)] {
        offset += piece_span(p) as isize;
        if offset > 0 && offset < total {
            out.insert(offset as usize);
        }
    }
    out
}

/// Micro-averaged boundary precision/recall/F1 against a gold lexicon.
pub fn morph_preservation(tokenizer: &Tokenizer, lexicon: &MorphLexicon) -> Result<MorphScore> {
    if lexicon.is_empty() {
        return Err(Error::InvalidInput("morph lexicon is empty".into()));
    }
    let (mut predicted, mut gold, mut matched) = (0, 0, 0);
    for entry in &lexicon.entries {
        let pred = predicted_boundaries(&tokenizer.encode_word(&entry.surface));
        predicted += pred.len();
        gold += entry.boundaries.len();
        matched += entry.boundaries.iter().filter(|b| pred.contains(b)).count();
    }
    let precision = if predicted == 0 {
        0.0
    } else {
        matched as f64 / predicted as f64
    };
    let recall = if gold == 0 { 0.0 } else { matched as f64 / gold as f64 };
    let f1 = if matched == 0 {
        0.0
    } else {
        2.0 * matched as f64 / (predicted + gold) as f64
    };
    Ok(MorphScore {
        precision,
        recall,
        f1,
        predicted,
        gold,
        matched,
        zero_predicted: predicted == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicReport {
    pub tokenizer: String,
    pub corpus: String,
    pub script: String,
    pub sentences: usize,
    pub words: usize,
    pub pieces: usize,
    pub tokens_per_sentence: f64,
    pub fertility: f64,
    pub word_split_rate: f64,
    pub unk_rate: f64,
    pub word_types: usize,
    pub piece_types: usize,
    pub vocab_compression_raw: f64,
    #[serde(default)]
    pub vocab_compression_vs_baseline: Option<f64>,
    #[serde(default)]
    pub baseline: Option<String>,
    #[serde(default)]
    pub morph: Option<MorphScore>,
}

impl IntrinsicReport {
    /// Measures `tokenizer` on `corpus`. `label` names the tokenizer in the
    /// report (defaults to its display name).
    pub fn compute(
        tokenizer: &Tokenizer,
        label: Option<&str>,
        corpus: &Corpus,
        lexicon: Option<&MorphLexicon>,
    ) -> Result<Self> {
        nonempty(corpus)?;
        let s = CorpusStats::collect(tokenizer, corpus);
        s.require_words()?;
        let morph = match lexicon {
            Some(l) if !l.is_empty() => Some(morph_preservation(tokenizer, l)?),
            _ => None,
        };
        Ok(IntrinsicReport {
            tokenizer: label.map(str::to_string).unwrap_or_else(|| tokenizer.name()),
            corpus: corpus.language.clone(),
            script: corpus.script.clone(),
            sentences: s.sentences,
            words: s.words,
            pieces: s.pieces,
            tokens_per_sentence: s.pieces as f64 / s.sentences as f64,
            fertility: s.pieces as f64 / s.words as f64,
            word_split_rate: s.split_words as f64 / s.words as f64,
            unk_rate: s.unk_pieces as f64 / s.pieces as f64,
            word_types: s.word_types.len(),
            piece_types: s.piece_types.len(),
            vocab_compression_raw: s.word_types.len() as f64 / s.piece_types.len() as f64,
            vocab_compression_vs_baseline: None,
            baseline: None,
            morph,
        })
    }

    /// Fills in the baseline-relative compression ratio.
    pub fn with_baseline(mut self, baseline: &IntrinsicReport) -> Self {
        self.vocab_compression_vs_baseline = Some(self.vocab_compression_raw / baseline.vocab_compression_raw);
        self.baseline = Some(baseline.tokenizer.clone());
        self
    }
}
