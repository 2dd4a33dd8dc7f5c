//! Unigram language-model tokenizer.
//!
//! Every piece carries an independent log probability; a word is segmented
//! by the maximum-likelihood path through its lattice of matching pieces.
//! Pieces never span a word boundary, and `▁` is an ordinary symbol.

mod lattice;
mod trainer;

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::text::normalize;
use crate::vocab::{word_symbols, Vocabulary, META, META_STR, UNK};

pub use lattice::Lattice;
pub use trainer::{em_step, prune, seed_vocab, train_unigram, EmStep, UnigramParams};

/// How far below the least likely piece an unknown codepoint scores.
pub const UNK_PENALTY: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct UnigramModel {
    vocab: Vocabulary,
    /// Regular pieces in id order (id = position + 1; id 0 is `<unk>`).
    pieces: Vec<(String, f64)>,
    index: HashMap<String, usize>,
    alphabet: BTreeSet<char>,
    max_piece_chars: usize,
    unk_log_prob: f64,
}

impl UnigramModel {
    /// Builds a model from `(piece, log_prob)` pairs in id order. Every
    /// alphabet symbol must be present as a piece and every log probability
    /// finite.
    pub fn from_pieces(pieces: Vec<(String, f64)>, alphabet: BTreeSet<char>) -> Result<Self> {
        if !alphabet.contains(&META) {
            return Err(Error::InvalidInput(
                "unigram alphabet must contain the meta symbol".into(),
            ));
        }
        let vocab = Vocabulary::from_pieces(pieces.iter().map(|(p, _)| p.clone()))?;
        let mut index = HashMap::with_capacity(pieces.len());
        let mut max_piece_chars = 1;
        let mut min_lp = f64::INFINITY;
        for (i, (p, lp)) in pieces.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidInput("empty unigram piece".into()));
            }
            if !lp.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "piece `{p}` has non-finite log probability"
                )));
            }
            index.insert(p.clone(), i);
            max_piece_chars = max_piece_chars.max(p.chars().count());
            min_lp = min_lp.min(*lp);
        }
        for c in &alphabet {
            if !index.contains_key(c.to_string().as_str()) {
                return Err(Error::InvalidInput(format!(
                    "alphabet symbol `{c}` missing from pieces"
                )));
            }
        }
        Ok(UnigramModel {
            vocab,
            pieces,
            index,
            alphabet,
            max_piece_chars,
            unk_log_prob: min_lp - UNK_PENALTY,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn pieces(&self) -> &[(String, f64)] {
        &self.pieces
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    pub fn meta_symbol(&self) -> &'static str {
        META_STR
    }

    pub fn log_prob(&self, piece: &str) -> Option<f64> {
        self.index.get(piece).map(|&i| self.pieces[i].1)
    }

    pub fn unk_log_prob(&self) -> f64 {
        self.unk_log_prob
    }

    pub(crate) fn piece_index(&self, piece: &str) -> Option<usize> {
        self.index.get(piece).copied()
    }

    pub(crate) fn max_piece_chars(&self) -> usize {
        self.max_piece_chars
    }

    pub(crate) fn is_prunable(&self, idx: usize) -> bool {
        let p = &self.pieces[idx].0;
        let mut chars = p.chars();
        !(chars.next().is_some() && chars.next().is_none())
    }

    /// Total probability mass of the regular pieces; 1 up to rounding.
    pub fn probability_mass(&self) -> f64 {
        self.pieces.iter().map(|(_, lp)| lp.exp()).sum()
    }

    pub fn lattice(&self, word: &str) -> Lattice {
        Lattice::build(self, &word_symbols(word), None)
    }

    /// Viterbi segmentation of one word together with its path log score.
    pub fn encode_word_scored(&self, word: &str) -> (Vec<String>, f64) {
        let lattice = self.lattice(word);
        let (path, score) = lattice.viterbi();
        let pieces = path.iter().map(|e| self.edge_piece(e.piece).to_string()).collect();
        (pieces, score)
    }

    pub fn encode_word(&self, word: &str) -> Vec<String> {
        self.encode_word_scored(word).0
    }

    pub fn encode(&self, text: &str) -> Vec<Vec<String>> {
        normalize(text)
            .split_whitespace()
            .map(|w| self.encode_word(w))
            .collect()
    }

    pub(crate) fn edge_piece(&self, piece: Option<usize>) -> &str {
        match piece {
            Some(i) => &self.pieces[i].0,
            None => UNK,
        }
    }
}

pub(crate) fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
