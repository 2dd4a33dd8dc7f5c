//! Byte-pair encoding over codepoints.
//!
//! Training counts adjacent symbol pairs over word types weighted by their
//! frequency, and repeatedly merges the most frequent pair. Ties go to the
//! lexicographically smallest `(left, right)` pair in codepoint order. Pairs
//! seen fewer than twice are never merged, and a pair whose concatenation is
//! already a vocabulary piece is skipped so that every merge adds exactly one
//! piece.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{normalize, Corpus};
use crate::vocab::{word_symbols, Vocabulary, META, META_STR, UNK};

pub const MIN_PAIR_FREQUENCY: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRule {
    pub left: String,
    pub right: String,
    pub rank: usize,
    /// Weighted pair count at the moment the merge was selected.
    pub frequency: u64,
}

impl MergeRule {
    pub fn output(&self) -> String {
        format!("{}{}", self.left, self.right)
    }
}

#[derive(Debug, Clone)]
pub struct BpeModel {
    vocab: Vocabulary,
    merges: Vec<MergeRule>,
    alphabet: BTreeSet<char>,
    ranks: HashMap<(String, String), usize>,
}

impl PartialEq for BpeModel {
    fn eq(&self, other: &Self) -> bool {
        self.merges == other.merges && self.alphabet == other.alphabet
    }
}

impl BpeModel {
    /// Rebuilds a model from its alphabet and ordered merge list, checking
    /// that every merge only refers to pieces that already exist.
    pub fn from_parts(alphabet: BTreeSet<char>, merges: Vec<MergeRule>) -> Result<Self> {
        if !alphabet.contains(&META) {
            return Err(Error::InvalidInput("BPE alphabet must contain the meta symbol".into()));
        }
        let mut vocab = Vocabulary::from_pieces(alphabet.iter().map(|c| c.to_string()))?;
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, m) in merges.iter().enumerate() {
            if m.rank != rank {
                return Err(Error::InvalidInput(format!("merge {rank} has rank {}", m.rank)));
            }
            if !vocab.contains(&m.left) || !vocab.contains(&m.right) || m.left == UNK || m.right == UNK {
                return Err(Error::InvalidInput(format!(
                    "merge {rank} ({}, {}) uses an unknown piece",
                    m.left, m.right
                )));
            }
            if !vocab.push(m.output()) {
                return Err(Error::InvalidInput(format!(
                    "merge {rank} output `{}` is not new",
                    m.output()
                )));
            }
            ranks.insert((m.left.clone(), m.right.clone()), rank);
        }
        Ok(BpeModel {
            vocab,
            merges,
            alphabet,
            ranks,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    pub fn meta_symbol(&self) -> &'static str {
        META_STR
    }

    /// Encodes a single word (no whitespace) into pieces, `▁` included.
    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word_symbols(word)
            .into_iter()
            .map(|c| {
                if self.alphabet.contains(&c) {
                    c.to_string()
                } else {
                    UNK.to_string()
                }
            })
            .collect();
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let rule = &self.merges[rank];
            symbols = merge_in_place(symbols, &rule.left, &rule.right);
        }
        symbols
    }

    /// NFC-normalizes `text` and encodes it, one piece list per word.
    pub fn encode(&self, text: &str) -> Vec<Vec<String>> {
        normalize(text)
            .split_whitespace()
            .map(|w| self.encode_word(w))
            .collect()
    }
}

/// Merges every non-overlapping occurrence of `(left, right)`, scanning left
/// to right.
fn merge_in_place(symbols: Vec<String>, left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut iter = symbols.into_iter().peekable();
    while let Some(s) = iter.next() {
        if s == left && iter.peek().map(String::as_str) == Some(right) {
            let r = iter.next().unwrap();
            out.push(s + &r);
        } else {
            out.push(s);
        }
    }
    out
}

/// Counts word types (with the `▁` prefix applied) over a corpus.
pub(crate) fn word_frequencies(corpus: &Corpus) -> BTreeMap<&str, u64> {
    let mut freqs = BTreeMap::new();
    for w in corpus.words() {
        *freqs.entry(w).or_insert(0) += 1;
    }
    freqs
}

pub(crate) fn corpus_alphabet(corpus: &Corpus) -> BTreeSet<char> {
    let mut alphabet: BTreeSet<char> = corpus.words().flat_map(str::chars).collect();
    alphabet.insert(META);
    alphabet
}

/// Trains a BPE model until the vocabulary reaches `vocab_size` pieces
/// (counting `<unk>`) or no eligible pair occurs at least twice.
pub fn train_bpe(corpus: &Corpus, vocab_size: usize) -> Result<BpeModel> {
    if corpus.word_count() == 0 {
        return Err(Error::InvalidInput("cannot train BPE on an empty corpus".into()));
    }
    let alphabet = corpus_alphabet(corpus);
    if vocab_size < alphabet.len() + 1 {
        return Err(Error::InvalidInput(format!(
            "vocab_size {vocab_size} is smaller than alphabet ({}) plus <unk>",
            alphabet.len()
        )));
    }

    let mut trainer = PairTrainer::new(corpus, &alphabet);
    let mut vocab = Vocabulary::from_pieces(alphabet.iter().map(|c| c.to_string()))?;
    let mut merges = Vec::new();
    while vocab.len() < vocab_size {
        let Some((pair, count)) = trainer.best_pair(&vocab) else {
            break;
        };
        let left = trainer.symbols[pair.0 as usize].clone();
        let right = trainer.symbols[pair.1 as usize].clone();
        let output = format!("{left}{right}");
        vocab.push(output.clone());
        trainer.apply(pair, output);
        merges.push(MergeRule {
            left,
            right,
            rank: merges.len(),
            frequency: count,
        });
    }
    log::debug!("BPE: {} merges, vocab {}", merges.len(), vocab.len());
    BpeModel::from_parts(alphabet, merges)
}

type Pair = (u32, u32);

/// Incremental pair statistics over interned word types.
struct PairTrainer {
    symbols: Vec<String>,
    symbol_ids: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    counts: HashMap<Pair, u64>,
    occurrences: HashMap<Pair, BTreeSet<usize>>,
}

impl PairTrainer {
    fn new(corpus: &Corpus, alphabet: &BTreeSet<char>) -> Self {
        let mut t = PairTrainer {
            symbols: Vec::new(),
            symbol_ids: HashMap::new(),
            words: Vec::new(),
            counts: HashMap::new(),
            occurrences: HashMap::new(),
        };
        for c in alphabet {
            t.intern(c.to_string());
        }
        for (word, freq) in word_frequencies(corpus) {
            let ids = word_symbols(word)
                .into_iter()
                .map(|c| t.symbol_ids[&c.to_string()])
                .collect();
            t.words.push((ids, freq));
        }
        for idx in 0..t.words.len() {
            t.add_word(idx);
        }
        t
    }

    fn intern(&mut self, s: String) -> u32 {
        if let Some(&id) = self.symbol_ids.get(&s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbol_ids.insert(s.clone(), id);
        self.symbols.push(s);
        id
    }

    fn add_word(&mut self, idx: usize) {
        let (ids, freq) = &self.words[idx];
        for w in ids.windows(2) {
            let pair = (w[0], w[1]);
            *self.counts.entry(pair).or_insert(0) += freq;
            self.occurrences.entry(pair).or_default().insert(idx);
        }
    }

    fn remove_word(&mut self, idx: usize) {
        let (ids, freq) = &self.words[idx];
        for w in ids.windows(2) {
            let pair = (w[0], w[1]);
            if let Some(c) = self.counts.get_mut(&pair) {
                *c -= freq;
                if *c == 0 {
                    self.counts.remove(&pair);
                }
            }
        }
    }

    fn best_pair(&self, vocab: &Vocabulary) -> Option<(Pair, u64)> {
        self.counts
            .iter()
            .filter(|(_, &c)| c >= MIN_PAIR_FREQUENCY)
            .filter(|(p, _)| {
                let out = format!("{}{}", self.symbols[p.0 as usize], self.symbols[p.1 as usize]);
                !vocab.contains(&out)
            })
            .max_by_key(|(p, &c)| (c, Reverse((&self.symbols[p.0 as usize], &self.symbols[p.1 as usize]))))
            .map(|(p, &c)| (*p, c))
    }

    fn apply(&mut self, pair: Pair, output: String) {
        let new_id = self.intern(output);
        let affected: Vec<usize> = self.occurrences.remove(&pair).unwrap_or_default().into_iter().collect();
        for idx in affected {
            self.remove_word(idx);
            let ids = &mut self.words[idx].0;
            let mut merged = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == pair.0 && ids[i + 1] == pair.1 {
                    merged.push(new_id);
                    i += 2;
                } else {
                    merged.push(ids[i]);
                    i += 1;
                }
            }
            *ids = merged;
            self.add_word(idx);
        }
    }
}
