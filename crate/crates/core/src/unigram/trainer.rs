//! Unigram training: substring seeding, EM re-estimation and
//! likelihood-based pruning.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{log_sum_exp, Lattice, UnigramModel};
use crate::bpe::{corpus_alphabet, word_frequencies};
use crate::error::{Error, Result};
use crate::text::Corpus;
use crate::vocab::word_symbols;

/// Pseudo-count given to pieces with zero expected usage so that every log
/// probability stays finite.
const ZERO_COUNT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnigramParams {
    pub max_piece_len: usize,
    /// Defaults to eight times the target vocabulary size.
    pub seed_size: Option<usize>,
    pub em_iters_per_round: usize,
    pub shrink_factor: f64,
}

impl Default for UnigramParams {
    fn default() -> Self {
        UnigramParams {
            max_piece_len: 8,
            seed_size: None,
            em_iters_per_round: 2,
            shrink_factor: 0.75,
        }
    }
}

type WordTypes = Vec<(Vec<char>, u64)>;

fn word_types(corpus: &Corpus) -> WordTypes {
    word_frequencies(corpus)
        .into_iter()
        .map(|(w, f)| (word_symbols(w), f))
        .collect()
}

/// Counts every within-word substring of at most `max_piece_len` codepoints
/// (the `▁`-prefixed forms included) and keeps the best `seed_size` by
/// `count × length`. Single codepoints are always kept and come first.
pub fn seed_vocab(corpus: &Corpus, max_piece_len: usize, seed_size: usize) -> Result<Vec<(String, u64)>> {
    if corpus.word_count() == 0 {
        return Err(Error::InvalidInput(
            "cannot seed a vocabulary from an empty corpus".into(),
        ));
    }
    if max_piece_len == 0 {
        return Err(Error::InvalidInput("max_piece_len must be at least 1".into()));
    }
    let alphabet = corpus_alphabet(corpus);
    if seed_size < alphabet.len() {
        return Err(Error::InvalidInput(format!(
            "seed_size {seed_size} is smaller than the alphabet ({})",
            alphabet.len()
        )));
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (symbols, freq) in word_types(corpus) {
        for start in 0..symbols.len() {
            let mut piece = String::new();
            for end in start + 1..=symbols.len().min(start + max_piece_len) {
                piece.push(symbols[end - 1]);
                *counts.entry(piece.clone()).or_insert(0) += freq;
            }
        }
    }
    let mut seeds: Vec<(String, u64)> = alphabet
        .iter()
        .map(|c| {
            let s = c.to_string();
            let n = counts.get(&s).copied().unwrap_or(0);
            (s, n)
        })
        .collect();
    let mut multi: Vec<(String, u64)> = counts.into_iter().filter(|(p, _)| p.chars().count() > 1).collect();
    multi.sort_by(|a, b| {
        let sa = a.1 * a.0.chars().count() as u64;
        let sb = b.1 * b.0.chars().count() as u64;
        sb.cmp(&sa).then_with(|| a.0.cmp(&b.0))
    });
    multi.truncate(seed_size - seeds.len());
    seeds.extend(multi);
    Ok(seeds)
}

fn model_from_counts(counts: Vec<(String, f64)>, alphabet: BTreeSet<char>) -> Result<UnigramModel> {
    let total: f64 = counts.iter().map(|(_, c)| c.max(ZERO_COUNT_FLOOR)).sum();
    let log_total = total.ln();
    let pieces = counts
        .into_iter()
        .map(|(p, c)| (p, c.max(ZERO_COUNT_FLOOR).ln() - log_total))
        .collect();
    UnigramModel::from_pieces(pieces, alphabet)
}

#[derive(Debug, Clone)]
pub struct EmStep {
    pub model: UnigramModel,
    /// `Σ freq(w) · log Z(w)` under the model before the update.
    pub log_likelihood: f64,
    /// Word types skipped because they contain codepoints outside the alphabet.
    pub skipped_words: usize,
}

/// One EM iteration at fixed vocabulary: forward-backward expected piece
/// counts, then `log_prob = log(count / total)`.
pub fn em_step(model: &UnigramModel, corpus: &Corpus) -> Result<EmStep> {
    if corpus.word_count() == 0 {
        return Err(Error::InvalidInput("EM needs a non-empty corpus".into()));
    }
    em_step_words(model, &word_types(corpus))
}

fn em_step_words(model: &UnigramModel, words: &WordTypes) -> Result<EmStep> {
    let mut expected = vec![0.0f64; model.pieces().len()];
    let mut log_likelihood = 0.0;
    let mut skipped = 0;
    for (symbols, freq) in words {
        if symbols.iter().any(|c| !model.alphabet().contains(c)) {
            skipped += 1;
            continue;
        }
        let lattice = Lattice::build(model, symbols, None);
        let (marginals, z) = lattice.edge_marginals();
        let f = *freq as f64;
        log_likelihood += f * z;
        for (edge, m) in lattice.edges().iter().zip(marginals) {
            if let Some(idx) = edge.piece {
                expected[idx] += f * m;
            }
        }
    }
    if skipped > 0 {
        log::warn!("EM skipped {skipped} word types with out-of-alphabet codepoints");
    }
    let counts = model
        .pieces()
        .iter()
        .zip(expected)
        .map(|((p, _), c)| (p.clone(), c))
        .collect();
    let model = model_from_counts(counts, model.alphabet().clone())?;
    Ok(EmStep {
        model,
        log_likelihood,
        skipped_words: skipped,
    })
}

/// Keeps the `⌈shrink_factor · n⌉` prunable pieces whose removal would cost
/// the most corpus log-likelihood, plus the whole alphabet, and
/// renormalizes.
pub fn prune(model: &UnigramModel, corpus: &Corpus, shrink_factor: f64) -> Result<UnigramModel> {
    if !(shrink_factor > 0.0 && shrink_factor < 1.0) {
        return Err(Error::InvalidInput(format!(
            "shrink_factor {shrink_factor} must lie in (0, 1)"
        )));
    }
    let n = prunable_count(model);
    prune_to(model, &word_types(corpus), scaled_keep(n, shrink_factor))
}

fn prunable_count(model: &UnigramModel) -> usize {
    (0..model.pieces().len()).filter(|&i| model.is_prunable(i)).count()
}

fn scaled_keep(n: usize, shrink_factor: f64) -> usize {
    // The epsilon keeps e.g. 0.7 * 10 from rounding up to 8.
    ((shrink_factor * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Removal loss of each piece under the Viterbi approximation: only words
/// whose best path uses the piece are re-segmented without it.
fn removal_losses(model: &UnigramModel, words: &WordTypes) -> Vec<f64> {
    let n = model.pieces().len();
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut base = Vec::with_capacity(words.len());
    for (wi, (symbols, _)) in words.iter().enumerate() {
        let (path, score) = Lattice::build(model, symbols, None).viterbi();
        base.push(score);
        for e in path {
            if let Some(p) = e.piece {
                if users[p].last() != Some(&wi) {
                    users[p].push(wi);
                }
            }
        }
    }
    let mut losses = vec![0.0; n];
    for p in 0..n {
        if !model.is_prunable(p) {
            continue;
        }
        for &wi in &users[p] {
            let (symbols, freq) = &words[wi];
            let (_, without) = Lattice::build(model, symbols, Some(p)).viterbi();
            losses[p] += *freq as f64 * (base[wi] - without);
        }
    }
    losses
}

fn prune_to(model: &UnigramModel, words: &WordTypes, keep: usize) -> Result<UnigramModel> {
    let losses = removal_losses(model, words);
    let pieces = model.pieces();
    let mut prunable: Vec<usize> = (0..pieces.len()).filter(|&i| model.is_prunable(i)).collect();
    prunable.sort_by(|&a, &b| {
        losses[b]
            .total_cmp(&losses[a])
            .then_with(|| pieces[b].1.total_cmp(&pieces[a].1))
            .then_with(|| pieces[a].0.cmp(&pieces[b].0))
    });
    let survivors: BTreeSet<usize> = prunable.into_iter().take(keep).collect();
    let kept: Vec<(String, f64)> = pieces
        .iter()
        .enumerate()
        .filter(|(i, _)| !model.is_prunable(*i) || survivors.contains(i))
        .map(|(_, p)| p.clone())
        .collect();
    let lse = kept
        .iter()
        .fold(f64::NEG_INFINITY, |acc, (_, lp)| log_sum_exp(acc, *lp));
    let kept = kept.into_iter().map(|(p, lp)| (p, lp - lse)).collect();
    UnigramModel::from_pieces(kept, model.alphabet().clone())
}

/// Seeds, then alternates EM rounds and pruning until the vocabulary (with
/// `<unk>`) fits in `vocab_size`, and finishes with one more EM round.
pub fn train_unigram(corpus: &Corpus, vocab_size: usize, params: &UnigramParams) -> Result<UnigramModel> {
    if corpus.word_count() == 0 {
        return Err(Error::InvalidInput(
            "cannot train a unigram model on an empty corpus".into(),
        ));
    }
    if !(params.shrink_factor > 0.0 && params.shrink_factor < 1.0) {
        return Err(Error::InvalidInput(format!(
            "shrink_factor {} must lie in (0, 1)",
            params.shrink_factor
        )));
    }
    let alphabet = corpus_alphabet(corpus);
    if vocab_size < alphabet.len() + 1 {
        return Err(Error::InvalidInput(format!(
            "vocab_size {vocab_size} is smaller than alphabet ({}) plus <unk>",
            alphabet.len()
        )));
    }
    let seed_size = params.seed_size.unwrap_or(8 * vocab_size).max(alphabet.len());
    let seeds = seed_vocab(corpus, params.max_piece_len, seed_size)?;
    let words = word_types(corpus);
    let mut model = model_from_counts(
        seeds.into_iter().map(|(p, c)| (p, c as f64)).collect(),
        alphabet.clone(),
    )?;

    let target_pieces = vocab_size - 1;
    let target_prunable = target_pieces - alphabet.len();
    let mut round = 0;
    while model.pieces().len() > target_pieces {
        for _ in 0..params.em_iters_per_round {
            model = em_step_words(&model, &words)?.model;
        }
        let n = prunable_count(&model);
        // Always drop at least one piece so that small vocabularies terminate.
        let keep = scaled_keep(n, params.shrink_factor).min(n - 1).max(target_prunable);
        model = prune_to(&model, &words, keep)?;
        round += 1;
        log::debug!("unigram round {round}: {} pieces", model.pieces().len());
    }
    for _ in 0..params.em_iters_per_round {
        model = em_step_words(&model, &words)?.model;
    }
    Ok(model)
}
