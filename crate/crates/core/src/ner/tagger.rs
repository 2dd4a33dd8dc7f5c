//! Averaged structured perceptron over word-level tag sequences.
//!
//! Each word is described by features of its pieces (identities, up to
//! three-character prefixes and suffixes, piece count, first and last piece,
//! neighbouring words' first pieces) and the previous tag. Decoding is Viterbi
//! restricted to IOB2-valid transitions; at equal scores the tag listed
//! first wins, and `O` is always listed first.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::align::{align_labels, AlignedSentence};
use crate::artifact::{Artifact, Provenance};
use crate::error::{Error, Result};
use crate::text::{iob2_valid, NerDocument, Tag};
use crate::tokenizer::Tokenizer;
use crate::vocab::META_STR;

const START: &str = "<s>";
const END: &str = "</s>";
const MAX_COUNT_FEATURE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig { epochs: 10, seed: 42 }
    }
}

fn transition_feature(prev: Option<&Tag>) -> String {
    match prev {
        Some(t) => format!("prev_tag={t}"),
        None => format!("prev_tag={START}"),
    }
}

/// Whether `cur` may follow `prev` (`None` = sentence start) under IOB2.
pub(crate) fn transition_allowed(prev: Option<&Tag>, cur: &Tag) -> bool {
    match cur {
        Tag::I(l) => matches!(prev, Some(Tag::B(p)) | Some(Tag::I(p)) if p == l),
        _ => true,
    }
}

fn push_affixes(out: &mut Vec<String>, piece: &str) {
    let chars: Vec<char> = piece.chars().collect();
    for k in 1..=3.min(chars.len()) {
        out.push(format!("pre{k}={}", chars[..k].iter().collect::<String>()));
        out.push(format!(
            "suf{k}={}",
            chars[chars.len() - k..].iter().collect::<String>()
        ));
    }
}

/// The pieces of word `i` that carry content: a lone leading `▁` only marks
/// the word boundary, which word-level tagging already knows.
fn content_pieces(sentence: &AlignedSentence, i: usize) -> &[String] {
    let pieces = sentence.word_pieces(i);
    match pieces {
        [first, rest @ ..] if !rest.is_empty() && first == META_STR => rest,
        _ => pieces,
    }
}

/// Emission features of word `i`; deduplicated and sorted.
fn word_features(sentence: &AlignedSentence, i: usize) -> Vec<String> {
    let pieces = content_pieces(sentence, i);
    let mut f = vec!["bias".to_string()];
    for p in pieces {
        f.push(format!("p={p}"));
        push_affixes(&mut f, p);
    }
    f.push(format!("n={}", pieces.len().min(MAX_COUNT_FEATURE)));
    f.push(format!("first={}", pieces[0]));
    f.push(format!("last={}", pieces[pieces.len() - 1]));
    let prev = if i == 0 {
        START
    } else {
        content_pieces(sentence, i - 1)[0].as_str()
    };
    f.push(format!("prev_first={prev}"));
    let next = if i + 1 < sentence.word_count() {
        content_pieces(sentence, i + 1)[0].as_str()
    } else {
        END
    };
    f.push(format!("next_first={next}"));
    f.sort();
    f.dedup();
    f
}

/// First-order Viterbi over `emissions[i][tag]` and `trans[prev][tag]`,
/// where row `n_tags` of `trans` is the start state.
fn viterbi(emissions: &[Vec<f64>], trans: &[Vec<f64>], allowed: &[Vec<bool>]) -> Vec<usize> {
    let n = emissions.len();
    if n == 0 {
        return Vec::new();
    }
    let t = emissions[0].len();
    let start = t;
    let mut score = vec![vec![f64::NEG_INFINITY; t]; n];
    let mut back = vec![vec![0usize; t]; n];
    for cur in 0..t {
        if allowed[start][cur] {
            score[0][cur] = trans[start][cur] + emissions[0][cur];
        }
    }
    for i in 1..n {
        for cur in 0..t {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for prev in 0..t {
                if !allowed[prev][cur] || score[i - 1][prev] == f64::NEG_INFINITY {
                    continue;
                }
                let s = score[i - 1][prev] + trans[prev][cur];
                if s > best {
                    best = s;
                    arg = prev;
                }
            }
            score[i][cur] = best + emissions[i][cur];
            back[i][cur] = arg;
        }
    }
    let mut last = 0;
    for cur in 1..t {
        if score[n - 1][cur] > score[n - 1][last] {
            last = cur;
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = last;
    for i in (1..n).rev() {
        path[i - 1] = back[i][path[i]];
    }
    path
}

fn allowed_matrix(tag_set: &[Tag]) -> Vec<Vec<bool>> {
    let mut rows: Vec<Vec<bool>> = tag_set
        .iter()
        .map(|p| tag_set.iter().map(|c| transition_allowed(Some(p), c)).collect())
        .collect();
    rows.push(tag_set.iter().map(|c| transition_allowed(None, c)).collect());
    rows
}

fn build_tag_set<'a>(labels: impl IntoIterator<Item = &'a String>) -> Vec<Tag> {
    let mut tags = vec![Tag::O];
    for l in labels {
        tags.push(Tag::B(l.clone()));
        tags.push(Tag::I(l.clone()));
    }
    tags
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    tag_set: Vec<Tag>,
    tokenizer_id: String,
    config: TaggerConfig,
    /// Averaged weight per tag for every feature with a non-zero weight.
    weights: BTreeMap<String, Vec<f64>>,
    allowed: Vec<Vec<bool>>,
}

impl TaggerModel {
    pub fn tag_set(&self) -> &[Tag] {
        &self.tag_set
    }

    pub fn tokenizer_id(&self) -> &str {
        &self.tokenizer_id
    }

    pub fn config(&self) -> TaggerConfig {
        self.config
    }

    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    /// Checks that `tokenizer` is the one this tagger was trained with.
    pub fn bind<'a>(&'a self, tokenizer: &'a Tokenizer) -> Result<BoundTagger<'a>> {
        let found = tokenizer.fingerprint();
        if found != self.tokenizer_id {
            return Err(Error::TokenizerMismatch {
                expected: self.tokenizer_id.clone(),
                found,
            });
        }
        Ok(BoundTagger { model: self, tokenizer })
    }

    fn score(&self, feats: &[String]) -> Vec<f64> {
        let mut s = vec![0.0; self.tag_set.len()];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (acc, x) in s.iter_mut().zip(w) {
                    *acc += x;
                }
            }
        }
        s
    }

    fn decode_aligned(&self, sentence: &AlignedSentence) -> Vec<Tag> {
        let emissions: Vec<Vec<f64>> = (0..sentence.word_count())
            .map(|i| self.score(&word_features(sentence, i)))
            .collect();
        let mut trans: Vec<Vec<f64>> = self
            .tag_set
            .iter()
            .map(|p| self.score(&[transition_feature(Some(p))]))
            .collect();
        trans.push(self.score(&[transition_feature(None)]));
        viterbi(&emissions, &trans, &self.allowed)
            .into_iter()
            .map(|i| self.tag_set[i].clone())
            .collect()
    }

    fn to_file(&self) -> TaggerFile {
        let mut weights = Vec::new();
        for (f, w) in &self.weights {
            for (tag, &v) in self.tag_set.iter().zip(w) {
                if v != 0.0 {
                    weights.push((f.clone(), tag.to_string(), v));
                }
            }
        }
        weights.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        TaggerFile {
            tag_set: self.tag_set.iter().map(ToString::to_string).collect(),
            tokenizer_id: self.tokenizer_id.clone(),
            seed: self.config.seed,
            epochs: self.config.epochs,
            weights,
        }
    }

    fn from_file(file: TaggerFile) -> Result<Self> {
        let tag_set: Vec<Tag> = file
            .tag_set
            .iter()
            .map(|t| {
                t.parse()
                    .map_err(|e| Error::InvalidInput(format!("tagger tag set: {e}")))
            })
            .collect::<Result<_>>()?;
        if tag_set.first() != Some(&Tag::O) {
            return Err(Error::InvalidInput("tagger tag set must start with O".into()));
        }
        let index: HashMap<&str, usize> = file.tag_set.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        let mut weights: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (f, tag, v) in file.weights {
            let &i = index
                .get(tag.as_str())
                .ok_or_else(|| Error::InvalidInput(format!("weight for unknown tag `{tag}`")))?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite weight for `{f}`")));
            }
            weights.entry(f).or_insert_with(|| vec![0.0; tag_set.len()])[i] = v;
        }
        Ok(TaggerModel {
            allowed: allowed_matrix(&tag_set),
            tag_set,
            tokenizer_id: file.tokenizer_id,
            config: TaggerConfig {
                epochs: file.epochs,
                seed: file.seed,
            },
            weights,
        })
    }

    pub fn to_json(&self, provenance: Option<Provenance>) -> Result<String> {
        Artifact::new(self.to_file(), provenance).to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(Artifact::<TaggerFile>::from_json(text, "tagger model")?.body)
    }

    pub fn save(&self, path: impl AsRef<Path>, provenance: Option<Provenance>) -> Result<()> {
        Artifact::new(self.to_file(), provenance).save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_file(Artifact::<TaggerFile>::load(path)?.body)
    }
}

/// On-disk tagger: weights as sorted `(feature, tag, value)` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerFile {
    pub tag_set: Vec<String>,
    pub tokenizer_id: String,
    pub seed: u64,
    pub epochs: usize,
    pub weights: Vec<(String, String, f64)>,
}

/// A tagger paired with the tokenizer it was trained with.
#[derive(Debug, Clone, Copy)]
pub struct BoundTagger<'a> {
    model: &'a TaggerModel,
    tokenizer: &'a Tokenizer,
}

impl BoundTagger<'_> {
    pub fn predict<S: AsRef<str>>(&self, words: &[S]) -> Vec<Tag> {
        if words.is_empty() {
            return Vec::new();
        }
        let dummy = vec![Tag::O; words.len()];
        let aligned = align_labels(words, &dummy, self.tokenizer).expect("lengths match");
        self.model.decode_aligned(&aligned)
    }

    pub fn predict_document(&self, doc: &NerDocument) -> Result<NerDocument> {
        let sentences = doc
            .sentences
            .iter()
            .map(|s| crate::text::NerSentence {
                words: s.words.clone(),
                tags: self.predict(&s.words),
            })
            .collect();
        NerDocument::new(sentences, &doc.language)
    }
}

/// Predicts word-level tags, refusing a tokenizer other than the one the
/// tagger was trained with.
pub fn predict<S: AsRef<str>>(tagger: &TaggerModel, tokenizer: &Tokenizer, words: &[S]) -> Result<Vec<Tag>> {
    Ok(tagger.bind(tokenizer)?.predict(words))
}

struct Instance {
    features: Vec<Vec<usize>>,
    gold: Vec<usize>,
}

/// Dense weights with the running sums needed for averaging.
struct Weights {
    n_tags: usize,
    current: Vec<f64>,
    accumulated: Vec<f64>,
    step: f64,
}

impl Weights {
    fn grow(&mut self, n_features: usize) {
        self.current.resize(n_features * self.n_tags, 0.0);
        self.accumulated.resize(n_features * self.n_tags, 0.0);
    }

    fn update(&mut self, feature: usize, tag: usize, delta: f64) {
        let i = feature * self.n_tags + tag;
        self.current[i] += delta;
        self.accumulated[i] += self.step * delta;
    }

    fn score(&self, features: &[usize]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_tags];
        for &f in features {
            let row = &self.current[f * self.n_tags..(f + 1) * self.n_tags];
            for (acc, w) in s.iter_mut().zip(row) {
                *acc += w;
            }
        }
        s
    }

    fn averaged(&self) -> Vec<f64> {
        self.current
            .iter()
            .zip(&self.accumulated)
            .map(|(w, u)| w - u / self.step)
            .collect()
    }
}

/// Trains a tagger on `doc` with features from `tokenizer`. Instance order
/// is reshuffled every epoch from a ChaCha RNG seeded with `config.seed`.
pub fn train_tagger(doc: &NerDocument, tokenizer: &Tokenizer, config: TaggerConfig) -> Result<TaggerModel> {
    if doc.is_empty() || doc.word_count() == 0 {
        return Err(Error::InvalidInput("cannot train a tagger on an empty document".into()));
    }
    for (i, s) in doc.sentences.iter().enumerate() {
        if s.words.len() != s.tags.len() || !iob2_valid(&s.tags) {
            return Err(Error::InvalidInput(format!(
                "sentence {i} is not a valid IOB2 sequence"
            )));
        }
        if s.tags
            .iter()
            .any(|t| t.label().is_some_and(|l| !doc.label_set.contains(l)))
        {
            return Err(Error::InvalidInput(format!(
                "sentence {i} uses a label outside the label set"
            )));
        }
    }
    let tag_set = build_tag_set(&doc.label_set);
    let n_tags = tag_set.len();
    let tag_index: HashMap<&Tag, usize> = tag_set.iter().enumerate().map(|(i, t)| (t, i)).collect();

    let mut feature_ids: HashMap<String, usize> = HashMap::new();
    let mut feature_names: Vec<String> = Vec::new();
    let mut intern = |name: String, ids: &mut HashMap<String, usize>| -> usize {
        if let Some(&id) = ids.get(&name) {
            return id;
        }
        let id = feature_names.len();
        feature_names.push(name.clone());
        ids.insert(name, id);
        id
    };
    let trans_ids: Vec<usize> = tag_set
        .iter()
        .map(Some)
        .chain(std::iter::once(None))
        .map(|p| intern(transition_feature(p), &mut feature_ids))
        .collect();
    let mut instances = Vec::with_capacity(doc.len());
    for s in doc.sentences.iter().filter(|s| !s.words.is_empty()) {
        let aligned = align_labels(&s.words, &s.tags, tokenizer)?;
        let features = (0..aligned.word_count())
            .map(|i| {
                word_features(&aligned, i)
                    .into_iter()
                    .map(|f| intern(f, &mut feature_ids))
                    .collect()
            })
            .collect();
        let gold = s.tags.iter().map(|t| tag_index[t]).collect();
        instances.push(Instance { features, gold });
    }

    let allowed = allowed_matrix(&tag_set);
    let mut weights = Weights {
        n_tags,
        current: Vec::new(),
        accumulated: Vec::new(),
        step: 1.0,
    };
    weights.grow(feature_names.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut mistakes = 0;
        for &k in &order {
            let inst = &instances[k];
            let emissions: Vec<Vec<f64>> = inst.features.iter().map(|f| weights.score(f)).collect();
            let trans: Vec<Vec<f64>> = trans_ids.iter().map(|&f| weights.score(&[f])).collect();
            let pred = viterbi(&emissions, &trans, &allowed);
            if pred != inst.gold {
                mistakes += 1;
                for i in 0..pred.len() {
                    let (g, p) = (inst.gold[i], pred[i]);
                    if g != p {
                        for &f in &inst.features[i] {
                            weights.update(f, g, 1.0);
                            weights.update(f, p, -1.0);
                        }
                    }
                    let gp = if i == 0 { n_tags } else { inst.gold[i - 1] };
                    let pp = if i == 0 { n_tags } else { pred[i - 1] };
                    if (gp, g) != (pp, p) {
                        weights.update(trans_ids[gp], g, 1.0);
                        weights.update(trans_ids[pp], p, -1.0);
                    }
                }
            }
            weights.step += 1.0;
        }
        log::debug!("tagger epoch {}: {mistakes} mistaken sentences", epoch + 1);
    }

    let averaged = weights.averaged();
    let mut table = BTreeMap::new();
    for (id, name) in feature_names.into_iter().enumerate() {
        let row = averaged[id * n_tags..(id + 1) * n_tags].to_vec();
        if row.iter().any(|&v| v != 0.0) {
            table.insert(name, row);
        }
    }
    Ok(TaggerModel {
        tag_set,
        tokenizer_id: tokenizer.fingerprint(),
        config,
        weights: table,
        allowed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::train_bpe;
    use crate::chars::CharTokenizer;
    use crate::text::{Corpus, NerSentence};

    fn sentence(pairs: &[(&str, &str)]) -> NerSentence {
        NerSentence {
            words: pairs.iter().map(|(w, _)| w.to_string()).collect(),
            tags: pairs.iter().map(|(_, t)| t.parse().unwrap()).collect(),
        }
    }

    fn chars() -> Tokenizer {
        Tokenizer::Char(CharTokenizer::default())
    }

    #[test]
    fn memorizes_a_repeated_sentence() {
        let s = sentence(&[
            ("ravi", "B-PER"),
            ("kumar", "I-PER"),
            ("went", "O"),
            ("to", "O"),
            ("delhi", "B-LOC"),
        ]);
        let doc = NerDocument::new(vec![s.clone(); 4], "xx").unwrap();
        let tok = chars();
        let model = train_tagger(&doc, &tok, TaggerConfig::default()).unwrap();
        assert_eq!(predict(&model, &tok, &s.words).unwrap(), s.tags);
    }

    #[test]
    fn zero_weights_decode_to_outside() {
        let model = TaggerModel {
            tag_set: build_tag_set(&["LOC".to_string(), "PER".to_string()]),
            tokenizer_id: chars().fingerprint(),
            config: TaggerConfig::default(),
            weights: BTreeMap::new(),
            allowed: allowed_matrix(&build_tag_set(&["LOC".to_string(), "PER".to_string()])),
        };
        let tags = predict(&model, &chars(), &["x", "y", "z"]).unwrap();
        assert_eq!(tags, vec![Tag::O; 3]);
    }

    #[test]
    fn viterbi_respects_transitions() {
        // Emissions strongly favour I-PER everywhere; the decoder must still
        // open the entity with B-PER.
        let tag_set = build_tag_set(&["PER".to_string()]);
        let allowed = allowed_matrix(&tag_set);
        let emissions = vec![vec![0.0, 1.0, 5.0]; 3];
        let trans = vec![vec![0.0; 3]; 4];
        let path = viterbi(&emissions, &trans, &allowed);
        let tags: Vec<Tag> = path.into_iter().map(|i| tag_set[i].clone()).collect();
        assert!(iob2_valid(&tags));
        assert_eq!(tags[0], Tag::B("PER".into()));
    }

    #[test]
    fn tokenizer_mismatch_is_rejected() {
        let s = sentence(&[("a", "B-PER"), ("b", "O")]);
        let doc = NerDocument::new(vec![s], "xx").unwrap();
        let model = train_tagger(&doc, &chars(), TaggerConfig::default()).unwrap();
        let bpe = Tokenizer::Bpe(train_bpe(&Corpus::from_lines(["a b a b"], "xx", "Latn"), 10).unwrap());
        assert!(matches!(
            predict(&model, &bpe, &["a"]),
            Err(Error::TokenizerMismatch { .. })
        ));
    }

    #[test]
    fn file_round_trip_and_determinism() {
        let doc = NerDocument::new(
            vec![
                sentence(&[("ravi", "B-PER"), ("went", "O"), ("home", "O")]),
                sentence(&[("to", "O"), ("delhi", "B-LOC"), ("city", "I-LOC")]),
                sentence(&[("sita", "B-PER"), ("saw", "O"), ("agra", "B-LOC")]),
            ],
            "xx",
        )
        .unwrap();
        let tok = chars();
        let cfg = TaggerConfig { epochs: 5, seed: 7 };
        let a = train_tagger(&doc, &tok, cfg).unwrap();
        let b = train_tagger(&doc, &tok, cfg).unwrap();
        let ja = a.to_json(None).unwrap();
        assert_eq!(ja, b.to_json(None).unwrap());
        let back = TaggerModel::from_json(&ja).unwrap();
        assert_eq!(back.to_json(None).unwrap(), ja);
        for s in &doc.sentences {
            assert_eq!(
                predict(&back, &tok, &s.words).unwrap(),
                predict(&a, &tok, &s.words).unwrap()
            );
        }
    }

    #[test]
    fn empty_document_is_rejected() {
        assert!(train_tagger(&NerDocument::default(), &chars(), TaggerConfig::default()).is_err());
    }
}
