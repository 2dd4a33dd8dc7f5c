//! A single handle over the three tokenizer kinds, plus their model files.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifact::{Artifact, Provenance};
use crate::bpe::{BpeModel, MergeRule};
use crate::chars::{CharMode, CharTokenizer};
use crate::error::{Error, Result};
use crate::text::normalize;
use crate::unigram::UnigramModel;
use crate::vocab::{META, META_STR, UNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    Bpe,
    Unigram,
    Char,
}

impl fmt::Display for TokenizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenizerKind::Bpe => "bpe",
            TokenizerKind::Unigram => "unigram",
            TokenizerKind::Char => "char",
        })
    }
}

impl FromStr for TokenizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bpe" => Ok(TokenizerKind::Bpe),
            "unigram" => Ok(TokenizerKind::Unigram),
            "char" => Ok(TokenizerKind::Char),
            other => Err(Error::InvalidInput(format!("unknown tokenizer kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tokenizer {
    Bpe(BpeModel),
    Unigram(UnigramModel),
    Char(CharTokenizer),
}

impl Tokenizer {
    pub fn kind(&self) -> TokenizerKind {
        match self {
            Tokenizer::Bpe(_) => TokenizerKind::Bpe,
            Tokenizer::Unigram(_) => TokenizerKind::Unigram,
            Tokenizer::Char(_) => TokenizerKind::Char,
        }
    }

    /// Vocabulary size including `<unk>`; `None` for the character tokenizer.
    pub fn vocab_size(&self) -> Option<usize> {
        match self {
            Tokenizer::Bpe(m) => Some(m.vocab().len()),
            Tokenizer::Unigram(m) => Some(m.vocab().len()),
            Tokenizer::Char(_) => None,
        }
    }

    /// Short display name, e.g. `bpe-300` or `char-grapheme`.
    pub fn name(&self) -> String {
        match self {
            Tokenizer::Char(c) => format!("char-{}", c.mode),
            other => format!("{}-{}", other.kind(), other.vocab_size().unwrap_or(0)),
        }
    }

    /// Name plus a content hash of the model, used to tie taggers to the
    /// exact tokenizer they were trained with.
    pub fn fingerprint(&self) -> String {
        let body = serde_json::to_string(&self.to_model_file()).expect("model files serialize");
        let digest = Sha256::digest(body.as_bytes());
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        format!("{}@{hex}", self.name())
    }

    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let pieces = match self {
            Tokenizer::Bpe(m) => m.encode_word(word),
            Tokenizer::Unigram(m) => m.encode_word(word),
            Tokenizer::Char(c) => c.encode_word(word),
        };
        debug_assert!(!pieces.is_empty());
        pieces
    }

    /// NFC-normalizes `text` and encodes it, one piece list per word.
    pub fn encode(&self, text: &str) -> Vec<Vec<String>> {
        normalize(text)
            .split_whitespace()
            .map(|w| self.encode_word(w))
            .collect()
    }

    pub fn is_unk(piece: &str) -> bool {
        piece == UNK
    }

    pub fn to_model_file(&self) -> ModelFile {
        match self {
            Tokenizer::Bpe(m) => ModelFile::Bpe {
                meta_symbol: META_STR.to_string(),
                alphabet: m.alphabet().iter().map(|c| c.to_string()).collect(),
                merges: m.merges().iter().map(|r| (r.left.clone(), r.right.clone())).collect(),
                merge_frequencies: m.merges().iter().map(|r| r.frequency).collect(),
                specials: vec![UNK.to_string()],
            },
            Tokenizer::Unigram(m) => ModelFile::Unigram {
                meta_symbol: META_STR.to_string(),
                pieces: m.pieces().to_vec(),
                alphabet: m.alphabet().iter().map(|c| c.to_string()).collect(),
                specials: vec![UNK.to_string()],
            },
            Tokenizer::Char(c) => ModelFile::Char {
                mode: c.mode,
                meta_symbol: META_STR.to_string(),
            },
        }
    }

    pub fn from_model_file(file: ModelFile) -> Result<Self> {
        let check_meta = |m: &str| {
            if m == META_STR {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("unsupported meta symbol `{m}`")))
            }
        };
        match file {
            ModelFile::Bpe {
                meta_symbol,
                alphabet,
                merges,
                merge_frequencies,
                ..
            } => {
                check_meta(&meta_symbol)?;
                if !merge_frequencies.is_empty() && merge_frequencies.len() != merges.len() {
                    return Err(Error::InvalidInput(
                        "merge_frequencies length differs from merges".into(),
                    ));
                }
                let rules = merges
                    .into_iter()
                    .enumerate()
                    .map(|(rank, (left, right))| MergeRule {
                        left,
                        right,
                        rank,
                        frequency: merge_frequencies.get(rank).copied().unwrap_or(0),
                    })
                    .collect();
                Ok(Tokenizer::Bpe(BpeModel::from_parts(parse_alphabet(&alphabet)?, rules)?))
            }
            ModelFile::Unigram {
                meta_symbol,
                pieces,
                alphabet,
                ..
            } => {
                check_meta(&meta_symbol)?;
                Ok(Tokenizer::Unigram(UnigramModel::from_pieces(
                    pieces,
                    parse_alphabet(&alphabet)?,
                )?))
            }
            ModelFile::Char { mode, meta_symbol } => {
                check_meta(&meta_symbol)?;
                Ok(Tokenizer::Char(CharTokenizer::new(mode)))
            }
        }
    }

    pub fn to_json(&self, provenance: Option<Provenance>) -> Result<String> {
        Artifact::new(self.to_model_file(), provenance).to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_model_file(Artifact::<ModelFile>::from_json(text, "tokenizer model")?.body)
    }

    pub fn save(&self, path: impl AsRef<Path>, provenance: Option<Provenance>) -> Result<()> {
        Artifact::new(self.to_model_file(), provenance).save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_model_file(Artifact::<ModelFile>::load(path)?.body)
    }
}

fn parse_alphabet(symbols: &[String]) -> Result<BTreeSet<char>> {
    let mut out = BTreeSet::new();
    for s in symbols {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => {
                out.insert(c);
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "alphabet entry `{s}` is not one codepoint"
                )))
            }
        }
    }
    if !out.contains(&META) {
        return Err(Error::InvalidInput("alphabet lacks the meta symbol".into()));
    }
    Ok(out)
}

/// On-disk tokenizer model, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelFile {
    Bpe {
        meta_symbol: String,
        alphabet: Vec<String>,
        /// `[left, right]` pairs in rank order.
        merges: Vec<(String, String)>,
        #[serde(default)]
        merge_frequencies: Vec<u64>,
        specials: Vec<String>,
    },
    Unigram {
        meta_symbol: String,
        /// `[piece, log_prob]` in id order (ids start at 1; `<unk>` is 0).
        pieces: Vec<(String, f64)>,
        alphabet: Vec<String>,
        specials: Vec<String>,
    },
    Char {
        mode: CharMode,
        meta_symbol: String,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::train_bpe;
    use crate::text::Corpus;
    use crate::unigram::{train_unigram, UnigramParams};

    fn corpus() -> Corpus {
        Corpus::from_lines(["কলম কলমটো কলমৰ", "ঘৰ ঘৰটো ঘৰৰ কলম"], "as", "Beng")
    }

    #[test]
    fn bpe_file_round_trip() {
        let tok = Tokenizer::Bpe(train_bpe(&corpus(), 30).unwrap());
        let json = tok.to_json(None).unwrap();
        assert!(json.contains("\"type\": \"bpe\""));
        assert!(json.contains("\"format_version\": 1"));
        let back = Tokenizer::from_json(&json).unwrap();
        assert_eq!(back, tok);
        assert_eq!(back.to_json(None).unwrap(), json);
    }

    #[test]
    fn unigram_file_round_trip_is_exact() {
        let tok = Tokenizer::Unigram(train_unigram(&corpus(), 25, &UnigramParams::default()).unwrap());
        let prov = Provenance {
            config_hash: "abc".into(),
            created_at: "1970-01-01T00:00:00Z".into(),
        };
        let json = tok.to_json(Some(prov)).unwrap();
        assert!(json.contains("\"config_hash\": \"abc\""));
        let back = Tokenizer::from_json(&json).unwrap();
        assert_eq!(back, tok);
        assert_eq!(back.fingerprint(), tok.fingerprint());
    }

    #[test]
    fn char_file_and_names() {
        let tok = Tokenizer::Char(CharTokenizer::new(CharMode::Grapheme));
        assert_eq!(tok.name(), "char-grapheme");
        let back = Tokenizer::from_json(&tok.to_json(None).unwrap()).unwrap();
        assert_eq!(back, tok);
        let bpe = Tokenizer::Bpe(train_bpe(&corpus(), 30).unwrap());
        let size = bpe.vocab_size().unwrap();
        assert!(size <= 30);
        assert_eq!(bpe.name(), format!("bpe-{size}"));
        assert!(bpe.fingerprint().starts_with(&format!("bpe-{size}@")));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Tokenizer::from_json(
            r#"{"format_version": 2, "type": "char", "mode": "codepoint", "meta_symbol": "▁"}"#
        )
        .is_err());
        assert!(Tokenizer::from_json(
            r#"{"format_version": 1, "type": "char", "mode": "codepoint", "meta_symbol": "_"}"#
        )
        .is_err());
        assert!(Tokenizer::from_json(r#"{"format_version": 1, "type": "bpe", "meta_symbol": "▁", "alphabet": ["▁","ab"], "merges": [], "specials": ["<unk>"]}"#).is_err());
    }
}
