//! Experiment configuration: parsing (TOML or JSON), validation and hashing.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::chars::CharMode;
use crate::error::{Error, Result};
use crate::tokenizer::TokenizerKind;
use crate::unigram::UnigramParams;

pub const OUTPUT_ENV: &str = "TOKLAB_OUTPUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenizerSpec {
    pub kind: TokenizerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
}

/// Kind-specific training parameters, checked against the spec's `params`.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainerParams {
    Bpe { vocab_size: usize },
    Unigram { vocab_size: usize, params: UnigramParams },
    Char { mode: CharMode },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CharParams {
    mode: CharMode,
}

fn params_from<T: for<'de> Deserialize<'de> + Default>(value: &Option<Value>, field: &str) -> Result<T> {
    match value {
        None => Ok(T::default()),
        Some(v) => serde_path_to_error::deserialize(v).map_err(|e| {
            let inner = e.path().to_string();
            let field = if inner == "." {
                field.to_string()
            } else {
                format!("{field}.{inner}")
            };
            Error::config(field, e.into_inner().to_string())
        }),
    }
}

impl TokenizerSpec {
    /// Validated training parameters; `field` prefixes error paths.
    pub fn trainer_params(&self, field: &str) -> Result<TrainerParams> {
        let params_field = format!("{field}.params");
        let need_size = || {
            self.vocab_size.ok_or_else(|| {
                Error::config(
                    format!("{field}.vocab_size"),
                    format!("required for {} tokenizers", self.kind),
                )
            })
        };
        Ok(match self.kind {
            TokenizerKind::Bpe => {
                params_from::<NoParams>(&self.params, &params_field)?;
                TrainerParams::Bpe {
                    vocab_size: need_size()?,
                }
            }
            TokenizerKind::Unigram => {
                let params: UnigramParams = params_from(&self.params, &params_field)?;
                if !(params.shrink_factor > 0.0 && params.shrink_factor < 1.0) {
                    return Err(Error::config(
                        format!("{params_field}.shrink_factor"),
                        "must lie in (0, 1)",
                    ));
                }
                if params.max_piece_len == 0 {
                    return Err(Error::config(
                        format!("{params_field}.max_piece_len"),
                        "must be positive",
                    ));
                }
                TrainerParams::Unigram {
                    vocab_size: need_size()?,
                    params,
                }
            }
            TokenizerKind::Char => {
                if self.vocab_size.is_some() {
                    return Err(Error::config(
                        format!("{field}.vocab_size"),
                        "not used by char tokenizers",
                    ));
                }
                let p: CharParams = params_from(&self.params, &params_field)?;
                TrainerParams::Char { mode: p.mode }
            }
        })
    }

    /// `bpe-400`, `unigram-400`, `char-codepoint`: names model files and
    /// report rows.
    pub fn stem(&self) -> String {
        match (self.kind, self.vocab_size) {
            (TokenizerKind::Char, _) => {
                let mode = params_from::<CharParams>(&self.params, "params")
                    .map(|p| p.mode)
                    .unwrap_or_default();
                format!("char-{mode}")
            }
            (kind, Some(n)) => format!("{kind}-{n}"),
            (kind, None) => kind.to_string(),
        }
    }

    pub fn model_file_name(&self) -> String {
        format!("{}.model.json", self.stem())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Tokenizer training text, or the tagger's training set when CoNLL.
    Train,
    Test,
    Intrinsic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Conll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub path: PathBuf,
    pub language: String,
    pub script: String,
    pub role: Role,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
}

fn default_epochs() -> usize {
    10
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NerSpec {
    pub train_language: String,
    pub test_languages: Vec<String>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicSpec {
    /// Tokenizer (by stem or kind) that vocabulary compression is
    /// normalized against; defaults to the first BPE tokenizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tokenizers: Vec<TokenizerSpec>,
    #[serde(default)]
    pub corpora: Vec<CorpusSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ner: Option<NerSpec>,
    #[serde(default)]
    pub intrinsic: IntrinsicSpec,
    pub output_dir: PathBuf,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reads and validates a config; `.json` files are JSON, anything else
    /// TOML. `TOKLAB_OUTPUT` overrides `output_dir`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut config = Self::parse(&text, is_json, base)?;
        if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()) {
            config.output_dir = std::env::current_dir()
                .map(|c| c.join(dir.clone()))
                .unwrap_or_else(|_| dir.into());
        }
        Ok(config)
    }

    pub fn parse(text: &str, is_json: bool, base_dir: PathBuf) -> Result<Self> {
        let located = |e: String, path: String| {
            let field = if path == "." { "(root)".to_string() } else { path };
            Error::config(field, e)
        };
        let mut config: ExperimentConfig = if is_json {
            let mut de = serde_json::Deserializer::from_str(text);
            serde_path_to_error::deserialize(&mut de)
                .map_err(|e| located(e.inner().to_string(), e.path().to_string()))?
        } else {
            let de = toml::Deserializer::new(text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                let path = e.path().to_string();
                located(e.into_inner().message().to_string(), path)
            })?
        };
        config.base_dir = base_dir;
        config.validate()?;
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    fn validate(&self) -> Result<()> {
        if self.tokenizers.is_empty() {
            return Err(Error::config("tokenizers", "at least one tokenizer is required"));
        }
        let mut stems = BTreeSet::new();
        for (i, t) in self.tokenizers.iter().enumerate() {
            let field = format!("tokenizers[{i}]");
            if let Some(0 | 1) = t.vocab_size {
                return Err(Error::config(format!("{field}.vocab_size"), "must be at least 2"));
            }
            t.trainer_params(&field)?;
            if !stems.insert(t.stem()) {
                return Err(Error::config(field, format!("duplicate tokenizer `{}`", t.stem())));
            }
        }
        let mut intrinsic_langs = BTreeSet::new();
        for (i, c) in self.corpora.iter().enumerate() {
            let field = format!("corpora[{i}]");
            if !self.resolve(&c.path).is_file() {
                return Err(Error::config(
                    format!("{field}.path"),
                    format!("{} does not exist", c.path.display()),
                ));
            }
            if c.language.is_empty() {
                return Err(Error::config(format!("{field}.language"), "must not be empty"));
            }
            match (c.role, c.format) {
                (Role::Intrinsic, Format::Conll) => {
                    return Err(Error::config(
                        format!("{field}.format"),
                        "intrinsic corpora must be plain text",
                    ))
                }
                (Role::Test, Format::Text) => {
                    return Err(Error::config(format!("{field}.format"), "test corpora must be CoNLL"))
                }
                _ => {}
            }
            if let Some(lex) = &c.lexicon {
                if c.role != Role::Intrinsic {
                    return Err(Error::config(
                        format!("{field}.lexicon"),
                        "only intrinsic corpora take a lexicon",
                    ));
                }
                if !self.resolve(lex).is_file() {
                    return Err(Error::config(
                        format!("{field}.lexicon"),
                        format!("{} does not exist", lex.display()),
                    ));
                }
            }
            if c.role == Role::Intrinsic && !intrinsic_langs.insert(c.language.as_str()) {
                return Err(Error::config(
                    format!("{field}.language"),
                    format!("duplicate intrinsic corpus for `{}`", c.language),
                ));
            }
        }
        if let Some(ner) = &self.ner {
            if ner.train_language.is_empty() {
                return Err(Error::config("ner.train_language", "must not be empty"));
            }
            let n = self.conll_corpora(Role::Train, &ner.train_language).count();
            if n != 1 {
                return Err(Error::config(
                    "ner.train_language",
                    format!(
                        "expected exactly one CoNLL train corpus for `{}`, found {n}",
                        ner.train_language
                    ),
                ));
            }
            if ner.test_languages.is_empty() {
                return Err(Error::config(
                    "ner.test_languages",
                    "at least one test language is required",
                ));
            }
            for (j, lang) in ner.test_languages.iter().enumerate() {
                let n = self.conll_corpora(Role::Test, lang).count();
                if n != 1 {
                    return Err(Error::config(
                        format!("ner.test_languages[{j}]"),
                        format!("expected exactly one CoNLL test corpus for `{lang}`, found {n}"),
                    ));
                }
            }
            if ner.epochs == 0 {
                return Err(Error::config("ner.epochs", "must be positive"));
            }
        }
        if let Some(b) = &self.intrinsic.baseline {
            if self.baseline().is_none() {
                return Err(Error::config(
                    "intrinsic.baseline",
                    format!("no tokenizer matches `{b}`"),
                ));
            }
        }
        Ok(())
    }

    fn conll_corpora<'a>(&'a self, role: Role, language: &'a str) -> impl Iterator<Item = &'a CorpusSpec> {
        self.corpora
            .iter()
            .filter(move |c| c.role == role && c.format == Format::Conll && c.language == language)
    }

    pub fn ner_corpus(&self, role: Role, language: &str) -> Option<&CorpusSpec> {
        self.corpora
            .iter()
            .find(|c| c.role == role && c.format == Format::Conll && c.language == language)
    }

    pub fn text_corpora(&self, role: Role) -> impl Iterator<Item = &CorpusSpec> {
        self.corpora
            .iter()
            .filter(move |c| c.role == role && c.format == Format::Text)
    }

    /// The tokenizer spec that intrinsic compression is normalized against.
    pub fn baseline(&self) -> Option<&TokenizerSpec> {
        match &self.intrinsic.baseline {
            Some(b) => self
                .tokenizers
                .iter()
                .find(|t| t.stem() == *b)
                .or_else(|| self.tokenizers.iter().find(|t| t.kind.to_string() == *b)),
            None => self.tokenizers.iter().find(|t| t.kind == TokenizerKind::Bpe),
        }
    }

    /// SHA-256 over the config (minus `output_dir`) and the contents of
    /// every file it references.
    pub fn hash(&self) -> Result<String> {
        let mut value = serde_json::to_value(self).map_err(|e| Error::json("hash config", e))?;
        if let Value::Object(map) = &mut value {
            map.remove("output_dir");
        }
        let mut files = BTreeMap::new();
        let referenced = self
            .corpora
            .iter()
            .flat_map(|c| std::iter::once(&c.path).chain(c.lexicon.as_ref()));
        for p in referenced {
            let full = self.resolve(p);
            let bytes = fs::read(&full).map_err(|e| Error::io(&full, e))?;
            files.insert(p.display().to_string(), hex(&Sha256::digest(&bytes)));
        }
        let canonical = serde_json::json!({ "config": value, "files": files });
        Ok(hex(&Sha256::digest(canonical.to_string().as_bytes())))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
