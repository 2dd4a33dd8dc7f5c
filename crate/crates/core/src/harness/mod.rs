//! Config-driven experiment runs: tokenizer training, intrinsic metrics,
//! tagger training and zero-shot evaluation, and the summary report.

mod config;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    CorpusSpec, ExperimentConfig, Format, IntrinsicSpec, NerSpec, Role, TokenizerSpec, TrainerParams, OUTPUT_ENV,
};

use crate::artifact::{Artifact, Provenance};
use crate::bpe::train_bpe;
use crate::chars::CharTokenizer;
use crate::error::{Error, Result};
use crate::intrinsic::IntrinsicReport;
use crate::ner::{train_tagger, TaggerConfig, TaggerModel};
use crate::report::{self, compare_report, MetricsReport, TransferScore};
use crate::scoring::{entity_prf, NerScore};
use crate::text::{load_corpus, load_morph_lexicon, parse_conll, Corpus, NerDocument};
use crate::tokenizer::{ModelFile, Tokenizer, TokenizerKind};
use crate::unigram::train_unigram;

pub const LOCK_FILE: &str = ".toklab.lock";
const EPOCH_ENV: &str = "SOURCE_DATE_EPOCH";

pub const TOKENIZER_DIR: &str = "tokenizers";
pub const INTRINSIC_DIR: &str = "intrinsic";
pub const TAGGER_DIR: &str = "taggers";
pub const PREDICTION_DIR: &str = "predictions";
pub const SCORE_DIR: &str = "scores";
pub const ZEROSHOT_DIR: &str = "zeroshot";
pub const SUMMARY_FILE: &str = "summary.md";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub force: bool,
    pub include_char: bool,
    pub mixed: bool,
    pub seed: Option<u64>,
}

/// Creation time for artifacts: `SOURCE_DATE_EPOCH` if set, otherwise the
/// Unix epoch, so reruns stay byte-identical.
pub fn created_at() -> String {
    let secs = std::env::var(EPOCH_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .unwrap_or(0);
    chrono::DateTime::from_timestamp(secs, 0)
        .unwrap_or_default()
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Exclusive hold on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(OutputLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked { path }),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Per-tokenizer, per-corpus intrinsic results plus the baseline used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IntrinsicFile {
    report: IntrinsicReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScoreFile {
    tokenizer: String,
    source: String,
    target: String,
    score: NerScore,
}

pub struct Harness {
    config: ExperimentConfig,
    options: RunOptions,
    provenance: Provenance,
    output_dir: PathBuf,
}

impl Harness {
    pub fn new(mut config: ExperimentConfig, options: RunOptions) -> Result<Self> {
        if let (Some(seed), Some(ner)) = (options.seed, config.ner.as_mut()) {
            ner.seed = seed;
        }
        let provenance = Provenance {
            config_hash: config.hash()?,
            created_at: created_at(),
        };
        let output_dir = config.output_dir();
        Ok(Harness {
            config,
            options,
            provenance,
            output_dir,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.provenance.config_hash
    }

    pub fn output_dir(&self) -> &Path {
        &self.output_dir
    }

    pub fn lock(&self) -> Result<OutputLock> {
        OutputLock::acquire(&self.output_dir)
    }

    fn write(&self, rel: impl AsRef<Path>, contents: &str) -> Result<PathBuf> {
        write_output(&self.output_dir.join(rel), contents, self.options.force)
    }

    fn write_artifact<T: Serialize>(&self, rel: impl AsRef<Path>, body: T) -> Result<PathBuf> {
        self.write(rel, &Artifact::new(body, Some(self.provenance.clone())).to_json()?)
    }

    fn check_provenance(&self, path: &Path) -> Result<()> {
        check_hash(path, &self.provenance.config_hash, self.options.mixed)
    }

    fn tokenizer_training_corpus(&self) -> Result<Corpus> {
        let parts: Vec<Corpus> = self
            .config
            .text_corpora(Role::Train)
            .map(|c| load_corpus(self.config.resolve(&c.path), &c.language, &c.script))
            .collect::<Result<_>>()?;
        if parts.is_empty() {
            return Err(Error::config("corpora", "no plain-text corpus with role = \"train\""));
        }
        Ok(Corpus::concat(&parts, "train", "mixed"))
    }

    /// Trains every configured tokenizer and writes
    /// `tokenizers/{kind}-{vocab_size}.model.json`.
    pub fn train_tokenizers(&self) -> Result<Vec<PathBuf>> {
        let mut targets = Vec::new();
        for spec in &self.config.tokenizers {
            let path = self.output_dir.join(TOKENIZER_DIR).join(spec.model_file_name());
            if path.exists() && !self.options.force {
                return Err(Error::OutputExists { path });
            }
            targets.push(path);
        }
        let needs_corpus = self.config.tokenizers.iter().any(|t| t.kind != TokenizerKind::Char);
        let corpus = if needs_corpus {
            Some(self.tokenizer_training_corpus()?)
        } else {
            None
        };
        let mut written = Vec::new();
        for (i, spec) in self.config.tokenizers.iter().enumerate() {
            let started = Instant::now();
            let tokenizer = match spec.trainer_params(&format!("tokenizers[{i}]"))? {
                TrainerParams::Bpe { vocab_size } => Tokenizer::Bpe(train_bpe(corpus.as_ref().unwrap(), vocab_size)?),
                TrainerParams::Unigram { vocab_size, params } => {
                    Tokenizer::Unigram(train_unigram(corpus.as_ref().unwrap(), vocab_size, &params)?)
                }
                TrainerParams::Char { mode } => Tokenizer::Char(CharTokenizer::new(mode)),
            };
            log::info!(
                "trained {}: vocab {} in {:.2?}",
                spec.stem(),
                tokenizer.vocab_size().map_or("open".to_string(), |n| n.to_string()),
                started.elapsed()
            );
            let rel = Path::new(TOKENIZER_DIR).join(spec.model_file_name());
            written.push(self.write(rel, &tokenizer.to_json(Some(self.provenance.clone()))?)?);
        }
        Ok(written)
    }

    fn load_tokenizer(&self, spec: &TokenizerSpec) -> Result<Tokenizer> {
        let path = self.output_dir.join(TOKENIZER_DIR).join(spec.model_file_name());
        if !path.is_file() {
            return Err(Error::InvalidInput(format!(
                "{}: missing tokenizer model (run train-tok first)",
                path.display()
            )));
        }
        self.check_provenance(&path)?;
        let artifact = Artifact::<ModelFile>::load(&path)?;
        Tokenizer::from_model_file(artifact.body)
    }

    /// Intrinsic metrics for every (tokenizer, intrinsic corpus) pair, with
    /// a combined CSV and two charts.
    pub fn eval_intrinsic(&self) -> Result<Vec<IntrinsicReport>> {
        let corpora: Vec<&CorpusSpec> = self.config.text_corpora(Role::Intrinsic).collect();
        if corpora.is_empty() {
            return Err(Error::config("corpora", "no corpus with role = \"intrinsic\""));
        }
        let tokenizers: Vec<(&TokenizerSpec, Tokenizer)> = self
            .config
            .tokenizers
            .iter()
            .map(|s| Ok((s, self.load_tokenizer(s)?)))
            .collect::<Result<_>>()?;
        let baseline = self.config.baseline().map(TokenizerSpec::stem);
        let mut all = Vec::new();
        for c in corpora {
            let started = Instant::now();
            let corpus = load_corpus(self.config.resolve(&c.path), &c.language, &c.script)?;
            let lexicon = c
                .lexicon
                .as_ref()
                .map(|l| load_morph_lexicon(self.config.resolve(l)))
                .transpose()?;
            let mut reports: Vec<IntrinsicReport> = tokenizers
                .iter()
                .map(|(spec, tok)| IntrinsicReport::compute(tok, Some(&spec.stem()), &corpus, lexicon.as_ref()))
                .collect::<Result<_>>()?;
            if let Some(base) = baseline
                .as_ref()
                .and_then(|b| reports.iter().find(|r| &r.tokenizer == b).cloned())
            {
                reports = reports.into_iter().map(|r| r.with_baseline(&base)).collect();
            }
            log::info!("intrinsic metrics for {} in {:.2?}", c.language, started.elapsed());
            all.extend(reports);
        }
        for r in &all {
            let rel = Path::new(INTRINSIC_DIR).join(format!("{}.{}.json", r.tokenizer, r.corpus));
            self.write_artifact(rel, IntrinsicFile { report: r.clone() })?;
        }
        let dir = Path::new(INTRINSIC_DIR);
        self.write(dir.join("intrinsic.csv"), &report::intrinsic_csv(&all)?)?;
        self.write(
            dir.join("tokens_per_sentence.svg"),
            &report::tokens_per_sentence_svg(&all),
        )?;
        self.write(dir.join("compression.svg"), &report::compression_svg(&all))?;
        Ok(all)
    }

    fn ner(&self) -> Result<&NerSpec> {
        self.config
            .ner
            .as_ref()
            .ok_or_else(|| Error::config("ner", "this command needs an [ner] section"))
    }

    fn extrinsic_tokenizers(&self) -> Vec<&TokenizerSpec> {
        self.config
            .tokenizers
            .iter()
            .filter(|t| self.options.include_char || t.kind != TokenizerKind::Char)
            .collect()
    }

    fn load_ner(&self, role: Role, language: &str) -> Result<NerDocument> {
        let spec = self
            .config
            .ner_corpus(role, language)
            .ok_or_else(|| Error::config("corpora", format!("no CoNLL corpus for `{language}`")))?;
        let mut doc = parse_conll(self.config.resolve(&spec.path))?.document;
        doc.language = language.to_string();
        Ok(doc)
    }

    fn tagger_file(spec: &TokenizerSpec, language: &str) -> PathBuf {
        Path::new(TAGGER_DIR).join(format!("{}.{language}.tagger.json", spec.stem()))
    }

    /// Trains one tagger per extrinsic tokenizer on the source language.
    pub fn ner_train(&self) -> Result<Vec<PathBuf>> {
        let ner = self.ner()?;
        let doc = self.load_ner(Role::Train, &ner.train_language)?;
        let config = TaggerConfig {
            epochs: ner.epochs,
            seed: ner.seed,
        };
        let mut written = Vec::new();
        for spec in self.extrinsic_tokenizers() {
            let rel = Self::tagger_file(spec, &ner.train_language);
            let path = self.output_dir.join(&rel);
            if path.exists() && !self.options.force {
                return Err(Error::OutputExists { path });
            }
            let tokenizer = self.load_tokenizer(spec)?;
            let started = Instant::now();
            let tagger = train_tagger(&doc, &tokenizer, config)?;
            log::info!(
                "trained tagger for {} on {}: {} features in {:.2?}",
                spec.stem(),
                ner.train_language,
                tagger.feature_count(),
                started.elapsed()
            );
            written.push(self.write(rel, &tagger.to_json(Some(self.provenance.clone()))?)?);
        }
        Ok(written)
    }

    /// Applies every trained tagger to every test language, writing CoNLL
    /// predictions, per-run scores and the comparison report.
    pub fn ner_eval(&self) -> Result<MetricsReport> {
        let ner = self.ner()?;
        let tests: Vec<NerDocument> = ner
            .test_languages
            .iter()
            .map(|l| self.load_ner(Role::Test, l))
            .collect::<Result<_>>()?;
        let mut scores = Vec::new();
        for spec in self.extrinsic_tokenizers() {
            let tokenizer = self.load_tokenizer(spec)?;
            let tagger_path = self.output_dir.join(Self::tagger_file(spec, &ner.train_language));
            if !tagger_path.is_file() {
                return Err(Error::InvalidInput(format!(
                    "{}: missing tagger (run ner-train first)",
                    tagger_path.display()
                )));
            }
            self.check_provenance(&tagger_path)?;
            let tagger = TaggerModel::load(&tagger_path)?;
            let bound = tagger.bind(&tokenizer)?;
            for test in &tests {
                let started = Instant::now();
                let predicted = bound.predict_document(test)?;
                let score = entity_prf(test, &predicted)?;
                log::info!(
                    "{} {} -> {}: F1 {:.4}, accuracy {:.4} in {:.2?}",
                    spec.stem(),
                    ner.train_language,
                    test.language,
                    score.overall.f1,
                    score.overall.acc,
                    started.elapsed()
                );
                let run = format!("{}.{}-{}", spec.stem(), ner.train_language, test.language);
                self.write(
                    Path::new(PREDICTION_DIR).join(format!("{run}.conll")),
                    &predicted.to_conll(),
                )?;
                let file = ScoreFile {
                    tokenizer: spec.stem(),
                    source: ner.train_language.clone(),
                    target: test.language.clone(),
                    score,
                };
                self.write_artifact(Path::new(SCORE_DIR).join(format!("{run}.json")), &file)?;
                scores.push(TransferScore {
                    tokenizer: file.tokenizer,
                    source: file.source,
                    target: file.target,
                    score: file.score,
                });
            }
        }
        let report = compare_report(&scores);
        let dir = Path::new(ZEROSHOT_DIR);
        self.write_artifact(dir.join("report.json"), &report)?;
        self.write(dir.join("report.csv"), &report.to_csv()?)?;
        self.write(dir.join("f1.svg"), &report.to_svg())?;
        Ok(report)
    }

    /// Tagger training followed by evaluation on every target language.
    pub fn zeroshot(&self) -> Result<MetricsReport> {
        self.ner_train()?;
        self.ner_eval()
    }
}

fn write_output(path: &Path, contents: &str, force: bool) -> Result<PathBuf> {
    if path.exists() && !force {
        return Err(Error::OutputExists {
            path: path.to_path_buf(),
        });
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn read_hash(path: &Path) -> Result<Option<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
    Ok(value.get("config_hash").and_then(|h| h.as_str()).map(str::to_string))
}

fn check_hash(path: &Path, expected: &str, mixed: bool) -> Result<()> {
    match read_hash(path)? {
        Some(found) if found != expected && !mixed => Err(Error::ProvenanceMismatch {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found,
        }),
        _ => Ok(()),
    }
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            out.extend(json_files(&p)?);
        } else if p.extension().is_some_and(|e| e == "json") {
            out.push(p);
        }
    }
    Ok(out)
}

/// Writes `summary.md` for an output directory: config hash, intrinsic and
/// zero-shot tables, and links to every CSV and chart.
pub fn write_summary(output_dir: &Path, force: bool, mixed: bool) -> Result<PathBuf> {
    let artifacts = json_files(output_dir)?;
    if artifacts.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no artifacts to report on",
            output_dir.display()
        )));
    }
    let mut hashes = BTreeSet::new();
    for p in &artifacts {
        if let Some(h) = read_hash(p)? {
            hashes.insert(h);
        }
    }
    if hashes.len() > 1 && !mixed {
        let mut it = hashes.iter();
        let expected = it.next().cloned().unwrap_or_default();
        let found = it.next().cloned().unwrap_or_default();
        let path = artifacts
            .iter()
            .find(|p| read_hash(p).ok().flatten().as_deref() == Some(found.as_str()))
            .cloned()
            .unwrap_or_else(|| output_dir.to_path_buf());
        return Err(Error::ProvenanceMismatch { path, expected, found });
    }

    let rel = |p: &Path| p.strip_prefix(output_dir).unwrap_or(p).display().to_string();
    let mut md = String::from("# toklab summary\n\n");
    let hash_list: Vec<&str> = hashes.iter().map(String::as_str).collect();
    md.push_str(&format!("Config hash: `{}`\n", hash_list.join("`, `")));
    if hashes.len() > 1 {
        md.push_str("\nThese artifacts come from more than one config.\n");
    }

    let models: Vec<&PathBuf> = artifacts
        .iter()
        .filter(|p| {
            p.parent()
                .is_some_and(|d| d.ends_with(TOKENIZER_DIR) || d.ends_with(TAGGER_DIR))
        })
        .collect();
    if !models.is_empty() {
        md.push_str("\n## Models\n\n");
        for p in models {
            md.push_str(&format!("- [{0}]({0})\n", rel(p)));
        }
    }

    let mut intrinsic = Vec::new();
    for p in artifacts
        .iter()
        .filter(|p| p.parent().is_some_and(|d| d.ends_with(INTRINSIC_DIR)))
    {
        intrinsic.push(Artifact::<IntrinsicFile>::load(p)?.body.report);
    }
    if !intrinsic.is_empty() {
        intrinsic.sort_by(|a, b| (&a.corpus, &a.tokenizer).cmp(&(&b.corpus, &b.tokenizer)));
        md.push_str("\n## Intrinsic metrics\n\n");
        md.push_str("| Corpus | Tokenizer | Tokens/sentence | Fertility | Word split rate | UNK rate | Compression | vs baseline | Morph F1 |\n");
        md.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|\n");
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        for r in &intrinsic {
            md.push_str(&format!(
                "| {} | {} | {:.2} | {:.4} | {:.4} | {:.4} | {:.4} | {} | {} |\n",
                r.corpus,
                r.tokenizer,
                r.tokens_per_sentence,
                r.fertility,
                r.word_split_rate,
                r.unk_rate,
                r.vocab_compression_raw,
                opt(r.vocab_compression_vs_baseline),
                opt(r.morph.as_ref().map(|m| m.f1)),
            ));
        }
    }

    let zeroshot = output_dir.join(ZEROSHOT_DIR).join("report.json");
    if zeroshot.is_file() {
        let report = Artifact::<MetricsReport>::load(&zeroshot)?.body;
        md.push_str("\n## Zero-shot NER (percent; accuracy over all words)\n\n");
        md.push_str(&report.to_markdown());
    }

    let mut extras = Vec::new();
    for sub in [INTRINSIC_DIR, ZEROSHOT_DIR, PREDICTION_DIR] {
        let dir = output_dir.join(sub);
        if dir.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| Error::io(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "svg" || e == "conll"))
                .collect();
            files.sort();
            extras.extend(files);
        }
    }
    if !extras.is_empty() {
        md.push_str("\n## Tables and charts\n\n");
        for p in &extras {
            let r = rel(p);
            if r.ends_with(".svg") {
                md.push_str(&format!("![{r}]({r})\n\n"));
            } else {
                md.push_str(&format!("- [{r}]({r})\n"));
            }
        }
    }
    write_output(&output_dir.join(SUMMARY_FILE), &md, force)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_default_timestamp() {
        if std::env::var_os(EPOCH_ENV).is_none() {
            assert_eq!(created_at(), "1970-01-01T00:00:00Z");
        }
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutputLock::acquire(dir.path()).unwrap();
        assert!(matches!(OutputLock::acquire(dir.path()), Err(Error::Locked { .. })));
        drop(a);
        OutputLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn summary_refuses_mixed_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let prov = |h: &str| {
            Some(Provenance {
                config_hash: h.into(),
                created_at: created_at(),
            })
        };
        let a = Artifact::new(MetricsReport::default(), prov("aaa")).to_json().unwrap();
        let b = Artifact::new(MetricsReport::default(), prov("bbb")).to_json().unwrap();
        write_output(&dir.path().join("scores/a.json"), &a, false).unwrap();
        write_output(&dir.path().join("scores/b.json"), &b, false).unwrap();
        assert!(matches!(
            write_summary(dir.path(), false, false),
            Err(Error::ProvenanceMismatch { .. })
        ));
        let path = write_summary(dir.path(), false, true).unwrap();
        assert!(fs::read_to_string(path).unwrap().contains("more than one config"));
    }

    #[test]
    fn summary_of_empty_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_summary(dir.path(), false, false).is_err());
    }
}
