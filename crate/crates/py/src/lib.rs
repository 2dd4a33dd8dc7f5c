//! Python bindings: tokenizers, the tagger, intrinsic metrics and the
//! entity scorer.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use toklab::chars::{CharMode, CharTokenizer};
use toklab::intrinsic::IntrinsicReport;
use toklab::ner::{train_tagger, TaggerConfig, TaggerModel};
use toklab::text::{Corpus, NerDocument, NerSentence, Tag};
use toklab::unigram::UnigramParams;

fn py_err(e: toklab::Error) -> PyErr {
    match e {
        toklab::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn corpus(lines: &[String]) -> Corpus {
    Corpus::from_lines(lines, "und", "Zyyy")
}

fn parse_tags(tags: &[String]) -> PyResult<Vec<Tag>> {
    tags.iter()
        .map(|t| {
            t.parse()
                .map_err(|e: toklab::text::TagParseError| PyValueError::new_err(e.to_string()))
        })
        .collect()
}

#[pyclass(name = "Tokenizer", module = "toklab_py", frozen)]
struct PyTokenizer {
    inner: toklab::Tokenizer,
}

#[pymethods]
impl PyTokenizer {
    #[staticmethod]
    fn train_bpe(lines: Vec<String>, vocab_size: usize) -> PyResult<Self> {
        let model = toklab::bpe::train_bpe(&corpus(&lines), vocab_size).map_err(py_err)?;
        Ok(PyTokenizer {
            inner: toklab::Tokenizer::Bpe(model),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (lines, vocab_size, max_piece_len=None))]
    fn train_unigram(lines: Vec<String>, vocab_size: usize, max_piece_len: Option<usize>) -> PyResult<Self> {
        let mut params = UnigramParams::default();
        if let Some(n) = max_piece_len {
            params.max_piece_len = n;
        }
        let model = toklab::unigram::train_unigram(&corpus(&lines), vocab_size, &params).map_err(py_err)?;
        Ok(PyTokenizer {
            inner: toklab::Tokenizer::Unigram(model),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (mode="codepoint"))]
    fn char(mode: &str) -> PyResult<Self> {
        let mode: CharMode = mode.parse().map_err(py_err)?;
        Ok(PyTokenizer {
            inner: toklab::Tokenizer::Char(CharTokenizer::new(mode)),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyTokenizer {
            inner: toklab::Tokenizer::from_json(text).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyTokenizer {
            inner: toklab::Tokenizer::load(path).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json(None).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path, None).map_err(py_err)
    }

    fn encode(&self, text: &str) -> Vec<Vec<String>> {
        self.inner.encode(text)
    }

    fn encode_word(&self, word: &str) -> Vec<String> {
        self.inner.encode_word(word)
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    #[getter]
    fn vocab_size(&self) -> Option<usize> {
        self.inner.vocab_size()
    }

    fn __repr__(&self) -> String {
        format!("Tokenizer({})", self.inner.fingerprint())
    }
}

#[pyclass(name = "Tagger", module = "toklab_py", frozen)]
struct PyTagger {
    inner: TaggerModel,
}

#[pymethods]
impl PyTagger {
    /// `sentences` is a list of `(words, tags)` pairs with IOB2 tags.
    #[staticmethod]
    #[pyo3(signature = (sentences, tokenizer, epochs=10, seed=42))]
    fn train(
        sentences: Vec<(Vec<String>, Vec<String>)>,
        tokenizer: &PyTokenizer,
        epochs: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let sentences = sentences
            .into_iter()
            .map(|(words, tags)| {
                Ok(NerSentence {
                    words,
                    tags: parse_tags(&tags)?,
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        let doc = NerDocument::new(sentences, "und").map_err(py_err)?;
        let inner = train_tagger(&doc, &tokenizer.inner, TaggerConfig { epochs, seed }).map_err(py_err)?;
        Ok(PyTagger { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyTagger {
            inner: TaggerModel::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json(None).map_err(py_err)
    }

    fn predict(&self, tokenizer: &PyTokenizer, words: Vec<String>) -> PyResult<Vec<String>> {
        let tags = toklab::ner::predict(&self.inner, &tokenizer.inner, &words).map_err(py_err)?;
        Ok(tags.iter().map(Tag::to_string).collect())
    }

    #[getter]
    fn tokenizer_id(&self) -> String {
        self.inner.tokenizer_id().to_string()
    }
}

#[pyfunction]
fn normalize(text: &str) -> String {
    toklab::text::normalize(text)
}

#[pyfunction]
fn decode(pieces: Vec<String>) -> String {
    toklab::vocab::decode(&pieces)
}

/// Intrinsic metrics of `tokenizer` over `lines` as a dict.
#[pyfunction]
fn intrinsic<'py>(py: Python<'py>, tokenizer: &PyTokenizer, lines: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let r = IntrinsicReport::compute(&tokenizer.inner, None, &corpus(&lines), None).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("tokenizer", r.tokenizer)?;
    d.set_item("sentences", r.sentences)?;
    d.set_item("words", r.words)?;
    d.set_item("pieces", r.pieces)?;
    d.set_item("tokens_per_sentence", r.tokens_per_sentence)?;
    d.set_item("fertility", r.fertility)?;
    d.set_item("word_split_rate", r.word_split_rate)?;
    d.set_item("unk_rate", r.unk_rate)?;
    d.set_item("vocab_compression_raw", r.vocab_compression_raw)?;
    Ok(d)
}

/// Entity-level precision, recall and F1 plus word accuracy.
#[pyfunction]
fn score<'py>(py: Python<'py>, gold: Vec<Vec<String>>, pred: Vec<Vec<String>>) -> PyResult<Bound<'py, PyDict>> {
    let gold = gold.iter().map(|s| parse_tags(s)).collect::<PyResult<Vec<_>>>()?;
    let pred = pred.iter().map(|s| parse_tags(s)).collect::<PyResult<Vec<_>>>()?;
    for (side, seqs) in [("gold", &gold), ("pred", &pred)] {
        if let Some(i) = seqs.iter().position(|s| !toklab::text::iob2_valid(s)) {
            return Err(PyValueError::new_err(format!("{side} sequence {i} is not valid IOB2")));
        }
    }
    let s = toklab::scoring::score_sequences(&gold, &pred).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("p", s.overall.p)?;
    d.set_item("r", s.overall.r)?;
    d.set_item("f1", s.overall.f1)?;
    d.set_item("acc", s.overall.acc)?;
    Ok(d)
}

#[pymodule]
fn toklab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTokenizer>()?;
    m.add_class::<PyTagger>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(intrinsic, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    Ok(())
}
