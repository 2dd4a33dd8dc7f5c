//! Tokenization laboratory: BPE, unigram and character tokenizers, intrinsic
//! tokenizer metrics, and a cross-lingual NER transfer pipeline built on an
//! averaged structured perceptron.

pub mod artifact;
pub mod bpe;
pub mod chars;
pub mod error;
pub mod harness;
pub mod intrinsic;
pub mod ner;
pub mod report;
pub mod scoring;
pub mod text;
pub mod tokenizer;
pub mod unigram;
pub mod vocab;

pub use error::{Error, Result};
pub use tokenizer::{Tokenizer, TokenizerKind};
