//! Subword-level NER: word labels are attached to the first piece of each
//! word, a perceptron tagger is trained over piece-derived features, and
//! predictions come back as word-level IOB2 tags.

mod align;
mod tagger;

pub use align::{align_labels, AlignedSentence, PieceTag};
pub use tagger::{predict, train_tagger, BoundTagger, TaggerConfig, TaggerModel};
