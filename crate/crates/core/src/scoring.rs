//! Token accuracy and exact-match entity precision/recall/F1.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{iob2_valid, NerDocument, Tag};

/// A half-open run of words `[start, end)` labelled with one entity type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Maximal `B-T (I-T)*` runs. Expects valid IOB2; an orphan `I-T` (which
/// upstream repair rules out) opens a new span.
pub fn extract_entities(tags: &[Tag]) -> Vec<EntitySpan> {
    debug_assert!(iob2_valid(tags), "extract_entities needs valid IOB2");
    let mut spans = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::I(l) if open.as_ref().is_some_and(|s| &s.label == l) => {
                open.as_mut().unwrap().end = i + 1;
            }
            Tag::B(l) | Tag::I(l) => {
                spans.extend(open.take());
                open = Some(EntitySpan {
                    label: l.clone(),
                    start: i,
                    end: i + 1,
                });
            }
            Tag::O => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}

/// Renders spans back to IOB2 tags over `len` words.
pub fn spans_to_tags(spans: &[EntitySpan], len: usize) -> Vec<Tag> {
    let mut tags = vec![Tag::O; len];
    for s in spans {
        tags[s.start] = Tag::B(s.label.clone());
        for t in &mut tags[s.start + 1..s.end] {
            *t = Tag::I(s.label.clone());
        }
    }
    tags
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Support {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

impl Support {
    /// Precision and recall are 0 when their denominator is 0; F1 is
    /// `2·TP / (2·TP + FP + FN)`, i.e. 0 when P + R = 0.
    pub fn prf(&self) -> Prf {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        Prf {
            precision: ratio(self.correct, self.predicted),
            recall: ratio(self.correct, self.gold),
            f1: ratio(2 * self.correct, self.gold + self.predicted),
        }
    }

    fn add(&mut self, other: Support) {
        self.gold += other.gold;
        self.predicted += other.predicted;
        self.correct += other.correct;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Overall {
    pub p: f64,
    pub r: f64,
    pub f1: f64,
    /// Correct word tags over all words.
    pub acc: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NerScore {
    pub overall: Overall,
    pub per_type: BTreeMap<String, Prf>,
    pub support: BTreeMap<String, Support>,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    pub words: usize,
    pub correct_words: usize,
}

impl NerScore {
    pub fn totals(&self) -> Support {
        let mut t = Support::default();
        for s in self.support.values() {
            t.add(*s);
        }
        t
    }
}

/// Scores aligned tag sequences: a predicted span counts only if an
/// identical `(type, start, end)` span exists in gold.
pub fn score_sequences(gold: &[Vec<Tag>], pred: &[Vec<Tag>]) -> Result<NerScore> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "gold has {} sentences, prediction {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut support: BTreeMap<String, Support> = BTreeMap::new();
    let (mut words, mut correct_words) = (0, 0);
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::InvalidInput(format!(
                "sentence {i}: gold has {} words, prediction {}",
                g.len(),
                p.len()
            )));
        }
        words += g.len();
        correct_words += g.iter().zip(p).filter(|(a, b)| a == b).count();
        let gold_spans: BTreeSet<EntitySpan> = extract_entities(g).into_iter().collect();
        let pred_spans: BTreeSet<EntitySpan> = extract_entities(p).into_iter().collect();
        for s in &gold_spans {
            support.entry(s.label.clone()).or_default().gold += 1;
        }
        for s in &pred_spans {
            let e = support.entry(s.label.clone()).or_default();
            e.predicted += 1;
            if gold_spans.contains(s) {
                e.correct += 1;
            }
        }
    }
    let per_type: BTreeMap<String, Prf> = support.iter().map(|(k, s)| (k.clone(), s.prf())).collect();
    let mut totals = Support::default();
    for s in support.values() {
        totals.add(*s);
    }
    let micro = totals.prf();
    let macro_avg = if per_type.is_empty() {
        Prf::default()
    } else {
        let n = per_type.len() as f64;
        Prf {
            precision: per_type.values().map(|p| p.precision).sum::<f64>() / n,
            recall: per_type.values().map(|p| p.recall).sum::<f64>() / n,
            f1: per_type.values().map(|p| p.f1).sum::<f64>() / n,
        }
    };
    let acc = if words == 0 {
        0.0
    } else {
        correct_words as f64 / words as f64
    };
    Ok(NerScore {
        overall: Overall {
            p: micro.precision,
            r: micro.recall,
            f1: micro.f1,
            acc,
        },
        per_type,
        support,
        macro_avg,
        words,
        correct_words,
    })
}

/// Entity-level scores of `pred` against `gold`; both documents must have
/// the same sentence and word counts.
pub fn entity_prf(gold: &NerDocument, pred: &NerDocument) -> Result<NerScore> {
    let g: Vec<Vec<Tag>> = gold.sentences.iter().map(|s| s.tags.clone()).collect();
    let p: Vec<Vec<Tag>> = pred.sentences.iter().map(|s| s.tags.clone()).collect();
    score_sequences(&g, &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tags(s: &str) -> Vec<Tag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    fn span(l: &str, start: usize, end: usize) -> EntitySpan {
        EntitySpan {
            label: l.into(),
            start,
            end,
        }
    }

    #[test]
    fn extraction_examples() {
        assert_eq!(extract_entities(&tags("B-PER I-PER O")), vec![span("PER", 0, 2)]);
        assert!(extract_entities(&tags("O O")).is_empty());
        assert_eq!(
            extract_entities(&tags("B-LOC B-LOC")),
            vec![span("LOC", 0, 1), span("LOC", 1, 2)]
        );
        assert_eq!(
            extract_entities(&tags("B-PER I-PER B-ORG I-ORG I-ORG O B-LOC")),
            vec![span("PER", 0, 2), span("ORG", 2, 5), span("LOC", 6, 7)]
        );
    }

    #[test]
    fn swapped_type_scores_half() {
        let gold = tags("B-PER I-PER O B-LOC");
        let pred = tags("B-PER I-PER O B-ORG");
        let s = score_sequences(&[gold], &[pred]).unwrap();
        assert_eq!((s.overall.p, s.overall.r, s.overall.f1), (0.5, 0.5, 0.5));
        assert_eq!(s.overall.acc, 0.75);
        assert_eq!(
            s.per_type["ORG"],
            Prf {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0
            }
        );
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(score_sequences(&[tags("O")], &[tags("O O")]).is_err());
        assert!(score_sequences(&[tags("O")], &[]).is_err());
    }

    fn arb_tags() -> impl Strategy<Value = Vec<Tag>> {
        proptest::collection::vec(0u8..5, 0..12).prop_map(|raw| {
            let mut t: Vec<Tag> = raw
                .into_iter()
                .map(|r| match r {
                    0 | 1 => Tag::O,
                    2 => Tag::B("PER".into()),
                    3 => Tag::I("PER".into()),
                    _ => Tag::B("LOC".into()),
                })
                .collect();
            crate::text::conll::repair_iob2(&mut t);
            t
        })
    }

    proptest! {
        #[test]
        fn spans_render_back(t in arb_tags()) {
            prop_assert_eq!(spans_to_tags(&extract_entities(&t), t.len()), t);
        }

        #[test]
        fn self_score_is_perfect(doc in proptest::collection::vec(arb_tags(), 1..5)) {
            let s = score_sequences(&doc, &doc).unwrap();
            let any = doc.iter().any(|t| t.iter().any(|x| !x.is_outside()));
            if any {
                prop_assert_eq!((s.overall.p, s.overall.r, s.overall.f1), (1.0, 1.0, 1.0));
            }
            prop_assert!(s.words == 0 || s.overall.acc == 1.0);
        }

        #[test]
        fn swap_exchanges_precision_and_recall(
            pair in proptest::collection::vec((arb_tags(), arb_tags()), 1..5)
        ) {
            let gold: Vec<Vec<Tag>> = pair.iter().map(|(g, p)| {
                let n = g.len().min(p.len()); g[..n].to_vec()
            }).collect();
            let pred: Vec<Vec<Tag>> = pair.iter().map(|(g, p)| {
                let n = g.len().min(p.len()); let mut t = p[..n].to_vec();
                crate::text::conll::repair_iob2(&mut t); t
            }).collect();
            let gold: Vec<Vec<Tag>> = gold.into_iter().map(|mut t| { crate::text::conll::repair_iob2(&mut t); t }).collect();
            let a = score_sequences(&gold, &pred).unwrap();
            let b = score_sequences(&pred, &gold).unwrap();
            prop_assert_eq!(a.overall.p, b.overall.r);
            prop_assert_eq!(a.overall.r, b.overall.p);
            prop_assert_eq!(a.overall.f1, b.overall.f1);
        }

        #[test]
        fn all_outside_prediction_has_zero_f1(doc in proptest::collection::vec(arb_tags(), 1..5)) {
            prop_assume!(doc.iter().any(|t| t.iter().any(|x| !x.is_outside())));
            let pred: Vec<Vec<Tag>> = doc.iter().map(|t| vec![Tag::O; t.len()]).collect();
            let s = score_sequences(&doc, &pred).unwrap();
            prop_assert_eq!(s.overall.f1, 0.0);
        }
    }
}
