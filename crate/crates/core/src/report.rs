//! Comparison tables, CSV export and SVG bar charts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intrinsic::IntrinsicReport;
use crate::scoring::NerScore;

/// One scored (tokenizer, source → target) transfer run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferScore {
    pub tokenizer: String,
    pub source: String,
    pub target: String,
    pub score: NerScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub target: String,
    pub source: String,
    pub tokenizer: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<ComparisonRow>,
}

/// One row per score, ordered by target language, then tokenizer, then source.
pub fn compare_report(scores: &[TransferScore]) -> MetricsReport {
    let mut rows: Vec<ComparisonRow> = scores
        .iter()
        .map(|s| ComparisonRow {
            target: s.target.clone(),
            source: s.source.clone(),
            tokenizer: s.tokenizer.clone(),
            precision: s.score.overall.p,
            recall: s.score.overall.r,
            f1: s.score.overall.f1,
            accuracy: s.score.overall.acc,
        })
        .collect();
    rows.sort_by(|a, b| (&a.target, &a.tokenizer, &a.source).cmp(&(&b.target, &b.tokenizer, &b.source)));
    MetricsReport { rows }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Internal(format!("csv export: {e}"))
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Internal(format!("csv export: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

impl MetricsReport {
    pub fn to_csv(&self) -> Result<String> {
        to_csv(
            &self.rows,
            &["target", "source", "tokenizer", "precision", "recall", "f1", "accuracy"],
        )
    }

    /// Grouped bars of F1 per target language, one bar per source/tokenizer.
    pub fn to_svg(&self) -> String {
        let chart = BarChart::from_rows(
            "Zero-shot entity F1 by target language",
            "F1",
            self.rows
                .iter()
                .map(|r| (r.target.clone(), format!("{}/{}", r.source, r.tokenizer), r.f1)),
        );
        chart.render()
    }

    /// Markdown table with percentages at two decimals.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Target | Source | Tokenizer | Precision | Recall | F1 | Accuracy |\n");
        out.push_str("|---|---|---|---:|---:|---:|---:|\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.2} | {:.2} | {:.2} | {:.2} |",
                r.target,
                r.source,
                r.tokenizer,
                100.0 * r.precision,
                100.0 * r.recall,
                100.0 * r.f1,
                100.0 * r.accuracy
            );
        }
        out
    }
}

#[derive(Serialize)]
struct IntrinsicCsvRow<'a> {
    tokenizer: &'a str,
    corpus: &'a str,
    script: &'a str,
    sentences: usize,
    words: usize,
    pieces: usize,
    tokens_per_sentence: f64,
    fertility: f64,
    word_split_rate: f64,
    unk_rate: f64,
    word_types: usize,
    piece_types: usize,
    vocab_compression_raw: f64,
    vocab_compression_vs_baseline: Option<f64>,
    morph_f1: Option<f64>,
}

pub fn intrinsic_csv(reports: &[IntrinsicReport]) -> Result<String> {
    let rows: Vec<IntrinsicCsvRow> = reports
        .iter()
        .map(|r| IntrinsicCsvRow {
            tokenizer: &r.tokenizer,
            corpus: &r.corpus,
            script: &r.script,
            sentences: r.sentences,
            words: r.words,
            pieces: r.pieces,
            tokens_per_sentence: r.tokens_per_sentence,
            fertility: r.fertility,
            word_split_rate: r.word_split_rate,
            unk_rate: r.unk_rate,
            word_types: r.word_types,
            piece_types: r.piece_types,
            vocab_compression_raw: r.vocab_compression_raw,
            vocab_compression_vs_baseline: r.vocab_compression_vs_baseline,
            morph_f1: r.morph.as_ref().map(|m| m.f1),
        })
        .collect();
    to_csv(
        &rows,
        &[
            "tokenizer",
            "corpus",
            "script",
            "sentences",
            "words",
            "pieces",
            "tokens_per_sentence",
            "fertility",
            "word_split_rate",
            "unk_rate",
            "word_types",
            "piece_types",
            "vocab_compression_raw",
            "vocab_compression_vs_baseline",
            "morph_f1",
        ],
    )
}

/// Tokens per sentence for each corpus, one bar per tokenizer.
pub fn tokens_per_sentence_svg(reports: &[IntrinsicReport]) -> String {
    BarChart::from_rows(
        "Tokens per sentence",
        "pieces / sentence",
        reports
            .iter()
            .map(|r| (r.corpus.clone(), r.tokenizer.clone(), r.tokens_per_sentence)),
    )
    .render()
}

/// Raw vocabulary compression (word types / piece types) per corpus.
pub fn compression_svg(reports: &[IntrinsicReport]) -> String {
    BarChart::from_rows(
        "Vocabulary compression",
        "word types / piece types",
        reports
            .iter()
            .map(|r| (r.corpus.clone(), r.tokenizer.clone(), r.vocab_compression_raw)),
    )
    .render()
}

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

/// Grouped bar chart with groups and series in first-seen order.
#[derive(Debug, Clone)]
pub struct BarChart {
    title: String,
    y_label: String,
    groups: Vec<String>,
    series: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
}

impl BarChart {
    pub fn from_rows(title: &str, y_label: &str, rows: impl IntoIterator<Item = (String, String, f64)>) -> Self {
        let mut chart = BarChart {
            title: title.to_string(),
            y_label: y_label.to_string(),
            groups: Vec::new(),
            series: Vec::new(),
            values: Vec::new(),
        };
        for (g, s, v) in rows {
            let gi = position_or_push(&mut chart.groups, g);
            let si = position_or_push(&mut chart.series, s);
            chart.values.resize_with(chart.groups.len(), Vec::new);
            for row in &mut chart.values {
                row.resize(chart.series.len(), None);
            }
            chart.values[gi][si] = Some(v);
        }
        chart
    }

    pub fn render(&self) -> String {
        const BAR: f64 = 18.0;
        const GAP: f64 = 24.0;
        const LEFT: f64 = 64.0;
        const TOP: f64 = 40.0;
        const PLOT_H: f64 = 220.0;
        let n_series = self.series.len().max(1) as f64;
        let group_w = n_series * BAR + GAP;
        let plot_w = (self.groups.len().max(1) as f64) * group_w;
        let legend_h = 16.0 * self.series.len() as f64;
        let width = LEFT + plot_w + 20.0;
        let height = TOP + PLOT_H + 50.0 + legend_h;
        let max = self.values.iter().flatten().flatten().fold(0.0f64, |m, &v| m.max(v));
        let top = nice_ceiling(max);
        let y = |v: f64| TOP + PLOT_H - PLOT_H * (v / top);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            width / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            TOP + PLOT_H / 2.0,
            TOP + PLOT_H / 2.0,
            escape(&self.y_label)
        );
        for k in 0..=4 {
            let v = top * k as f64 / 4.0;
            let yy = y(v);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.1}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#dddddd"/>"##,
                LEFT + plot_w
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 4.0,
                yy + 4.0,
                tick_label(v)
            );
        }
        for (gi, group) in self.groups.iter().enumerate() {
            let x0 = LEFT + gi as f64 * group_w + GAP / 2.0;
            for (si, value) in self.values[gi].iter().enumerate() {
                let Some(v) = value else { continue };
                let yy = y(*v);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{yy:.1}" width="{BAR:.1}" height="{:.1}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
                    x0 + si as f64 * BAR,
                    TOP + PLOT_H - yy,
                    PALETTE[si % PALETTE.len()],
                    escape(&self.series[si])
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                x0 + n_series * BAR / 2.0,
                TOP + PLOT_H + 16.0,
                escape(group)
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
            TOP + PLOT_H,
            LEFT + plot_w,
            TOP + PLOT_H
        );
        for (si, name) in self.series.iter().enumerate() {
            let yy = TOP + PLOT_H + 36.0 + 16.0 * si as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{LEFT:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{yy:.1}">{}</text>"#,
                yy - 9.0,
                PALETTE[si % PALETTE.len()],
                LEFT + 14.0,
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn position_or_push(list: &mut Vec<String>, item: String) -> usize {
    match list.iter().position(|x| *x == item) {
        Some(i) => i,
        None => {
            list.push(item);
            list.len() - 1
        }
    }
}

/// Smallest 1, 2 or 5 times a power of ten that is at least `max`.
fn nice_ceiling(max: f64) -> f64 {
    if max.is_nan() || max <= 0.0 || max.is_infinite() {
        return 1.0;
    }
    let base = 10f64.powf(max.log10().floor());
    for m in [1.0, 2.0, 5.0, 10.0] {
        if m * base >= max {
            return m * base;
        }
    }
    10.0 * base
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}
