use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use toklab::bpe::train_bpe;
use toklab::chars::{CharMode, CharTokenizer};
use toklab::harness::{ExperimentConfig, Harness, RunOptions};
use toklab::ner::{align_labels, train_tagger, PieceTag, TaggerConfig};
use toklab::scoring::entity_prf;
use toklab::text::{iob2_valid, normalize, parse_conll, Corpus, NerDocument, NerSentence, Tag};
use toklab::unigram::{em_step, seed_vocab, train_unigram, UnigramModel, UnigramParams};
use toklab::vocab::{decode, META, META_STR, UNK};
use toklab::Tokenizer;

type Check = fn() -> Result<String, String>;

fn main() -> ExitCode {
    let checks: [(&str, Check, Duration); 9] = [
        ("bpe merges match a brute-force oracle", bpe_oracle, secs(10)),
        ("unigram viterbi equals exhaustive search", unigram_viterbi, secs(30)),
        ("em never lowers the likelihood", em_monotone, secs(60)),
        ("decode inverts encode", round_trip, secs(60)),
        ("intrinsic shape on bundled corpora", intrinsic_shape, secs(120)),
        ("entity scorer golden suite", scorer_golden, secs(10)),
        ("zero-shot golden report", zeroshot_golden, secs(60)),
        ("alignment inverse and iob2 predictions", alignment_inverse, secs(60)),
        ("commands are deterministic", determinism, secs(120)),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check, limit)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(e.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > *limit => Err(format!("took longer than {}s", limit.as_secs())),
            other => other,
        };
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{status} {}. {name} ({:.1}s): {detail}", i + 1, took.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} failed", checks.len());
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn random_word(rng: &mut impl Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn random_lines(rng: &mut impl Rng, words: Vec<String>) -> Vec<String> {
    let mut lines = Vec::new();
    let mut rest = &words[..];
    while !rest.is_empty() {
        let n = rng.gen_range(1..=rest.len().min(8));
        lines.push(rest[..n].join(" "));
        rest = &rest[n..];
    }
    lines
}

fn bpe_oracle_merges(words: &[String], alphabet: &BTreeSet<char>, vocab_size: usize) -> Vec<(String, String, u64)> {
    let mut vocab: BTreeSet<String> = alphabet.iter().map(|c| c.to_string()).collect();
    vocab.insert(UNK.to_string());
    let mut segs: Vec<Vec<String>> = words
        .iter()
        .map(|w| std::iter::once(META).chain(w.chars()).map(String::from).collect())
        .collect();
    let mut merges = Vec::new();
    while vocab.len() < vocab_size {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for seg in &segs {
            for w in seg.windows(2) {
                *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += 1;
            }
        }
        let mut best: Option<(&(String, String), u64)> = None;
        for (pair, &c) in &counts {
            if c < 2 || vocab.contains(&format!("{}{}", pair.0, pair.1)) {
                continue;
            }
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((pair, c));
            }
        }
        let Some(((l, r), c)) = best.map(|(p, c)| (p.clone(), c)) else {
            break;
        };
        for seg in &mut segs {
            let mut out = Vec::with_capacity(seg.len());
            let mut i = 0;
            while i < seg.len() {
                if i + 1 < seg.len() && seg[i] == l && seg[i + 1] == r {
                    out.push(format!("{l}{r}"));
                    i += 2;
                } else {
                    out.push(seg[i].clone());
                    i += 1;
                }
            }
            *seg = out;
        }
        vocab.insert(format!("{l}{r}"));
        merges.push((l, r, c));
    }
    merges
}

fn bpe_oracle() -> Result<String, String> {
    let pool: Vec<char> = "abcdeকখগমি".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let corpora = 150;
    let mut total_merges = 0;
    for case in 0..corpora {
        let k = rng.gen_range(2..=pool.len());
        let alphabet: Vec<char> = pool.choose_multiple(&mut rng, k).copied().collect();
        let n_words = rng.gen_range(1..=50);
        let words: Vec<String> = (0..n_words).map(|_| random_word(&mut rng, &alphabet, 6)).collect();
        let corpus = Corpus::from_lines(random_lines(&mut rng, words.clone()), "xx", "Zyyy");
        let mut symbols: BTreeSet<char> = words.iter().flat_map(|w| w.chars()).collect();
        symbols.insert(META);
        let vocab_size = symbols.len() + 1 + rng.gen_range(0..60);
        let model = train_bpe(&corpus, vocab_size).map_err(|e| e.to_string())?;
        let got: Vec<(String, String, u64)> = model
            .merges()
            .iter()
            .map(|m| (m.left.clone(), m.right.clone(), m.frequency))
            .collect();
        let want = bpe_oracle_merges(&words, &symbols, vocab_size);
        ensure!(got == want, "corpus {case}: merges {got:?} != oracle {want:?}");
        total_merges += got.len();
    }
    Ok(format!("{corpora} corpora, {total_merges} merges"))
}

fn exhaustive_best(model: &UnigramModel, word: &str) -> f64 {
    let symbols: Vec<char> = std::iter::once(META).chain(word.chars()).collect();
    let n = symbols.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << (n - 1)) {
        let mut score = 0.0;
        let mut start = 0;
        let mut valid = true;
        for end in 1..=n {
            if end < n && mask & (1 << (end - 1)) == 0 {
                continue;
            }
            let piece: String = symbols[start..end].iter().collect();
            match model.log_prob(&piece) {
                Some(lp) => score += lp,
                None if end - start == 1 => score += model.unk_log_prob(),
                None => {
                    valid = false;
                    break;
                }
            }
            start = end;
        }
        if valid && score > best {
            best = score;
        }
    }
    best
}

fn random_unigram(rng: &mut impl Rng) -> (UnigramModel, Vec<char>) {
    let pool: Vec<char> = "abcdefghi".chars().collect();
    let k = rng.gen_range(2..=pool.len());
    let letters: Vec<char> = pool.choose_multiple(rng, k).copied().collect();
    let mut alphabet: BTreeSet<char> = letters.iter().copied().collect();
    alphabet.insert(META);
    let mut pieces: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
    for _ in 0..rng.gen_range(0..40) {
        let mut p = random_word(rng, &letters, 5);
        if rng.gen_bool(0.5) {
            p.insert(0, META);
        }
        if p.chars().count() > 1 && !pieces.contains(&p) {
            pieces.push(p);
        }
    }
    let weights: Vec<f64> = pieces.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let scored = pieces
        .into_iter()
        .zip(weights)
        .map(|(p, w)| (p, (w / total).ln()))
        .collect();
    (UnigramModel::from_pieces(scored, alphabet).unwrap(), letters)
}

fn unigram_viterbi() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pairs = 1200;
    let mut with_unk = 0;
    for case in 0..pairs {
        let (model, letters) = random_unigram(&mut rng);
        let mut word = random_word(&mut rng, &letters, 12);
        if rng.gen_bool(0.1) {
            let at = rng.gen_range(0..word.chars().count());
            let mut chars: Vec<char> = word.chars().collect();
            chars[at] = 'z';
            word = chars.into_iter().collect();
            with_unk += 1;
        }
        let (pieces, score) = model.encode_word_scored(&word);
        let want = exhaustive_best(&model, &word);
        ensure!(
            (score - want).abs() <= 1e-9,
            "case {case} `{word}`: viterbi {score} vs exhaustive {want}"
        );
        let path: f64 = pieces
            .iter()
            .map(|p| model.log_prob(p).unwrap_or(model.unk_log_prob()))
            .sum();
        ensure!(
            (path - score).abs() <= 1e-9,
            "case {case}: returned pieces score {path}, reported {score}"
        );
        ensure!(
            decode(&pieces).replace(UNK, "z") == word,
            "case {case}: pieces {pieces:?} do not spell `{word}`"
        );
    }
    Ok(format!("{pairs} pairs, {with_unk} with unknown codepoints"))
}

fn em_monotone() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let corpora = 25;
    let mut worst_mass: f64 = 0.0;
    for case in 0..corpora {
        let letters: Vec<char> = "abcdefগমি".chars().collect::<Vec<_>>()[..rng.gen_range(2..=9)].to_vec();
        let n = rng.gen_range(5..=60);
        let words: Vec<String> = (0..n).map(|_| random_word(&mut rng, &letters, 8)).collect();
        let corpus = Corpus::from_lines(random_lines(&mut rng, words), "xx", "Zyyy");
        let seeds = seed_vocab(&corpus, rng.gen_range(2..=5), rng.gen_range(15..60)).map_err(|e| e.to_string())?;
        let total: u64 = seeds.iter().map(|(_, c)| c.max(&1)).sum();
        let pieces = seeds
            .iter()
            .map(|(p, c)| (p.clone(), ((*c).max(1) as f64 / total as f64).ln()))
            .collect();
        let alphabet: BTreeSet<char> = seeds
            .iter()
            .filter(|(p, _)| p.chars().count() == 1)
            .flat_map(|(p, _)| p.chars())
            .collect();
        let mut model = UnigramModel::from_pieces(pieces, alphabet).map_err(|e| e.to_string())?;
        let mut previous: Option<f64> = None;
        for step in 0..10 {
            let out = em_step(&model, &corpus).map_err(|e| e.to_string())?;
            if let Some(prev) = previous {
                ensure!(
                    out.log_likelihood >= prev - 1e-9 * prev.abs(),
                    "corpus {case} step {step}: log-likelihood fell from {prev} to {}",
                    out.log_likelihood
                );
            }
            let mass = out.model.probability_mass();
            worst_mass = worst_mass.max((mass - 1.0).abs());
            ensure!(
                (mass - 1.0).abs() <= 1e-6,
                "corpus {case} step {step}: probabilities sum to {mass}"
            );
            previous = Some(out.log_likelihood);
            model = out.model;
        }
    }
    Ok(format!(
        "{corpora} corpora x 10 steps, max |mass - 1| = {worst_mass:.1e}"
    ))
}

fn round_trip() -> Result<String, String> {
    let alphabet: Vec<char> = "abcdefghijকখগঘমনি্ংᱚᱛᱜ".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let training: Vec<String> = (0..300)
        .map(|_| {
            (0..8)
                .map(|_| random_word(&mut rng, &alphabet, 6))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .chain(std::iter::once(alphabet.iter().map(|c| format!("{c} ")).collect()))
        .collect();
    let corpus = Corpus::from_lines(&training, "xx", "Zyyy");
    let tokenizers = [
        Tokenizer::Bpe(train_bpe(&corpus, 120).map_err(|e| e.to_string())?),
        Tokenizer::Unigram(train_unigram(&corpus, 120, &UnigramParams::default()).map_err(|e| e.to_string())?),
        Tokenizer::Char(CharTokenizer::new(CharMode::Codepoint)),
        Tokenizer::Char(CharTokenizer::new(CharMode::Grapheme)),
    ];
    let spaces = [' ', ' ', ' ', '\t', '\n', '\u{3000}'];
    let per_kind = 10_000;
    for tok in &tokenizers {
        for case in 0..per_kind {
            let len = rng.gen_range(0..40);
            let x: String = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        *spaces.choose(&mut rng).unwrap()
                    } else {
                        *alphabet.choose(&mut rng).unwrap()
                    }
                })
                .collect();
            let pieces: Vec<String> = tok.encode(&x).into_iter().flatten().collect();
            let back = decode(&pieces);
            ensure!(
                back == normalize(&x),
                "{} case {case}: {x:?} decoded to {back:?}",
                tok.name()
            );
        }
    }
    Ok(format!(
        "{per_kind} strings for each of {} tokenizers",
        tokenizers.len()
    ))
}

fn intrinsic_shape() -> Result<String, String> {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = ExperimentConfig::load(data_dir().join("experiment.toml")).map_err(|e| e.to_string())?;
    config.output_dir = out.path().to_path_buf();
    let harness = Harness::new(config, RunOptions::default()).map_err(|e| e.to_string())?;
    harness.train_tokenizers().map_err(|e| e.to_string())?;
    let reports = harness.eval_intrinsic().map_err(|e| e.to_string())?;
    let mut by_corpus: BTreeMap<&str, HashMap<&str, (f64, f64)>> = BTreeMap::new();
    for r in &reports {
        let kind = r.tokenizer.split('-').next().unwrap_or_default();
        by_corpus
            .entry(&r.corpus)
            .or_default()
            .insert(kind, (r.tokens_per_sentence, r.vocab_compression_raw));
    }
    ensure!(
        by_corpus.len() >= 3,
        "expected several corpora, found {}",
        by_corpus.len()
    );
    let mut summary = Vec::new();
    for (corpus, kinds) in &by_corpus {
        let get = |k: &str| kinds.get(k).copied().ok_or(format!("{corpus}: no {k} report"));
        let ((tc, cc), (tu, cu), (tb, cb)) = (get("char")?, get("unigram")?, get("bpe")?);
        ensure!(
            tc > tu && tu >= tb,
            "{corpus}: tokens/sentence char {tc:.2} unigram {tu:.2} bpe {tb:.2}"
        );
        ensure!(
            cc > cu && cu > cb,
            "{corpus}: compression char {cc:.3} unigram {cu:.3} bpe {cb:.3}"
        );
        summary.push(format!("{corpus} {tc:.1}>{tu:.1}>={tb:.1}"));
    }
    Ok(summary.join(", "))
}

fn tags(s: &str) -> Vec<Tag> {
    s.split_whitespace().map(|t| t.parse().unwrap()).collect()
}

fn doc(sentences: &[&str]) -> NerDocument {
    let sentences = sentences
        .iter()
        .map(|s| {
            let tags = tags(s);
            NerSentence {
                words: (0..tags.len()).map(|i| format!("w{i}")).collect(),
                tags,
            }
        })
        .collect();
    NerDocument::new(sentences, "xx").unwrap()
}

type ScorerCase<'a> = (Vec<&'a str>, Vec<&'a str>, f64, f64, f64, f64);

fn scorer_golden() -> Result<String, String> {
    let all_o_gold = format!("B-LOC {}", "O ".repeat(99));
    let all_o_pred = "O ".repeat(100);
    // (gold, pred, precision, recall, f1, accuracy), counted by hand.
    let cases: Vec<ScorerCase> = vec![
        (
            vec!["B-PER I-PER O B-LOC"],
            vec!["B-PER I-PER O B-LOC"],
            1.0,
            1.0,
            1.0,
            1.0,
        ),
        (vec![&all_o_gold], vec![&all_o_pred], 0.0, 0.0, 0.0, 0.99),
        (vec!["O O O"], vec!["O O O"], 0.0, 0.0, 0.0, 1.0),
        (vec!["B-PER I-PER"], vec!["B-PER O"], 0.0, 0.0, 0.0, 0.5),
        (vec!["B-PER"], vec!["B-LOC"], 0.0, 0.0, 0.0, 0.0),
        (vec!["B-PER O O"], vec!["B-PER O B-LOC"], 0.5, 1.0, 2.0 / 3.0, 2.0 / 3.0),
        (vec!["B-PER O B-LOC"], vec!["B-PER O O"], 1.0, 0.5, 2.0 / 3.0, 2.0 / 3.0),
        (vec!["B-PER B-PER"], vec!["B-PER I-PER"], 0.0, 0.0, 0.0, 0.5),
        (
            vec!["B-ORG I-ORG", "B-LOC"],
            vec!["B-ORG I-ORG", "O"],
            1.0,
            0.5,
            2.0 / 3.0,
            2.0 / 3.0,
        ),
        (
            vec!["B-ORG I-ORG I-ORG", "O B-PER I-PER"],
            vec!["B-ORG I-ORG I-ORG", "B-PER I-PER O"],
            0.5,
            0.5,
            0.5,
            0.5,
        ),
        (
            vec!["B-PER O B-LOC B-ORG I-ORG"],
            vec!["B-PER O B-LOC B-ORG O"],
            2.0 / 3.0,
            2.0 / 3.0,
            2.0 / 3.0,
            0.8,
        ),
        (vec!["O O O"], vec!["B-PER I-PER O"], 0.0, 0.0, 0.0, 1.0 / 3.0),
    ];
    for (i, (gold, pred, p, r, f1, acc)) in cases.iter().enumerate() {
        let s = entity_prf(&doc(gold), &doc(pred)).map_err(|e| e.to_string())?;
        let got = (s.overall.p, s.overall.r, s.overall.f1, s.overall.acc);
        ensure!(
            got == (*p, *r, *f1, *acc),
            "case {}: got {got:?}, want {:?}",
            i + 1,
            (p, r, f1, acc)
        );
    }
    Ok(format!("{} cases", cases.len()))
}

fn toklab(args: &[&str], output: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_toklab"))
        .args(args)
        .env("TOKLAB_OUTPUT", output)
        .env_remove("SOURCE_DATE_EPOCH")
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "toklab {} exited with {}: {}",
        args.join(" "),
        out.status,
        String::from_utf8_lossy(&out.stderr).trim()
    );
    Ok(())
}

fn zeroshot_golden() -> Result<String, String> {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = data_dir().join("zeroshot.toml");
    let config = config.to_str().unwrap();
    toklab(&["train-tok", "--config", config], out.path())?;
    toklab(&["zeroshot", "--config", config, "--seed", "42"], out.path())?;
    let golden = data_dir().join("zeroshot/golden");
    for name in ["report.json", "report.csv"] {
        let got = fs::read(out.path().join("zeroshot").join(name)).map_err(|e| e.to_string())?;
        let want = fs::read(golden.join(name)).map_err(|e| e.to_string())?;
        ensure!(got == want, "{name} differs from the committed golden copy");
    }
    let report: Value =
        serde_json::from_slice(&fs::read(golden.join("report.json")).unwrap()).map_err(|e| e.to_string())?;
    let f1 = |prefix: &str| {
        report["rows"]
            .as_array()
            .into_iter()
            .flatten()
            .find(|r| r["tokenizer"].as_str().is_some_and(|t| t.starts_with(prefix)))
            .and_then(|r| r["f1"].as_f64())
            .ok_or(format!("no {prefix} row"))
    };
    let (unigram, bpe) = (f1("unigram")?, f1("bpe")?);
    ensure!(unigram >= bpe, "unigram F1 {unigram:.4} < bpe F1 {bpe:.4}");
    Ok(format!(
        "byte-identical, unigram F1 {:.2} >= bpe F1 {:.2}",
        100.0 * unigram,
        100.0 * bpe
    ))
}

fn random_tags(rng: &mut impl Rng, n: usize) -> Vec<Tag> {
    let labels = ["PER", "LOC", "ORG"];
    let mut tags = Vec::with_capacity(n);
    while tags.len() < n {
        if rng.gen_bool(0.6) {
            tags.push(Tag::O);
            continue;
        }
        let label = labels.choose(rng).unwrap().to_string();
        tags.push(Tag::B(label.clone()));
        for _ in 0..rng.gen_range(0..3) {
            if tags.len() < n {
                tags.push(Tag::I(label.clone()));
            }
        }
    }
    tags
}

fn alignment_inverse() -> Result<String, String> {
    let data = data_dir();
    let train = parse_conll(data.join("ner/bn.train.conll"))
        .map_err(|e| e.to_string())?
        .document;
    let train = NerDocument::new(train.sentences[..300].to_vec(), "bn").map_err(|e| e.to_string())?;
    let text = Corpus::from_lines(train.sentences.iter().map(|s| s.words.join(" ")), "bn", "Beng");
    let tokenizers = [
        Tokenizer::Bpe(train_bpe(&text, 400).map_err(|e| e.to_string())?),
        Tokenizer::Unigram(train_unigram(&text, 400, &UnigramParams::default()).map_err(|e| e.to_string())?),
        Tokenizer::Char(CharTokenizer::new(CharMode::Codepoint)),
        Tokenizer::Char(CharTokenizer::new(CharMode::Grapheme)),
    ];
    let mut vocab: Vec<String> = train.sentences.iter().flat_map(|s| s.words.clone()).collect();
    vocab.sort();
    vocab.dedup();
    vocab.extend(["ᱚᱛᱜ", "xyz", "কো", "ৰাম"].map(String::from));
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    let triples = 1000;
    for case in 0..triples {
        let tok = tokenizers.choose(&mut rng).unwrap();
        let n = rng.gen_range(1..=15);
        let words: Vec<String> = (0..n).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect();
        let gold = random_tags(&mut rng, n);
        let aligned = align_labels(&words, &gold, tok).map_err(|e| e.to_string())?;
        ensure!(
            aligned.word_starts.len() == n,
            "case {case}: {} word starts for {n} words",
            aligned.word_starts.len()
        );
        let mut collapsed = Vec::new();
        for (i, piece_tag) in aligned.piece_tags.iter().enumerate() {
            let is_start = aligned.word_starts.contains(&i);
            match piece_tag {
                PieceTag::Tag(t) if is_start => collapsed.push(t.clone()),
                PieceTag::Cont if !is_start => {}
                other => {
                    return Err(format!(
                        "case {case}: piece {i} tagged {other} (word start: {is_start})"
                    ))
                }
            }
        }
        ensure!(collapsed == gold, "case {case}: collapsed {collapsed:?} != {gold:?}");
        for (i, w) in words.iter().enumerate() {
            let spelled = decode(aligned.word_pieces(i));
            ensure!(
                spelled == *w || spelled.contains(UNK),
                "case {case}: word {i} `{w}` spelled `{spelled}`"
            );
        }
        ensure!(
            aligned.pieces.iter().filter(|p| p.starts_with(META_STR)).count() == n,
            "case {case}: word boundaries lost"
        );
    }

    let config = TaggerConfig { epochs: 3, seed: 42 };
    let models = tokenizers
        .iter()
        .map(|t| train_tagger(&train, t, config).map(|m| (m, t)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let inputs = 1000;
    let mut entities = 0;
    for case in 0..inputs {
        let (model, tok) = models.choose(&mut rng).unwrap();
        let n = rng.gen_range(1..=20);
        let words: Vec<String> = (0..n).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect();
        let pred = model.bind(tok).map_err(|e| e.to_string())?.predict(&words);
        ensure!(pred.len() == n, "input {case}: {} tags for {n} words", pred.len());
        ensure!(iob2_valid(&pred), "input {case}: invalid IOB2 {pred:?}");
        entities += pred.iter().filter(|t| matches!(t, Tag::B(_))).count();
    }
    ensure!(entities > 0, "taggers never predicted an entity");
    Ok(format!(
        "{triples} alignments, {inputs} predictions with {entities} entities"
    ))
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn determinism() -> Result<String, String> {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = data_dir().canonicalize().map_err(|e| e.to_string())?;
    let d = |p: &str| data.join(p).display().to_string();
    let config = format!(
        r#"output_dir = "unused"

[[tokenizers]]
kind = "bpe"
vocab_size = 400

[[tokenizers]]
kind = "unigram"
vocab_size = 400

[[tokenizers]]
kind = "char"

[[corpora]]
path = "{tok}"
language = "multi"
script = "mixed"
role = "train"

[[corpora]]
path = "{mni}"
language = "mni"
script = "Beng"
role = "intrinsic"
lexicon = "{lex}"

[[corpora]]
path = "{bn}"
language = "bn"
script = "Beng"
role = "train"
format = "conll"

[[corpora]]
path = "{asm}"
language = "as"
script = "Beng"
role = "test"
format = "conll"

[ner]
train_language = "bn"
test_languages = ["as"]
epochs = 3
seed = 7
"#,
        tok = d("corpora/tokenizer_train.txt"),
        mni = d("corpora/mni.txt"),
        lex = d("lexicons/mni.tsv"),
        bn = d("ner/bn.train.conll"),
        asm = d("ner/as.test.conll"),
    );
    let config_path = work.path().join("experiment.toml");
    fs::write(&config_path, config).map_err(|e| e.to_string())?;
    let config = config_path.to_str().unwrap();
    let runs = [work.path().join("a"), work.path().join("b")];
    for out in &runs {
        toklab(&["train-tok", "--config", config, "--include-char"], out)?;
        toklab(&["eval-intrinsic", "--config", config], out)?;
        toklab(&["ner-train", "--config", config, "--include-char"], out)?;
        toklab(&["ner-eval", "--config", config, "--include-char"], out)?;
        toklab(&["zeroshot", "--config", config, "--include-char", "--force"], out)?;
        toklab(&["report", "--output-dir", out.to_str().unwrap()], out)?;
    }
    let (a, b) = (snapshot(&runs[0]), snapshot(&runs[1]));
    ensure!(a.keys().eq(b.keys()), "runs wrote different file sets");
    for (path, bytes) in &a {
        ensure!(b[path] == *bytes, "{} differs between runs", path.display());
    }
    ensure!(a.len() >= 15, "only {} files written", a.len());
    Ok(format!("{} files byte-identical across two runs", a.len()))
}
