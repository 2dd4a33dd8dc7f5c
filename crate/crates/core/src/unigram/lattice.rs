use std::cmp::Ordering;

use super::{log_sum_exp, UnigramModel};
use crate::vocab::UNK;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub start: usize,
    pub end: usize,
    /// Index into the model's regular pieces; `None` for `<unk>`.
    pub piece: Option<usize>,
    pub log_prob: f64,
}

/// All segmentations of one word: nodes are codepoint positions `0..=len`
/// and edges are vocabulary pieces spanning `start..end`.
#[derive(Debug, Clone)]
pub struct Lattice {
    symbols: Vec<char>,
    edges: Vec<Edge>,
    ending_at: Vec<Vec<usize>>,
    starting_at: Vec<Vec<usize>>,
}

impl Lattice {
    /// Builds the lattice, optionally leaving out one piece. Positions whose
    /// codepoint has no single-character piece get an `<unk>` edge, so every
    /// node stays reachable.
    pub(crate) fn build(model: &UnigramModel, symbols: &[char], exclude: Option<usize>) -> Lattice {
        let m = symbols.len();
        let mut lattice = Lattice {
            symbols: symbols.to_vec(),
            edges: Vec::new(),
            ending_at: vec![Vec::new(); m + 1],
            starting_at: vec![Vec::new(); m + 1],
        };
        let max_len = model.max_piece_chars();
        let mut buf = String::new();
        for start in 0..m {
            buf.clear();
            let mut single = false;
            for end in start + 1..=m.min(start + max_len) {
                buf.push(symbols[end - 1]);
                if let Some(idx) = model.piece_index(&buf) {
                    if Some(idx) == exclude {
                        continue;
                    }
                    if end == start + 1 {
                        single = true;
                    }
                    lattice.push(Edge {
                        start,
                        end,
                        piece: Some(idx),
                        log_prob: model.pieces()[idx].1,
                    });
                }
            }
            if !single {
                lattice.push(Edge {
                    start,
                    end: start + 1,
                    piece: None,
                    log_prob: model.unk_log_prob(),
                });
            }
        }
        lattice
    }

    fn push(&mut self, edge: Edge) {
        let id = self.edges.len();
        self.ending_at[edge.end].push(id);
        self.starting_at[edge.start].push(id);
        self.edges.push(edge);
    }

    /// Number of codepoints (including the leading `▁`).
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_unk(&self) -> bool {
        self.edges.iter().any(|e| e.piece.is_none())
    }

    /// Log of the summed probability of all paths reaching each node.
    pub fn forward(&self) -> Vec<f64> {
        let m = self.len();
        let mut alpha = vec![f64::NEG_INFINITY; m + 1];
        alpha[0] = 0.0;
        for j in 1..=m {
            let mut acc = f64::NEG_INFINITY;
            for &e in &self.ending_at[j] {
                let edge = &self.edges[e];
                acc = log_sum_exp(acc, alpha[edge.start] + edge.log_prob);
            }
            alpha[j] = acc;
        }
        alpha
    }

    /// Log of the summed probability of all paths from each node to the end.
    pub fn backward(&self) -> Vec<f64> {
        let m = self.len();
        let mut beta = vec![f64::NEG_INFINITY; m + 1];
        beta[m] = 0.0;
        for i in (0..m).rev() {
            let mut acc = f64::NEG_INFINITY;
            for &e in &self.starting_at[i] {
                let edge = &self.edges[e];
                acc = log_sum_exp(acc, beta[edge.end] + edge.log_prob);
            }
            beta[i] = acc;
        }
        beta
    }

    /// Log of the total probability over all segmentations.
    pub fn log_partition(&self) -> f64 {
        self.forward()[self.len()]
    }

    /// Posterior usage of each edge: `exp(alpha[start] + lp + beta[end] - Z)`.
    pub fn edge_marginals(&self) -> (Vec<f64>, f64) {
        let alpha = self.forward();
        let beta = self.backward();
        let z = alpha[self.len()];
        let marginals = self
            .edges
            .iter()
            .map(|e| (alpha[e.start] + e.log_prob + beta[e.end] - z).exp())
            .collect();
        (marginals, z)
    }

    fn edge_text(&self, e: &Edge) -> String {
        match e.piece {
            Some(_) => self.symbols[e.start..e.end].iter().collect(),
            None => UNK.to_string(),
        }
    }

    fn path_to(&self, best: &[Option<(f64, usize, usize)>], node: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut j = node;
        while j > 0 {
            let (_, _, e) = best[j].expect("reachable node");
            path.push(e);
            j = self.edges[e].start;
        }
        path.reverse();
        path
    }

    fn compare_paths(&self, a: &[usize], b: &[usize]) -> Ordering {
        for (x, y) in a.iter().zip(b) {
            let ord = self.edge_text(&self.edges[*x]).cmp(&self.edge_text(&self.edges[*y]));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        a.len().cmp(&b.len())
    }

    /// Highest-scoring path. Equal scores prefer fewer pieces, then the
    /// lexicographically smallest piece sequence.
    pub fn viterbi(&self) -> (Vec<Edge>, f64) {
        let m = self.len();
        if m == 0 {
            return (Vec::new(), 0.0);
        }
        let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; m + 1];
        best[0] = Some((0.0, 0, usize::MAX));
        for j in 1..=m {
            for &e in &self.ending_at[j] {
                let edge = &self.edges[e];
                let Some((score, count, _)) = best[edge.start] else {
                    continue;
                };
                let cand = (score + edge.log_prob, count + 1, e);
                let replace = match best[j] {
                    None => true,
                    Some((s, c, cur)) => {
                        if cand.0 != s {
                            cand.0 > s
                        } else if cand.1 != c {
                            cand.1 < c
                        } else {
                            let mut cand_path = self.path_to(&best, edge.start);
                            cand_path.push(e);
                            let mut cur_path = self.path_to(&best, self.edges[cur].start);
                            cur_path.push(cur);
                            self.compare_paths(&cand_path, &cur_path) == Ordering::Less
                        }
                    }
                };
                if replace {
                    best[j] = Some(cand);
                }
            }
        }
        let score = best[m].map(|b| b.0).unwrap_or(f64::NEG_INFINITY);
        let path = self.path_to(&best, m).into_iter().map(|e| self.edges[e]).collect();
        (path, score)
    }
}
