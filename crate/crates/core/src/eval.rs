//! Model-selection diagnostics: UMass coherence, top-word overlap between
//! topics, and a 2-D intertopic distance map.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lda::{top_terms, LdaModel};
use crate::matrix::Matrix;
use crate::preprocess::BowDoc;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("top_n must be at least 2, got {0}")]
    TopNTooSmall(usize),
    #[error("top_n {top_n} exceeds vocabulary size {vocab_size}")]
    TopNExceedsVocabulary { top_n: usize, vocab_size: usize },
    #[error("reference corpus is empty")]
    EmptyCorpus,
    #[error("intertopic map needs at least 2 topics, got {0}")]
    TooFewTopics(usize),
    #[error("malformed input: {0}")]
    Format(String),
}

/// Per-topic UMass coherence of the top words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub top_n: usize,
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Pairs left out of each topic's sum because `D(w_j) = 0`.
    pub skipped_pairs: Vec<usize>,
}

/// Document frequencies and co-document frequencies over a reference
/// corpus, restricted to the words asked about.
struct DocCounts {
    doc_sets: Vec<BTreeSet<u32>>,
}

impl DocCounts {
    fn new(docs: &[BowDoc]) -> Self {
        DocCounts {
            doc_sets: docs.iter().map(|d| d.counts.keys().copied().collect()).collect(),
        }
    }

    fn single(&self, w: u32) -> usize {
        self.doc_sets.iter().filter(|s| s.contains(&w)).count()
    }

    fn pair(&self, a: u32, b: u32) -> usize {
        self.doc_sets
            .iter()
            .filter(|s| s.contains(&a) && s.contains(&b))
            .count()
    }
}

/// For each topic's top words `w_1..w_N` (descending probability),
/// `sum_{i=2..N} sum_{j<i} ln((D(w_i, w_j) + 1) / D(w_j))`.
pub fn umass_coherence(model: &LdaModel, docs: &[BowDoc], top_n: usize) -> Result<CoherenceReport, EvalError> {
    umass_coherence_of(&model.beta, docs, top_n)
}

/// [`umass_coherence`] over any K x V topic matrix.
pub fn umass_coherence_of(beta: &Matrix, docs: &[BowDoc], top_n: usize) -> Result<CoherenceReport, EvalError> {
    if top_n < 2 {
        return Err(EvalError::TopNTooSmall(top_n));
    }
    if top_n > beta.cols() {
        return Err(EvalError::TopNExceedsVocabulary {
            top_n,
            vocab_size: beta.cols(),
        });
    }
    if docs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let counts = DocCounts::new(docs);
    let mut scores = Vec::with_capacity(beta.rows());
    let mut skipped_pairs = Vec::with_capacity(beta.rows());
    for row in beta.iter_rows() {
        let words: Vec<u32> = top_terms(row, top_n).into_iter().map(|(w, _)| w).collect();
        let mut score = 0.0;
        let mut skipped = 0;
        for i in 1..words.len() {
            for j in 0..i {
                let dj = counts.single(words[j]);
                if dj == 0 {
                    skipped += 1;
                    continue;
                }
                let dij = counts.pair(words[i], words[j]);
                score += ((dij as f64 + 1.0) / dj as f64).ln();
            }
        }
        scores.push(score);
        skipped_pairs.push(skipped);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(CoherenceReport {
        top_n,
        scores,
        mean,
        skipped_pairs,
    })
}

/// Jaccard similarity of top-word sets for every pair of topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub top_n: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl OverlapReport {
    /// Mean of the off-diagonal entries; 0 for a single topic.
    pub fn mean_off_diagonal(&self) -> f64 {
        let k = self.matrix.len();
        if k < 2 {
            return 0.0;
        }
        let total: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[i][j])
            .sum();
        total / (k * (k - 1)) as f64
    }
}

pub fn topic_overlap(model: &LdaModel, top_n: usize) -> OverlapReport {
    topic_overlap_of(&model.beta, top_n)
}

pub fn topic_overlap_of(beta: &Matrix, top_n: usize) -> OverlapReport {
    let sets: Vec<BTreeSet<u32>> = beta
        .iter_rows()
        .map(|r| top_terms(r, top_n).into_iter().map(|(w, _)| w).collect())
        .collect();
    let matrix = sets
        .iter()
        .map(|a| {
            sets.iter()
                .map(|b| {
                    let union = a.union(b).count();
                    if union == 0 {
                        1.0
                    } else {
                        a.intersection(b).count() as f64 / union as f64
                    }
                })
                .collect()
        })
        .collect();
    OverlapReport { top_n, matrix }
}

/// Jensen-Shannon divergence in nats; lies in `[0, ln 2]`.
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> f64 {
    let kl_to_mid = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(&x, _)| x > 0.0)
            .map(|(&x, &y)| x * (2.0 * x / (x + y)).ln())
            .sum()
    };
    (0.5 * kl_to_mid(p, q) + 0.5 * kl_to_mid(q, p)).clamp(0.0, std::f64::consts::LN_2)
}

/// Topics placed in the plane so Euclidean distances approximate their
/// Jensen-Shannon divergences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntertopicMap {
    pub coords: Vec<[f64; 2]>,
    /// Share of corpus tokens assigned to each topic.
    pub prevalence: Vec<f64>,
    pub distances: Vec<Vec<f64>>,
    /// Set when every topic coincides and all points sit at the origin.
    pub degenerate: bool,
}

impl IntertopicMap {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("topic,x,y,prevalence\n");
        for (k, ([x, y], p)) in self.coords.iter().zip(&self.prevalence).enumerate() {
            out.push_str(&format!("{k},{x},{y},{p}\n"));
        }
        out
    }

    /// Reads the CSV form. Distances are not part of it and come back empty.
    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut lines = text.lines();
        if lines.next() != Some("topic,x,y,prevalence") {
            return Err(EvalError::Format("missing intertopic CSV header".into()));
        }
        let mut coords = Vec::new();
        let mut prevalence = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = || EvalError::Format(format!("line {}: expected topic,x,y,prevalence", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            let [k, x, y, p] = f[..] else { return Err(bad()) };
            if k.parse::<usize>().map_err(|_| bad())? != coords.len() {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            coords.push([num(x)?, num(y)?]);
            prevalence.push(num(p)?);
        }
        Ok(IntertopicMap {
            degenerate: coords.iter().all(|&[x, y]| x == 0.0 && y == 0.0),
            coords,
            prevalence,
            distances: Vec::new(),
        })
    }
}

/// Classical multidimensional scaling of a symmetric distance matrix into
/// 2-D. Returns the coordinates and whether the configuration collapsed
/// to a point.
pub fn classical_mds(distances: &[Vec<f64>]) -> (Vec<[f64; 2]>, bool) {
    let n = distances.len();
    let sq = DMatrix::from_fn(n, n, |i, j| distances[i][j] * distances[i][j]);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));

    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
    let top = order.first().map_or(0.0, |&i| eig.eigenvalues[i]);
    if top <= 1e-12 {
        return (vec![[0.0, 0.0]; n], true);
    }
    let mut coords = vec![[0.0, 0.0]; n];
    for (axis, &idx) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda <= top * 1e-10 {
            continue;
        }
        let v = eig.eigenvectors.column(idx);
        // Fix the eigenvector sign: largest-magnitude entry positive.
        let pivot = (0..n)
            .max_by(|&a, &c| v[a].abs().total_cmp(&v[c].abs()).then(c.cmp(&a)))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = lambda.sqrt() * sign;
        for (i, c) in coords.iter_mut().enumerate() {
            c[axis] = v[i] * scale;
        }
    }
    (coords, false)
}

pub fn intertopic_map(model: &LdaModel) -> Result<IntertopicMap, EvalError> {
    intertopic_map_of(&model.beta, &model.theta, &model.doc_lengths)
}

/// Builds the map from explicit topic, document-topic and length data.
pub fn intertopic_map_of(beta: &Matrix, theta: &Matrix, doc_lengths: &[usize]) -> Result<IntertopicMap, EvalError> {
    let k = beta.rows();
    if k < 2 {
        return Err(EvalError::TooFewTopics(k));
    }
    if theta.rows() != doc_lengths.len() || (theta.rows() > 0 && theta.cols() != k) {
        return Err(EvalError::Format("theta shape disagrees with beta and lengths".into()));
    }
    let distances: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { 0.0 } else { jensen_shannon(beta.row(i), beta.row(j)) })
                .collect()
        })
        .collect();
    let (coords, degenerate) = classical_mds(&distances);
    if degenerate {
        log::warn!("all {k} topics coincide; intertopic map collapses to the origin");
    }
    let total: usize = doc_lengths.iter().sum();
    let prevalence = if total == 0 {
        vec![1.0 / k as f64; k]
    } else {
        (0..k)
            .map(|t| {
                theta
                    .iter_rows()
                    .zip(doc_lengths)
                    .map(|(row, &n)| row[t] * n as f64)
                    .sum::<f64>()
                    / total as f64
            })
            .collect()
    };
    Ok(IntertopicMap {
        coords,
        prevalence,
        distances,
        degenerate,
    })
}
