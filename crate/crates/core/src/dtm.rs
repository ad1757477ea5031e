//! Topic evolution across time slices by chaining per-slice Gibbs LDA.
//!
//! Slice 0 is plain LDA. Each later slice gets a word prior built from the
//! previous slice's topics,
//!
//! ```text
//! eta_t[k][w] = eta + kappa * beta_{t-1}[k][w] * V * ETA_SCALE
//! ```
//!
//! and starts from assignments drawn with `p(k) ∝ beta_{t-1}[k][w]`, so
//! topic `k` names the same evolving topic in every slice. With
//! `kappa == 0` neither the prior nor the warm start is applied and each
//! slice is exactly an independent [`train_lda`](crate::lda::train_lda)
//! run on generator stream `t`. A slice without documents carries the
//! previous topics forward unchanged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TimeSlice;
use crate::lda::{top_terms, LdaError, LdaHyperparams, LdaTrainer, TopicSummary};
use crate::matrix::Matrix;
use crate::preprocess::{BowDoc, Vocabulary};

/// Multiplier on `kappa * V` in the carried-over prior.
pub const ETA_SCALE: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum DtmError {
    #[error("no time slices given")]
    NoSlices,
    #[error("every time slice is empty")]
    AllSlicesEmpty,
    #[error("requested {requested} topics but hyperparameters specify {configured}")]
    TopicMismatch { requested: usize, configured: usize },
    #[error("slice {slice} has documents but none of their tokens are in the vocabulary")]
    SliceOutOfVocabulary { slice: usize },
    #[error("kappa must be finite and non-negative, got {0}")]
    InvalidKappa(f64),
    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),
    #[error("topic {topic} out of range for {topics} topics")]
    TopicOutOfRange { topic: usize, topics: usize },
    #[error("slice {slice} out of range for {slices} slices")]
    SliceOutOfRange { slice: usize, slices: usize },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Lda(#[from] LdaError),
}

/// Per-slice topic-word distributions sharing topic identity over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtmModel {
    pub slices: Vec<TimeSlice>,
    /// `beta[t]` is K x V.
    pub beta: Vec<Matrix>,
    /// `theta[t]` is D_t x K; empty for slices without documents.
    pub theta: Vec<Matrix>,
    pub doc_lengths: Vec<Vec<usize>>,
    /// True where `beta[t]` was copied from a neighbouring slice.
    pub inherited: Vec<bool>,
    pub kappa: f64,
    pub base_hyper: LdaHyperparams,
    pub vocab_size: usize,
}

#[derive(Serialize, Deserialize)]
struct DtmFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: DtmModel,
}

const DTM_FORMAT: &str = "newstopics-dtm";
const DTM_VERSION: u32 = 1;

impl DtmModel {
    pub fn topics(&self) -> usize {
        self.base_hyper.topics
    }

    pub fn num_slices(&self) -> usize {
        self.beta.len()
    }

    pub fn slice_labels(&self) -> Vec<String> {
        self.slices.iter().map(TimeSlice::label).collect()
    }

    /// Mean over topics and consecutive slice pairs of the total-variation
    /// distance between a topic's word distributions.
    pub fn mean_consecutive_tv(&self) -> f64 {
        let pairs = self.beta.windows(2);
        let n = pairs.len() * self.topics();
        if n == 0 {
            return 0.0;
        }
        let total: f64 = pairs
            .flat_map(|w| {
                (0..self.topics()).map(move |k| {
                    0.5 * w[0]
                        .row(k)
                        .iter()
                        .zip(w[1].row(k))
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>()
                })
            })
            .sum();
        total / n as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DtmFile {
            format: DTM_FORMAT.into(),
            version: DTM_VERSION,
            model: self.clone(),
        })
        .expect("dtm serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DtmError> {
        let file: DtmFile = serde_json::from_str(text).map_err(|e| DtmError::Format(e.to_string()))?;
        if file.format != DTM_FORMAT || file.version != DTM_VERSION {
            return Err(DtmError::Format(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        let m = file.model;
        let t = m.slices.len();
        if m.beta.len() != t || m.theta.len() != t || m.doc_lengths.len() != t || m.inherited.len() != t {
            return Err(DtmError::Format("per-slice arrays disagree in length".into()));
        }
        if m.beta.iter().any(|b| b.rows() != m.topics() || b.cols() != m.vocab_size) {
            return Err(DtmError::Format("beta shape disagrees with header".into()));
        }
        Ok(m)
    }
}

/// Trains one chained model over `sliced` in order. Every document must
/// use the shared vocabulary of size `vocab_size`.
pub fn train_dtm(
    sliced: &[(TimeSlice, Vec<BowDoc>)],
    topics: usize,
    base_hyper: &LdaHyperparams,
    kappa: f64,
    vocab_size: usize,
) -> Result<DtmModel, DtmError> {
    if sliced.is_empty() {
        return Err(DtmError::NoSlices);
    }
    if topics != base_hyper.topics {
        return Err(DtmError::TopicMismatch {
            requested: topics,
            configured: base_hyper.topics,
        });
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(DtmError::InvalidKappa(kappa));
    }
    base_hyper.validate()?;
    if vocab_size == 0 {
        return Err(LdaError::EmptyVocabulary.into());
    }

    let n = sliced.len();
    let mut beta: Vec<Option<Matrix>> = vec![None; n];
    let mut theta = vec![Matrix::zeros(0, topics); n];
    let mut doc_lengths = vec![Vec::new(); n];
    let mut inherited = vec![false; n];
    let mut prev: Option<Matrix> = None;

    for (t, (_, docs)) in sliced.iter().enumerate() {
        if docs.is_empty() {
            if let Some(p) = &prev {
                beta[t] = Some(p.clone());
                inherited[t] = true;
            }
            continue;
        }
        if docs.iter().all(BowDoc::is_empty) {
            return Err(DtmError::SliceOutOfVocabulary { slice: t });
        }
        let mut trainer = LdaTrainer::new(base_hyper.clone()).stream(t as u64);
        if let (Some(p), true) = (&prev, kappa > 0.0) {
            let boost = kappa * vocab_size as f64 * ETA_SCALE;
            let prior = Matrix::from_vec(
                topics,
                vocab_size,
                p.as_slice().iter().map(|&b| base_hyper.eta + boost * b).collect(),
            );
            trainer = trainer.word_prior(prior).warm_start(p.clone());
        }
        let model = trainer.train(docs, vocab_size)?;
        log::debug!("slice {t}: {} documents, {} samples", docs.len(), model.retained_samples);
        prev = Some(model.beta.clone());
        beta[t] = Some(model.beta);
        theta[t] = model.theta;
        doc_lengths[t] = model.doc_lengths;
    }

    // Leading empty slices take the first trained topics.
    let first = beta.iter().flatten().next().cloned().ok_or(DtmError::AllSlicesEmpty)?;
    for (b, inh) in beta.iter_mut().zip(inherited.iter_mut()) {
        if b.is_none() {
            *b = Some(first.clone());
            *inh = true;
        }
    }

    Ok(DtmModel {
        slices: sliced.iter().map(|(s, _)| s.clone()).collect(),
        beta: beta.into_iter().map(|b| b.expect("filled above")).collect(),
        theta,
        doc_lengths,
        inherited,
        kappa,
        base_hyper: base_hyper.clone(),
        vocab_size,
    })
}

/// Probability of tracked words in one topic across all slices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySeries {
    pub topic_id: usize,
    pub words: Vec<String>,
    /// `series[i][t] = p(words[i] | topic, t)`.
    pub series: Vec<Vec<f64>>,
    pub slice_labels: Vec<String>,
}

impl TrajectorySeries {
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.words
            .iter()
            .position(|w| w == word)
            .map(|i| self.series[i].as_slice())
    }
}

/// Entries of `beta_t[topic]` for each word, unnormalized.
pub fn trajectory<S: AsRef<str>>(
    model: &DtmModel,
    topic_id: usize,
    words: &[S],
    vocab: &Vocabulary,
) -> Result<TrajectorySeries, DtmError> {
    if topic_id >= model.topics() {
        return Err(DtmError::TopicOutOfRange {
            topic: topic_id,
            topics: model.topics(),
        });
    }
    let ids = words
        .iter()
        .map(|w| vocab.id(w.as_ref()).ok_or_else(|| DtmError::UnknownWord(w.as_ref().into())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrajectorySeries {
        topic_id,
        words: words.iter().map(|w| w.as_ref().to_string()).collect(),
        series: ids
            .iter()
            .map(|&w| model.beta.iter().map(|b| b.get(topic_id, w as usize)).collect())
            .collect(),
        slice_labels: model.slice_labels(),
    })
}

pub fn top_words_at(model: &DtmModel, topic_id: usize, t: usize, n: usize) -> Result<TopicSummary, DtmError> {
    if topic_id >= model.topics() {
        return Err(DtmError::TopicOutOfRange {
            topic: topic_id,
            topics: model.topics(),
        });
    }
    let beta = model.beta.get(t).ok_or(DtmError::SliceOutOfRange {
        slice: t,
        slices: model.num_slices(),
    })?;
    Ok(TopicSummary {
        topic_id,
        terms: top_terms(beta.row(topic_id), n),
    })
}

/// CSV `topic,word,slice_start,probability`, one row per word and slice.
pub fn trajectories_csv(all: &[TrajectorySeries]) -> String {
    let mut out = String::from("topic,word,slice_start,probability\n");
    for s in all {
        for (word, values) in s.words.iter().zip(&s.series) {
            for (label, p) in s.slice_labels.iter().zip(values) {
                out.push_str(&format!("{},{},{},{}\n", s.topic_id, word, label, p));
            }
        }
    }
    out
}

/// Inverse of [`trajectories_csv`]; series come back grouped by topic in
/// first-seen order.
pub fn parse_trajectories_csv(text: &str) -> Result<Vec<TrajectorySeries>, DtmError> {
    let mut lines = text.lines();
    if lines.next() != Some("topic,word,slice_start,probability") {
        return Err(DtmError::Format("missing trajectory CSV header".into()));
    }
    let mut out: Vec<TrajectorySeries> = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let bad = |m: &str| DtmError::Format(format!("line {}: {m}", i + 2));
        let fields: Vec<&str> = line.split(',').collect();
        let [topic, word, label, p] = fields[..] else {
            return Err(bad("expected 4 fields"));
        };
        let topic: usize = topic.parse().map_err(|_| bad("bad topic id"))?;
        let p: f64 = p.parse().map_err(|_| bad("bad probability"))?;
        if out.last().is_none_or(|s| s.topic_id != topic) {
            out.push(TrajectorySeries {
                topic_id: topic,
                words: Vec::new(),
                series: Vec::new(),
                slice_labels: Vec::new(),
            });
        }
        let s = out.last_mut().expect("pushed above");
        if s.words.last().is_none_or(|w| w != word) {
            s.words.push(word.to_string());
            s.series.push(Vec::new());
        }
        if s.words.len() == 1 {
            s.slice_labels.push(label.to_string());
        }
        s.series.last_mut().expect("pushed above").push(p);
    }
    for s in &out {
        if s.series.iter().any(|v| v.len() != s.slice_labels.len()) {
            return Err(DtmError::Format(format!(
                "topic {} has series of unequal length",
                s.topic_id
            )));
        }
    }
    Ok(out)
}
