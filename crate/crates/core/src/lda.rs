//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//!
//! Topic-word distributions `beta` (K x V) and document-topic proportions
//! `theta` (D x K) are integrated out during sampling; only the topic
//! assignment of every token is resampled, from
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk[d][k] + alpha) * (n_kw[k][w] + eta_kw) / (n_k[k] + sum_w eta_kw)
//! ```
//!
//! with the current token removed from all counts. After burn-in, `beta`
//! and `theta` are posterior-mean estimates averaged over every
//! `thin`-th sweep, counted back from the final sweep so at least one
//! sample is always retained.
//!
//! # Randomness
//!
//! Every run owns one ChaCha8 generator keyed by `(seed, stream)`. Plain
//! training uses stream 0; the dynamic model trains slice `t` on stream
//! `t`. ChaCha8 output is identical on every platform, so a seed pins the
//! run bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::preprocess::BowDoc;

#[derive(Debug, Error, PartialEq)]
pub enum LdaError {
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("vocabulary size is zero")]
    EmptyVocabulary,
    #[error("word id {word} in document {doc} is outside the vocabulary of size {vocab_size}")]
    WordOutOfRange {
        doc: usize,
        word: u32,
        vocab_size: usize,
    },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("topic {topic} out of range for {topics} topics")]
    TopicOutOfRange { topic: usize, topics: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("malformed model file: {0}")]
    Format(String),
}

/// Sampler settings. `alpha` and `eta` are symmetric Dirichlet
/// concentrations for document-topic and topic-word distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaHyperparams {
    pub topics: usize,
    pub alpha: f64,
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl LdaHyperparams {
    /// Defaults: `alpha = 50 / K`, `eta = 0.01`, 1000 sweeps, 200 burn-in,
    /// every 10th sweep retained, seed 0.
    pub fn new(topics: usize) -> Self {
        LdaHyperparams {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            eta: 0.01,
            iterations: 1000,
            burn_in: 200,
            thin: 10,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let bad = |m: String| Err(LdaError::InvalidHyperparams(m));
        if self.topics < 2 {
            return bad(format!("need at least 2 topics, got {}", self.topics));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if self.iterations <= self.burn_in {
            return bad(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            ));
        }
        if self.thin == 0 {
            return bad("thin must be at least 1".into());
        }
        Ok(())
    }

    /// Sweeps (1-based) whose state contributes to the estimates.
    pub fn retained_sweeps(&self) -> impl Iterator<Item = usize> + '_ {
        (self.burn_in + 1..=self.iterations).filter(|s| (self.iterations - s).is_multiple_of(self.thin))
    }

    fn is_retained(&self, sweep: usize) -> bool {
        sweep > self.burn_in && (self.iterations - sweep).is_multiple_of(self.thin)
    }
}

/// Generator for one sampling run.
pub fn sampler_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sampler state at the end of training: token assignments and the count
/// tables they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    topics: usize,
    vocab_size: usize,
    words: Vec<Vec<u32>>,
    assignments: Vec<Vec<u32>>,
    n_dk: Vec<u32>,
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
}

impl GibbsState {
    fn from_assignments(
        topics: usize,
        vocab_size: usize,
        words: Vec<Vec<u32>>,
        assignments: Vec<Vec<u32>>,
    ) -> Self {
        let mut state = GibbsState {
            topics,
            vocab_size,
            n_dk: vec![0; words.len() * topics],
            n_kw: vec![0; topics * vocab_size],
            n_k: vec![0; topics],
            words,
            assignments,
        };
        for d in 0..state.words.len() {
            for n in 0..state.words[d].len() {
                let (w, k) = (state.words[d][n] as usize, state.assignments[d][n] as usize);
                state.n_dk[d * topics + k] += 1;
                state.n_kw[k * vocab_size + w] += 1;
                state.n_k[k] += 1;
            }
        }
        state
    }

    /// Per-document word ids in sampling order.
    pub fn words(&self) -> &[Vec<u32>] {
        &self.words
    }

    /// Per-document topic ids aligned with [`GibbsState::words`].
    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    pub fn n_dk(&self, doc: usize, topic: usize) -> u32 {
        self.n_dk[doc * self.topics + topic]
    }

    pub fn n_kw(&self, topic: usize, word: usize) -> u32 {
        self.n_kw[topic * self.vocab_size + word]
    }

    pub fn n_k(&self, topic: usize) -> u32 {
        self.n_k[topic]
    }

    /// Recomputes every count table from the assignments and reports the
    /// first disagreement.
    pub fn audit(&self) -> Result<(), String> {
        let fresh = GibbsState::from_assignments(
            self.topics,
            self.vocab_size,
            self.words.clone(),
            self.assignments.clone(),
        );
        if fresh.n_dk != self.n_dk {
            return Err("n_dk disagrees with assignments".into());
        }
        if fresh.n_kw != self.n_kw {
            return Err("n_kw disagrees with assignments".into());
        }
        if fresh.n_k != self.n_k {
            return Err("n_k disagrees with assignments".into());
        }
        let total: usize = self.words.iter().map(Vec::len).sum();
        if self.n_k.iter().map(|&c| c as usize).sum::<usize>() != total {
            return Err("topic totals do not sum to the token count".into());
        }
        Ok(())
    }
}

/// A trained (or hand-assembled) topic model.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub hyper: LdaHyperparams,
    pub vocab_size: usize,
    /// Topic-word distributions, K x V.
    pub beta: Matrix,
    /// Document-topic proportions, D x K.
    pub theta: Matrix,
    /// Tokens per training document.
    pub doc_lengths: Vec<usize>,
    pub retained_samples: usize,
    state: Option<GibbsState>,
}

impl LdaModel {
    /// Assembles a model from explicit distributions, without sampler
    /// state. Rows are not renormalized.
    pub fn from_parts(
        hyper: LdaHyperparams,
        beta: Matrix,
        theta: Matrix,
        doc_lengths: Vec<usize>,
    ) -> Result<Self, LdaError> {
        if beta.rows() != theta.cols() {
            return Err(LdaError::Shape(format!(
                "beta has {} topics but theta has {}",
                beta.rows(),
                theta.cols()
            )));
        }
        if theta.rows() != doc_lengths.len() {
            return Err(LdaError::Shape(format!(
                "theta has {} documents but {} lengths given",
                theta.rows(),
                doc_lengths.len()
            )));
        }
        Ok(LdaModel {
            vocab_size: beta.cols(),
            hyper,
            beta,
            theta,
            doc_lengths,
            retained_samples: 0,
            state: None,
        })
    }

    /// The single-topic model of a corpus: every token in topic 0, so
    /// `beta[0][w] = (n_w + eta) / (N + V eta)` and every `theta` is 1.
    pub fn unigram(docs: &[BowDoc], vocab_size: usize, eta: f64) -> Result<Self, LdaError> {
        let words = collect_words(docs, vocab_size)?;
        let mut counts = vec![0usize; vocab_size];
        for &w in words.iter().flatten() {
            counts[w as usize] += 1;
        }
        let total: usize = counts.iter().sum();
        let denom = total as f64 + vocab_size as f64 * eta;
        let beta = Matrix::from_vec(
            1,
            vocab_size,
            counts.iter().map(|&c| (c as f64 + eta) / denom).collect(),
        );
        let mut hyper = LdaHyperparams::new(1);
        hyper.eta = eta;
        let theta = Matrix::filled(docs.len(), 1, 1.0);
        let assignments = words.iter().map(|d| vec![0; d.len()]).collect();
        let doc_lengths = words.iter().map(Vec::len).collect();
        Ok(LdaModel {
            state: Some(GibbsState::from_assignments(1, vocab_size, words, assignments)),
            hyper,
            vocab_size,
            beta,
            theta,
            doc_lengths,
            retained_samples: 1,
        })
    }

    pub fn topics(&self) -> usize {
        self.beta.rows()
    }

    pub fn num_docs(&self) -> usize {
        self.theta.rows()
    }

    /// Sampler state, absent for models loaded without assignments.
    pub fn state(&self) -> Option<&GibbsState> {
        self.state.as_ref()
    }

    /// Relabels topics: new topic `i` is old topic `perm[i]`.
    pub fn permute_topics(&self, perm: &[usize]) -> Result<LdaModel, LdaError> {
        let k = self.topics();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(LdaError::Shape("not a permutation of the topics".into()));
        }
        let mut inverse = vec![0u32; k];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new as u32;
        }
        let mut beta = Matrix::zeros(k, self.vocab_size);
        for (new, &old) in perm.iter().enumerate() {
            beta.row_mut(new).copy_from_slice(self.beta.row(old));
        }
        let mut theta = Matrix::zeros(self.num_docs(), k);
        for d in 0..self.num_docs() {
            for (new, &old) in perm.iter().enumerate() {
                theta.set(d, new, self.theta.get(d, old));
            }
        }
        let state = self.state.as_ref().map(|s| {
            let assignments = s
                .assignments
                .iter()
                .map(|zs| zs.iter().map(|&z| inverse[z as usize]).collect())
                .collect();
            GibbsState::from_assignments(k, s.vocab_size, s.words.clone(), assignments)
        });
        Ok(LdaModel {
            hyper: self.hyper.clone(),
            vocab_size: self.vocab_size,
            beta,
            theta,
            doc_lengths: self.doc_lengths.clone(),
            retained_samples: self.retained_samples,
            state,
        })
    }

    /// Versioned JSON. With `include_assignments`, the per-token
    /// `[word, topic]` pairs are stored so the count tables can be rebuilt.
    pub fn to_json(&self, include_assignments: bool) -> String {
        let assignments = include_assignments
            .then_some(self.state.as_ref())
            .flatten()
            .map(|s| {
                s.words
                    .iter()
                    .zip(&s.assignments)
                    .map(|(ws, zs)| ws.iter().zip(zs).map(|(&w, &z)| [w, z]).collect())
                    .collect()
            });
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            topics: self.topics(),
            vocab_size: self.vocab_size,
            seed: self.hyper.seed,
            hyper: self.hyper.clone(),
            retained_samples: self.retained_samples,
            doc_lengths: self.doc_lengths.clone(),
            beta: self.beta.clone(),
            theta: self.theta.clone(),
            assignments,
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LdaError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| LdaError::Format(e.to_string()))?;
        file.into_model()
    }
}

const MODEL_FORMAT: &str = "newstopics-lda";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    topics: usize,
    vocab_size: usize,
    seed: u64,
    hyper: LdaHyperparams,
    retained_samples: usize,
    doc_lengths: Vec<usize>,
    beta: Matrix,
    theta: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assignments: Option<Vec<Vec<[u32; 2]>>>,
}

impl ModelFile {
    fn into_model(self) -> Result<LdaModel, LdaError> {
        let fmt = |m: String| LdaError::Format(m);
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(fmt(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        if self.beta.rows() != self.topics || self.beta.cols() != self.vocab_size {
            return Err(fmt("beta shape disagrees with header".into()));
        }
        let mut model = LdaModel::from_parts(self.hyper, self.beta, self.theta, self.doc_lengths)?;
        model.retained_samples = self.retained_samples;
        if let Some(pairs) = self.assignments {
            let (k, v) = (self.topics, self.vocab_size);
            if pairs.len() != model.num_docs()
                || pairs
                    .iter()
                    .flatten()
                    .any(|&[w, z]| w as usize >= v || z as usize >= k)
            {
                return Err(fmt("assignments disagree with header".into()));
            }
            let words = pairs.iter().map(|d| d.iter().map(|p| p[0]).collect()).collect();
            let zs = pairs.iter().map(|d| d.iter().map(|p| p[1]).collect()).collect();
            model.state = Some(GibbsState::from_assignments(k, v, words, zs));
        }
        Ok(model)
    }
}

fn collect_words(docs: &[BowDoc], vocab_size: usize) -> Result<Vec<Vec<u32>>, LdaError> {
    if vocab_size == 0 {
        return Err(LdaError::EmptyVocabulary);
    }
    let words: Vec<Vec<u32>> = docs.iter().map(BowDoc::expand).collect();
    for (d, ws) in words.iter().enumerate() {
        if let Some(&word) = ws.iter().find(|&&w| w as usize >= vocab_size) {
            return Err(LdaError::WordOutOfRange {
                doc: d,
                word,
                vocab_size,
            });
        }
    }
    if words.iter().all(Vec::is_empty) {
        return Err(LdaError::EmptyCorpus);
    }
    Ok(words)
}

/// Configures one Gibbs run. [`train_lda`] is `LdaTrainer::new(hyper)`
/// with all defaults.
#[derive(Debug, Clone)]
pub struct LdaTrainer {
    hyper: LdaHyperparams,
    stream: u64,
    word_prior: Option<Matrix>,
    warm_start: Option<Matrix>,
}

impl LdaTrainer {
    pub fn new(hyper: LdaHyperparams) -> Self {
        LdaTrainer {
            hyper,
            stream: 0,
            word_prior: None,
            warm_start: None,
        }
    }

    /// Selects the generator stream for this run.
    pub fn stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    /// Replaces the symmetric `eta` with per-topic, per-word pseudo-counts
    /// (K x V, all positive).
    pub fn word_prior(mut self, prior: Matrix) -> Self {
        self.word_prior = Some(prior);
        self
    }

    /// Initializes each token's topic by sampling `k ∝ topics[k][w]`
    /// instead of uniformly.
    pub fn warm_start(mut self, topics: Matrix) -> Self {
        self.warm_start = Some(topics);
        self
    }

    pub fn train(&self, docs: &[BowDoc], vocab_size: usize) -> Result<LdaModel, LdaError> {
        self.train_observed(docs, vocab_size, |_, _| {})
    }

    /// Like [`LdaTrainer::train`], calling `observer(sweep, state)` after
    /// every sweep (1-based). Sweep 0 is the initial assignment.
    pub fn train_observed(
        &self,
        docs: &[BowDoc],
        vocab_size: usize,
        mut observer: impl FnMut(usize, &GibbsState),
    ) -> Result<LdaModel, LdaError> {
        let hyper = &self.hyper;
        hyper.validate()?;
        let words = collect_words(docs, vocab_size)?;
        let (k_count, v) = (hyper.topics, vocab_size);

        let (prior, prior_totals) = match &self.word_prior {
            Some(p) => {
                if p.rows() != k_count || p.cols() != v {
                    return Err(LdaError::Shape("word prior must be K x V".into()));
                }
                if p.as_slice().iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(LdaError::InvalidHyperparams(
                        "word prior entries must be positive".into(),
                    ));
                }
                let totals = p.iter_rows().map(|r| r.iter().sum()).collect();
                (p.clone(), totals)
            }
            None => (
                Matrix::filled(k_count, v, hyper.eta),
                vec![hyper.eta * v as f64; k_count],
            ),
        };
        if let Some(w) = &self.warm_start {
            if w.rows() != k_count || w.cols() != v {
                return Err(LdaError::Shape("warm start topics must be K x V".into()));
            }
        }

        let mut rng = sampler_rng(hyper.seed, self.stream);
        let mut probs = vec![0.0f64; k_count];
        let assignments: Vec<Vec<u32>> = words
            .iter()
            .map(|ws| {
                ws.iter()
                    .map(|&w| match &self.warm_start {
                        Some(topics) => {
                            for (k, p) in probs.iter_mut().enumerate() {
                                *p = topics.get(k, w as usize);
                            }
                            draw(&mut rng, &probs)
                        }
                        None => rng.random_range(0..k_count as u32),
                    })
                    .collect()
            })
            .collect();
        let mut state = GibbsState::from_assignments(k_count, v, words, assignments);
        observer(0, &state);

        let mut beta_acc = Matrix::zeros(k_count, v);
        let mut theta_acc = Matrix::zeros(state.words.len(), k_count);
        let mut retained = 0usize;
        let alpha = hyper.alpha;
        let prior = prior.as_slice();

        for sweep in 1..=hyper.iterations {
            for d in 0..state.words.len() {
                let dk = &mut state.n_dk[d * k_count..(d + 1) * k_count];
                for n in 0..state.words[d].len() {
                    let w = state.words[d][n] as usize;
                    let old = state.assignments[d][n] as usize;
                    dk[old] -= 1;
                    state.n_kw[old * v + w] -= 1;
                    state.n_k[old] -= 1;

                    for k in 0..k_count {
                        probs[k] = (dk[k] as f64 + alpha)
                            * (state.n_kw[k * v + w] as f64 + prior[k * v + w])
                            / (state.n_k[k] as f64 + prior_totals[k]);
                    }
                    let new = draw(&mut rng, &probs) as usize;

                    dk[new] += 1;
                    state.n_kw[new * v + w] += 1;
                    state.n_k[new] += 1;
                    state.assignments[d][n] = new as u32;
                }
            }
            observer(sweep, &state);

            if hyper.is_retained(sweep) {
                retained += 1;
                for k in 0..k_count {
                    let denom = state.n_k[k] as f64 + prior_totals[k];
                    let row = beta_acc.row_mut(k);
                    for (w, acc) in row.iter_mut().enumerate() {
                        *acc += (state.n_kw[k * v + w] as f64 + prior[k * v + w]) / denom;
                    }
                }
                let k_alpha = k_count as f64 * alpha;
                for d in 0..state.words.len() {
                    let denom = state.words[d].len() as f64 + k_alpha;
                    let row = theta_acc.row_mut(d);
                    for (k, acc) in row.iter_mut().enumerate() {
                        *acc += (state.n_dk[d * k_count + k] as f64 + alpha) / denom;
                    }
                }
            }
        }

        let scale = 1.0 / retained as f64;
        beta_acc.as_mut_slice().iter_mut().for_each(|x| *x *= scale);
        theta_acc.as_mut_slice().iter_mut().for_each(|x| *x *= scale);
        Ok(LdaModel {
            hyper: hyper.clone(),
            vocab_size: v,
            beta: beta_acc,
            theta: theta_acc,
            doc_lengths: state.words.iter().map(Vec::len).collect(),
            retained_samples: retained,
            state: Some(state),
        })
    }
}

/// Index drawn with probability proportional to `weights`.
fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> u32 {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &p) in weights.iter().enumerate() {
        if u < p {
            return k as u32;
        }
        u -= p;
    }
    // Rounding left u at or past the final bucket.
    (weights.len() - 1) as u32
}

/// Collapsed Gibbs LDA with uniform initialization on stream 0.
pub fn train_lda(
    docs: &[BowDoc],
    vocab_size: usize,
    hyper: &LdaHyperparams,
) -> Result<LdaModel, LdaError> {
    LdaTrainer::new(hyper.clone()).train(docs, vocab_size)
}

/// Independent chains, one per seed, trained on separate threads.
pub fn train_chains(
    docs: &[BowDoc],
    vocab_size: usize,
    hyper: &LdaHyperparams,
    seeds: &[u64],
) -> Vec<Result<LdaModel, LdaError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let hyper = hyper.clone().with_seed(seed);
                scope.spawn(move || train_lda(docs, vocab_size, &hyper))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    })
}

/// Topic proportions of an unseen document with `beta` held fixed.
/// Averages over the second half of `sweeps`; an empty document (or zero
/// sweeps) gives the uniform vector.
pub fn infer_theta(model: &LdaModel, doc: &BowDoc, sweeps: usize, seed: u64) -> Result<Vec<f64>, LdaError> {
    let k_count = model.topics();
    let words = doc.expand();
    if let Some(&word) = words.iter().find(|&&w| w as usize >= model.vocab_size) {
        return Err(LdaError::WordOutOfRange {
            doc: 0,
            word,
            vocab_size: model.vocab_size,
        });
    }
    if words.is_empty() || sweeps == 0 {
        return Ok(vec![1.0 / k_count as f64; k_count]);
    }
    let alpha = model.hyper.alpha;
    let mut rng = sampler_rng(seed, 0);
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| rng.random_range(0..k_count))
        .collect();
    let mut n_dk = vec![0u32; k_count];
    for &k in &z {
        n_dk[k] += 1;
    }
    let mut probs = vec![0.0; k_count];
    let mut acc = vec![0.0; k_count];
    let first_kept = sweeps / 2 + 1;
    let denom = words.len() as f64 + k_count as f64 * alpha;
    for sweep in 1..=sweeps {
        for (n, &w) in words.iter().enumerate() {
            n_dk[z[n]] -= 1;
            for k in 0..k_count {
                probs[k] = (n_dk[k] as f64 + alpha) * model.beta.get(k, w as usize);
            }
            z[n] = draw(&mut rng, &probs) as usize;
            n_dk[z[n]] += 1;
        }
        if sweep >= first_kept {
            for k in 0..k_count {
                acc[k] += (n_dk[k] as f64 + alpha) / denom;
            }
        }
    }
    let kept = (sweeps - first_kept + 1) as f64;
    Ok(acc.into_iter().map(|x| x / kept).collect())
}

/// Highest-probability terms of one topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic_id: usize,
    /// `(word id, probability)`, descending probability.
    pub terms: Vec<(u32, f64)>,
}

impl TopicSummary {
    pub fn word_ids(&self) -> Vec<u32> {
        self.terms.iter().map(|&(w, _)| w).collect()
    }

    /// Terms labeled through `vocab`; unknown ids render as `#id`.
    pub fn labeled(&self, vocab: &crate::preprocess::Vocabulary) -> Vec<(String, f64)> {
        self.terms
            .iter()
            .map(|&(w, p)| {
                (
                    vocab.token(w).map_or_else(|| format!("#{w}"), str::to_string),
                    p,
                )
            })
            .collect()
    }
}

/// The `n` largest entries of a distribution, ties by ascending index.
pub fn top_terms(row: &[f64], n: usize) -> Vec<(u32, f64)> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx.into_iter().map(|i| (i as u32, row[i])).collect()
}

/// `n` is capped at the vocabulary size.
pub fn top_words(model: &LdaModel, topic_id: usize, n: usize) -> Result<TopicSummary, LdaError> {
    if topic_id >= model.topics() {
        return Err(LdaError::TopicOutOfRange {
            topic: topic_id,
            topics: model.topics(),
        });
    }
    Ok(TopicSummary {
        topic_id,
        terms: top_terms(model.beta.row(topic_id), n),
    })
}

/// `exp(-sum log p(w | d) / N)` over the training documents, with
/// `p(w | d) = sum_k theta[d][k] beta[k][w]`.
pub fn perplexity(model: &LdaModel, docs: &[BowDoc]) -> Result<f64, LdaError> {
    if docs.len() != model.num_docs() {
        return Err(LdaError::Shape(format!(
            "model has theta for {} documents, got {}",
            model.num_docs(),
            docs.len()
        )));
    }
    let thetas: Vec<&[f64]> = model.theta.iter_rows().collect();
    perplexity_with(model, docs, &thetas)
}

/// Perplexity of unseen documents, with each `theta` from [`infer_theta`].
pub fn heldout_perplexity(model: &LdaModel, docs: &[BowDoc], sweeps: usize, seed: u64) -> Result<f64, LdaError> {
    let thetas = docs
        .iter()
        .map(|d| infer_theta(model, d, sweeps, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&[f64]> = thetas.iter().map(Vec::as_slice).collect();
    perplexity_with(model, docs, &refs)
}

fn perplexity_with(model: &LdaModel, docs: &[BowDoc], thetas: &[&[f64]]) -> Result<f64, LdaError> {
    let mut log_lik = 0.0;
    let mut tokens = 0usize;
    for (d, (doc, theta)) in docs.iter().zip(thetas).enumerate() {
        for (&w, &count) in &doc.counts {
            if w as usize >= model.vocab_size {
                return Err(LdaError::WordOutOfRange {
                    doc: d,
                    word: w,
                    vocab_size: model.vocab_size,
                });
            }
            let p: f64 = (0..model.topics())
                .map(|k| theta[k] * model.beta.get(k, w as usize))
                .sum();
            log_lik += count as f64 * p.ln();
            tokens += count as usize;
        }
    }
    if tokens == 0 {
        return Err(LdaError::EmptyCorpus);
    }
    Ok((-log_lik / tokens as f64).exp())
}
