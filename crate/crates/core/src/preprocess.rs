//! Text to bag-of-words: tokenization, stopword removal, bigram phrase
//! detection and a document-frequency filtered vocabulary.
//!
//! The fixed pipeline order is tokenize, stopwords, phrases, vocabulary,
//! then bag-of-words encoding. Lemmatization is expected upstream; already
//! lemmatized text passes through unchanged.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("cannot fit phrases on an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary is empty after filtering (no_below={no_below}, no_above={no_above})")]
    EmptyVocabulary { no_below: usize, no_above: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed vocabulary: {0}")]
    MalformedVocabulary(String),
}

/// Lowercase tokens of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

impl TokenStream {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenStream {
            doc_id: doc_id.into(),
            tokens,
        }
    }
}

/// Splits on anything that is not a letter or digit, lowercasing. A hyphen
/// survives only between two alphanumeric characters ("covid-19").
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if c == '-'
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push('-');
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// A set of lowercase tokens to drop.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist(HashSet<String>);

const SWEDISH_STOPWORDS: &str = include_str!("../data/stopwords_sv.txt");

impl Stoplist {
    /// One token per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Self {
        Stoplist(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn swedish() -> Self {
        Self::parse(SWEDISH_STOPWORDS)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stoplist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stoplist(iter.into_iter().map(Into::into).collect())
    }
}

pub fn remove_stopwords(tokens: &[String], stoplist: &Stoplist) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t))
        .cloned()
        .collect()
}

/// Unigram and adjacent-bigram counts with the scoring thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseModel {
    pub unigram_counts: HashMap<String, usize>,
    pub bigram_counts: HashMap<(String, String), usize>,
    pub total_tokens: usize,
    pub min_count: usize,
    pub threshold: f64,
}

impl PhraseModel {
    /// `(count(ab) - min_count) * total_tokens / (count(a) * count(b))`, or
    /// `None` for a pair never observed adjacent.
    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        let ab = *self
            .bigram_counts
            .get(&(a.to_string(), b.to_string()))
            .filter(|&&c| c > 0)?;
        let ca = self.unigram_counts[a] as f64;
        let cb = self.unigram_counts[b] as f64;
        Some((ab as f64 - self.min_count as f64) * self.total_tokens as f64 / (ca * cb))
    }

    pub fn qualifies(&self, a: &str, b: &str) -> bool {
        self.score(a, b).is_some_and(|s| s >= self.threshold)
    }
}

pub fn fit_phrases(
    streams: &[TokenStream],
    min_count: usize,
    threshold: f64,
) -> Result<PhraseModel, PreprocessError> {
    if min_count < 1 {
        return Err(PreprocessError::InvalidParameter("min_count must be >= 1".into()));
    }
    let total_tokens: usize = streams.iter().map(|s| s.tokens.len()).sum();
    if total_tokens == 0 {
        return Err(PreprocessError::EmptyCorpus);
    }
    let mut unigram_counts: HashMap<String, usize> = HashMap::new();
    let mut bigram_counts: HashMap<(String, String), usize> = HashMap::new();
    for stream in streams {
        for t in &stream.tokens {
            *unigram_counts.entry(t.clone()).or_default() += 1;
        }
        for pair in stream.tokens.windows(2) {
            *bigram_counts
                .entry((pair[0].clone(), pair[1].clone()))
                .or_default() += 1;
        }
    }
    Ok(PhraseModel {
        unigram_counts,
        bigram_counts,
        total_tokens,
        min_count,
        threshold,
    })
}

/// Single greedy left-to-right pass joining qualifying pairs as `a_b`.
pub fn apply_phrases(model: &PhraseModel, tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if i + 1 < tokens.len() && model.qualifies(&tokens[i], &tokens[i + 1]) {
            out.push(format!("{}_{}", tokens[i], tokens[i + 1]));
            i += 2;
        } else {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

/// Dense token ids in first-appearance order, filtered by document
/// frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    document_frequency: Vec<usize>,
    num_docs: usize,
    pub no_below: usize,
    pub no_above: f64,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    no_below: usize,
    no_above: f64,
    num_docs: usize,
    token_to_id: BTreeMap<String, u32>,
    document_frequency: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn document_frequency(&self, id: u32) -> usize {
        self.document_frequency[id as usize]
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn to_json(&self) -> String {
        let file = VocabularyFile {
            no_below: self.no_below,
            no_above: self.no_above,
            num_docs: self.num_docs,
            token_to_id: self
                .token_to_id
                .iter()
                .map(|(t, &i)| (t.clone(), i))
                .collect(),
            document_frequency: self
                .id_to_token
                .iter()
                .zip(&self.document_frequency)
                .map(|(t, &df)| (t.clone(), df))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PreprocessError> {
        let bad = |m: String| PreprocessError::MalformedVocabulary(m);
        let file: VocabularyFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let n = file.token_to_id.len();
        let mut id_to_token = vec![String::new(); n];
        let mut document_frequency = vec![0; n];
        for (token, &id) in &file.token_to_id {
            let slot = id_to_token
                .get_mut(id as usize)
                .ok_or_else(|| bad(format!("id {id} out of range")))?;
            if !slot.is_empty() {
                return Err(bad(format!("id {id} assigned twice")));
            }
            *slot = token.clone();
            document_frequency[id as usize] = *file
                .document_frequency
                .get(token)
                .ok_or_else(|| bad(format!("no document frequency for {token:?}")))?;
        }
        Ok(Vocabulary {
            token_to_id: file.token_to_id.into_iter().collect(),
            id_to_token,
            document_frequency,
            num_docs: file.num_docs,
            no_below: file.no_below,
            no_above: file.no_above,
        })
    }
}

/// Keeps tokens with `no_below <= df` and `df / D <= no_above`.
pub fn build_vocabulary(
    streams: &[TokenStream],
    no_below: usize,
    no_above: f64,
) -> Result<Vocabulary, PreprocessError> {
    if no_below < 1 {
        return Err(PreprocessError::InvalidParameter("no_below must be >= 1".into()));
    }
    if !(no_above > 0.0 && no_above <= 1.0) {
        return Err(PreprocessError::InvalidParameter(format!(
            "no_above must lie in (0, 1], got {no_above}"
        )));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for stream in streams {
        let mut in_doc: HashSet<&str> = HashSet::new();
        for t in &stream.tokens {
            if in_doc.insert(t) {
                let e = df.entry(t).or_insert_with(|| {
                    order.push(t);
                    0
                });
                *e += 1;
            }
        }
    }
    let num_docs = streams.len();
    let mut vocab = Vocabulary {
        token_to_id: HashMap::new(),
        id_to_token: Vec::new(),
        document_frequency: Vec::new(),
        num_docs,
        no_below,
        no_above,
    };
    for t in order {
        let f = df[t];
        if f >= no_below && f as f64 / num_docs as f64 <= no_above {
            vocab.token_to_id.insert(t.to_string(), vocab.id_to_token.len() as u32);
            vocab.id_to_token.push(t.to_string());
            vocab.document_frequency.push(f);
        }
    }
    if vocab.is_empty() {
        return Err(PreprocessError::EmptyVocabulary { no_below, no_above });
    }
    Ok(vocab)
}

/// Sparse word counts of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowDoc {
    pub doc_id: String,
    pub counts: BTreeMap<u32, u32>,
}

impl BowDoc {
    pub fn new(doc_id: impl Into<String>, counts: impl IntoIterator<Item = (u32, u32)>) -> Self {
        BowDoc {
            doc_id: doc_id.into(),
            counts: counts.into_iter().filter(|&(_, c)| c > 0).collect(),
        }
    }

    /// Builds a document from a word-id sequence.
    pub fn from_word_ids(doc_id: impl Into<String>, words: &[u32]) -> Self {
        let mut counts = BTreeMap::new();
        for &w in words {
            *counts.entry(w).or_insert(0) += 1;
        }
        BowDoc {
            doc_id: doc_id.into(),
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.values().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Token sequence with each word id repeated by its count, ascending ids.
    pub fn expand(&self) -> Vec<u32> {
        self.counts
            .iter()
            .flat_map(|(&w, &c)| std::iter::repeat_n(w, c as usize))
            .collect()
    }
}

/// Out-of-vocabulary tokens are dropped.
pub fn to_bow(stream: &TokenStream, vocab: &Vocabulary) -> BowDoc {
    let mut counts = BTreeMap::new();
    for t in &stream.tokens {
        if let Some(id) = vocab.id(t) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    BowDoc {
        doc_id: stream.doc_id.clone(),
        counts,
    }
}

/// Thresholds for the full preprocessing pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub min_count: usize,
    pub threshold: f64,
    pub no_below: usize,
    pub no_above: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_count: 5,
            threshold: 10.0,
            no_below: 2,
            no_above: 0.5,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.min_count < 1 {
            return Err(PreprocessError::InvalidParameter("min_count must be >= 1".into()));
        }
        if !self.threshold.is_finite() {
            return Err(PreprocessError::InvalidParameter("threshold must be finite".into()));
        }
        if self.no_below < 1 {
            return Err(PreprocessError::InvalidParameter("no_below must be >= 1".into()));
        }
        if !(self.no_above > 0.0 && self.no_above <= 1.0) {
            return Err(PreprocessError::InvalidParameter(format!(
                "no_above must lie in (0, 1], got {}",
                self.no_above
            )));
        }
        Ok(())
    }
}

/// Result of [`preprocess`]: the vocabulary and one [`BowDoc`] per input.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub vocabulary: Vocabulary,
    pub docs: Vec<BowDoc>,
}

/// Runs the whole pipeline over `(doc_id, text)` pairs.
pub fn preprocess<'a>(
    texts: impl IntoIterator<Item = (&'a str, String)>,
    stoplist: &Stoplist,
    config: &PreprocessConfig,
) -> Result<Preprocessed, PreprocessError> {
    config.validate()?;
    let streams: Vec<TokenStream> = texts
        .into_iter()
        .map(|(id, text)| TokenStream::new(id, remove_stopwords(&tokenize(&text), stoplist)))
        .collect();
    let phrases = fit_phrases(&streams, config.min_count, config.threshold)?;
    let streams: Vec<TokenStream> = streams
        .into_iter()
        .map(|s| TokenStream::new(s.doc_id, apply_phrases(&phrases, &s.tokens)))
        .collect();
    let vocabulary = build_vocabulary(&streams, config.no_below, config.no_above)?;
    let docs = streams.iter().map(|s| to_bow(s, &vocabulary)).collect();
    Ok(Preprocessed { vocabulary, docs })
}

/// JSON Lines, one `{"doc_id":..,"counts":{id:count}}` per document.
pub fn bow_to_jsonl(docs: &[BowDoc]) -> String {
    let mut out = String::new();
    for d in docs {
        out.push_str(&serde_json::to_string(d).expect("bow serializes"));
        out.push('\n');
    }
    out
}

pub fn bow_from_jsonl(text: &str) -> Result<Vec<BowDoc>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("Folkhälsomyndigheten rekommenderar munskydd."),
            toks(&["folkhälsomyndigheten", "rekommenderar", "munskydd"])
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("covid-19 i Sverige"), toks(&["covid-19", "i", "sverige"]));
        assert_eq!(tokenize("2020 -- a- -b x-"), toks(&["2020", "a", "b", "x"]));
    }

    #[test]
    fn stopword_examples() {
        let stop: Stoplist = ["i"].into_iter().collect();
        assert_eq!(remove_stopwords(&toks(&["i", "sverige"]), &stop), toks(&["sverige"]));
        let t = toks(&["a", "b", "a"]);
        assert_eq!(remove_stopwords(&t, &Stoplist::default()), t);
        let och: Stoplist = ["och"].into_iter().collect();
        assert!(remove_stopwords(&toks(&["och", "och"]), &och).is_empty());
    }

    #[test]
    fn stoplist_file_format() {
        let s = Stoplist::parse("# header\nOch\n\n  i  # trailing\n");
        assert_eq!(s.len(), 2);
        assert!(s.contains("och") && s.contains("i"));
        assert!(Stoplist::swedish().contains("och"));
        assert!(!Stoplist::swedish().contains("#"));
    }

    fn tegnell_corpus() -> Vec<TokenStream> {
        // 10 tokens: "anders tegnell" 3x, each word 3x overall.
        vec![
            TokenStream::new("a", toks(&["anders", "tegnell", "sa", "anders", "tegnell"])),
            TokenStream::new("b", toks(&["idag", "anders", "tegnell", "om", "vaccin"])),
        ]
    }

    #[test]
    fn phrase_score_hand_evaluated() {
        let m = fit_phrases(&tegnell_corpus(), 1, 1.0).unwrap();
        assert_eq!(m.total_tokens, 10);
        let s = m.score("anders", "tegnell").unwrap();
        assert!((s - 2.0 * 10.0 / 9.0).abs() < 1e-12);
        assert!(m.qualifies("anders", "tegnell"));
        assert!(m.score("tegnell", "anders").is_none());
        assert!(m.score("vaccin", "anders").is_none());
    }

    #[test]
    fn bigram_at_min_count_scores_zero() {
        let streams = vec![TokenStream::new("a", toks(&["x", "y", "z"]))];
        let m = fit_phrases(&streams, 1, 0.5).unwrap();
        assert_eq!(m.score("x", "y"), Some(0.0));
        assert!(!m.qualifies("x", "y"));
        assert_eq!(apply_phrases(&m, &toks(&["x", "y"])), toks(&["x", "y"]));
    }

    #[test]
    fn fit_rejects_empty_and_bad_min_count() {
        assert_eq!(fit_phrases(&[], 1, 1.0), Err(PreprocessError::EmptyCorpus));
        let streams = tegnell_corpus();
        assert!(fit_phrases(&streams, 0, 1.0).is_err());
    }

    #[test]
    fn apply_merges_greedily() {
        let m = fit_phrases(&tegnell_corpus(), 1, 1.0).unwrap();
        assert_eq!(
            apply_phrases(&m, &toks(&["sa", "anders", "tegnell", "idag"])),
            toks(&["sa", "anders_tegnell", "idag"])
        );
        assert!(apply_phrases(&m, &[]).is_empty());
        let plain = toks(&["vaccin", "om"]);
        assert_eq!(apply_phrases(&m, &plain), plain);
    }

    #[test]
    fn merged_tokens_do_not_remerge() {
        // "a a a": (a,a) qualifies; the pass yields "a_a", "a".
        let streams = vec![TokenStream::new("d", toks(&["a", "a", "a", "a", "b", "c", "d", "e"]))];
        let m = fit_phrases(&streams, 1, 0.1).unwrap();
        assert!(m.qualifies("a", "a"));
        assert_eq!(apply_phrases(&m, &toks(&["a", "a", "a"])), toks(&["a_a", "a"]));
    }

    #[test]
    fn vocabulary_thresholds() {
        let streams = vec![
            TokenStream::new("1", toks(&["common", "rare", "shared"])),
            TokenStream::new("2", toks(&["common", "shared"])),
            TokenStream::new("3", toks(&["common", "other"])),
            TokenStream::new("4", toks(&["common", "other"])),
        ];
        let v = build_vocabulary(&streams, 2, 1.0).unwrap();
        assert_eq!(v.tokens(), toks(&["common", "shared", "other"]).as_slice());
        assert!(v.id("rare").is_none());

        let all = build_vocabulary(&streams, 1, 1.0).unwrap();
        assert_eq!(all.len(), 4);
        assert_eq!(all.id("rare"), Some(1));

        let capped = build_vocabulary(&streams, 1, 0.5).unwrap();
        assert!(capped.id("common").is_none());
        assert_eq!(capped.document_frequency(capped.id("shared").unwrap()), 2);

        assert!(matches!(
            build_vocabulary(&streams, 5, 1.0),
            Err(PreprocessError::EmptyVocabulary { .. })
        ));
        assert!(build_vocabulary(&streams, 1, 0.0).is_err());
        assert!(build_vocabulary(&streams, 0, 1.0).is_err());
    }

    #[test]
    fn bow_examples() {
        let streams = vec![TokenStream::new("1", toks(&["a", "b"]))];
        let v = build_vocabulary(&streams, 1, 1.0).unwrap();
        let bow = to_bow(&TokenStream::new("x", toks(&["a", "b", "a"])), &v);
        assert_eq!(bow.counts, BTreeMap::from([(0, 2), (1, 1)]));
        assert!(to_bow(&TokenStream::new("y", toks(&["zz", "qq"])), &v).is_empty());
        assert!(to_bow(&TokenStream::new("z", vec![]), &v).is_empty());
        assert_eq!(bow.expand(), vec![0, 0, 1]);
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let streams = vec![
            TokenStream::new("1", toks(&["ö", "b", "c"])),
            TokenStream::new("2", toks(&["c", "ö"])),
        ];
        let v = build_vocabulary(&streams, 1, 1.0).unwrap();
        let back = Vocabulary::from_json(&v.to_json()).unwrap();
        assert_eq!(back, v);
        assert!(Vocabulary::from_json("{}").is_err());
    }

    #[test]
    fn pipeline_is_deterministic() {
        let texts = || {
            vec![
                ("1", "Anders Tegnell och Folkhälsomyndigheten".to_string()),
                ("2", "Anders Tegnell om munskydd".to_string()),
                ("3", "Munskydd i kollektivtrafiken".to_string()),
            ]
        };
        let cfg = PreprocessConfig {
            min_count: 1,
            threshold: 0.5,
            no_below: 1,
            no_above: 1.0,
        };
        let a = preprocess(texts(), &Stoplist::swedish(), &cfg).unwrap();
        let b = preprocess(texts(), &Stoplist::swedish(), &cfg).unwrap();
        assert_eq!(a.vocabulary.to_json(), b.vocabulary.to_json());
        assert_eq!(bow_to_jsonl(&a.docs), bow_to_jsonl(&b.docs));
        assert!(a.vocabulary.id("anders_tegnell").is_some());
        assert!(a.vocabulary.id("och").is_none());
        assert_eq!(bow_from_jsonl(&bow_to_jsonl(&a.docs)).unwrap(), a.docs);
    }

    proptest! {
        #[test]
        fn tokens_have_no_whitespace(text in "\\PC{0,60}") {
            for t in tokenize(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn phrases_never_lengthen(words in proptest::collection::vec("[abc]", 0..30)) {
            let stream = TokenStream::new("d", words.clone());
            if let Ok(m) = fit_phrases(&[stream], 1, 0.0) {
                let out = apply_phrases(&m, &words);
                prop_assert!(out.len() <= words.len());
                // Splitting merged tokens restores the input order.
                let flat: Vec<String> = out.iter().flat_map(|t| t.split('_').map(String::from)).collect();
                prop_assert_eq!(flat, words);
            }
        }

        #[test]
        fn bow_conserves_in_vocab_tokens(words in proptest::collection::vec("[a-e]", 1..40)) {
            let stream = TokenStream::new("d", words.clone());
            let vocab = build_vocabulary(std::slice::from_ref(&stream), 1, 1.0).unwrap();
            for t in vocab.tokens() {
                prop_assert_eq!(vocab.token(vocab.id(t).unwrap()), Some(t.as_str()));
            }
            prop_assert_eq!(to_bow(&stream, &vocab).len(), words.len());
        }
    }
}
