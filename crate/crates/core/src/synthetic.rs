//! Synthetic corpora drawn from known topics, for recovery checks and
//! benchmarks.

use rand::Rng;

use crate::lda::sampler_rng;
use crate::preprocess::BowDoc;

/// Documents generated from planted topic supports.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub docs: Vec<BowDoc>,
    pub vocab_size: usize,
    /// Word ids of each planted topic; words are uniform within a support.
    pub supports: Vec<Vec<u32>>,
    /// Dominant planted topic of each document.
    pub dominant: Vec<usize>,
}

/// `n_docs` documents of `doc_len` tokens. Document `d` is dominated by
/// topic `d % supports.len()`: each token comes from it with probability
/// `purity`, otherwise from a uniformly chosen other topic.
pub fn planted_corpus(
    supports: &[Vec<u32>],
    n_docs: usize,
    doc_len: usize,
    purity: f64,
    seed: u64,
) -> PlantedCorpus {
    let n_topics = supports.len();
    assert!(n_topics >= 1 && supports.iter().all(|s| !s.is_empty()));
    let vocab_size = supports.iter().flatten().map(|&w| w as usize + 1).max().unwrap_or(0);
    let mut rng = sampler_rng(seed, u64::MAX);
    let mut docs = Vec::with_capacity(n_docs);
    let mut dominant = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let main = d % n_topics;
        let words: Vec<u32> = (0..doc_len)
            .map(|_| {
                let topic = if n_topics == 1 || rng.random::<f64>() < purity {
                    main
                } else {
                    let other = rng.random_range(0..n_topics - 1);
                    if other >= main { other + 1 } else { other }
                };
                let support = &supports[topic];
                support[rng.random_range(0..support.len())]
            })
            .collect();
        docs.push(BowDoc::from_word_ids(format!("doc{d}"), &words));
        dominant.push(main);
    }
    PlantedCorpus {
        docs,
        vocab_size,
        supports: supports.to_vec(),
        dominant,
    }
}

/// Two topics over eleven words in two time slices. Topic 0 uses words
/// 0..=4 in slice 0; in slice 1 word 4 leaves and word 5 enters its
/// support. Topic 1 uses words 6..=10 throughout.
#[derive(Debug, Clone)]
pub struct DriftCorpus {
    pub slices: Vec<Vec<BowDoc>>,
    pub vocab_size: usize,
    pub drift_in: u32,
    pub drift_out: u32,
    pub supports: Vec<Vec<Vec<u32>>>,
}

pub fn planted_drift_corpus(docs_per_slice: usize, doc_len: usize, seed: u64) -> DriftCorpus {
    let supports = vec![
        vec![vec![0, 1, 2, 3, 4], vec![6, 7, 8, 9, 10]],
        vec![vec![0, 1, 2, 3, 5], vec![6, 7, 8, 9, 10]],
    ];
    let slices = supports
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let mut planted = planted_corpus(s, docs_per_slice, doc_len, 0.9, seed.wrapping_add(t as u64));
            for (d, doc) in planted.docs.iter_mut().enumerate() {
                doc.doc_id = format!("s{t}d{d}");
            }
            planted.docs
        })
        .collect();
    DriftCorpus {
        slices,
        vocab_size: 11,
        drift_in: 5,
        drift_out: 4,
        supports,
    }
}
