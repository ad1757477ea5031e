use std::collections::BTreeSet;

use chrono::NaiveDate;
use newstopics::dtm::{top_words_at, train_dtm, trajectory, DtmModel};
use newstopics::lda::{train_lda, LdaHyperparams, LdaTrainer};
use newstopics::preprocess::{build_vocabulary, TokenStream};
use newstopics::synthetic::{planted_drift_corpus, DriftCorpus};
use newstopics::{BowDoc, TimeSlice, Vocabulary};

fn hyper(seed: u64) -> LdaHyperparams {
    LdaHyperparams {
        topics: 2,
        alpha: 0.1,
        eta: 0.01,
        iterations: 300,
        burn_in: 100,
        thin: 10,
        seed,
    }
}

fn slices(n: usize) -> Vec<TimeSlice> {
    (0..n)
        .map(|i| TimeSlice {
            index: i,
            start: NaiveDate::from_ymd_opt(2020, 1 + i as u32, 17).unwrap(),
            end: NaiveDate::from_ymd_opt(2020, 2 + i as u32, 17).unwrap(),
            doc_ids: Vec::new(),
        })
        .collect()
}

fn sliced(corpus: &DriftCorpus) -> Vec<(TimeSlice, Vec<BowDoc>)> {
    slices(corpus.slices.len()).into_iter().zip(corpus.slices.clone()).collect()
}

/// Vocabulary whose token for word id `i` is `w{i}`.
fn numbered_vocab(n: usize) -> Vocabulary {
    let tokens = (0..n).map(|i| format!("w{i}")).collect();
    build_vocabulary(&[TokenStream::new("all", tokens)], 1, 1.0).unwrap()
}

fn top5(model: &DtmModel, k: usize, t: usize) -> BTreeSet<u32> {
    top_words_at(model, k, t, 5).unwrap().word_ids().into_iter().collect()
}

/// Learned topic at slice `t` whose top words contain word 0 (planted
/// topic 0 keeps words 0..=3 in both slices).
fn planted_zero_topic(model: &DtmModel, t: usize) -> usize {
    (0..model.topics()).find(|&k| top5(model, k, t).contains(&0)).unwrap()
}

#[test]
fn kappa_zero_is_independent_per_slice_lda() {
    let corpus = planted_drift_corpus(40, 30, 8);
    let model = train_dtm(&sliced(&corpus), 2, &hyper(5), 0.0, corpus.vocab_size).unwrap();
    for (t, docs) in corpus.slices.iter().enumerate() {
        let alone = LdaTrainer::new(hyper(5)).stream(t as u64).train(docs, corpus.vocab_size).unwrap();
        assert_eq!(model.beta[t], alone.beta, "slice {t}");
        assert_eq!(model.theta[t], alone.theta, "slice {t}");
    }
}

#[test]
fn single_slice_equals_static_lda() {
    let corpus = planted_drift_corpus(40, 30, 9);
    let one = vec![(slices(1).remove(0), corpus.slices[0].clone())];
    for kappa in [0.0, 1.0] {
        let model = train_dtm(&one, 2, &hyper(6), kappa, corpus.vocab_size).unwrap();
        let plain = train_lda(&corpus.slices[0], corpus.vocab_size, &hyper(6)).unwrap();
        assert_eq!(model.beta[0], plain.beta);
    }
}

#[test]
fn chained_topic_keeps_identity_and_tracks_drift() {
    let corpus = planted_drift_corpus(60, 40, 10);
    let vocab = numbered_vocab(corpus.vocab_size);
    let (w_in, w_out) = (format!("w{}", corpus.drift_in), format!("w{}", corpus.drift_out));
    for seed in 0..5 {
        let model = train_dtm(&sliced(&corpus), 2, &hyper(seed), 1.0, corpus.vocab_size).unwrap();
        let k = planted_zero_topic(&model, 0);
        assert_eq!(planted_zero_topic(&model, 1), k, "seed {seed}: chain lost topic identity");
        assert_eq!(top5(&model, k, 0), BTreeSet::from([0, 1, 2, 3, 4]));
        assert_eq!(top5(&model, k, 1), BTreeSet::from([0, 1, 2, 3, 5]));

        let tr = trajectory(&model, k, &[&w_in, &w_out], &vocab).unwrap();
        let rise = tr.get(&w_in).unwrap();
        let fall = tr.get(&w_out).unwrap();
        assert!(rise[1] - rise[0] > 0.0, "seed {seed}: {rise:?}");
        assert!(fall[1] - fall[0] < 0.0, "seed {seed}: {fall:?}");
        for values in &tr.series {
            assert!(values.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}

#[test]
fn independent_slices_track_drift_after_alignment() {
    let corpus = planted_drift_corpus(60, 40, 10);
    let (w_in, w_out) = (corpus.drift_in as usize, corpus.drift_out as usize);
    for seed in 0..5 {
        let model = train_dtm(&sliced(&corpus), 2, &hyper(seed), 0.0, corpus.vocab_size).unwrap();
        let (k0, k1) = (planted_zero_topic(&model, 0), planted_zero_topic(&model, 1));
        assert!(model.beta[1].get(k1, w_in) > model.beta[0].get(k0, w_in));
        assert!(model.beta[1].get(k1, w_out) < model.beta[0].get(k0, w_out));
    }
}

#[test]
fn stronger_chain_smooths_consecutive_topics() {
    let corpus = planted_drift_corpus(60, 40, 12);
    let seeds = 0..6u64;
    let mut mean_tv = [0.0f64; 3];
    for seed in seeds.clone() {
        let tv: Vec<f64> = [0.0, 1.0, 10.0]
            .iter()
            .map(|&kappa| {
                train_dtm(&sliced(&corpus), 2, &hyper(seed), kappa, corpus.vocab_size)
                    .unwrap()
                    .mean_consecutive_tv()
            })
            .collect();
        for (acc, v) in mean_tv.iter_mut().zip(&tv) {
            *acc += v / seeds.clone().count() as f64;
        }
    }
    assert!(mean_tv[0] >= mean_tv[1] && mean_tv[1] >= mean_tv[2], "{mean_tv:?}");
}

#[test]
fn rows_are_distributions_everywhere() {
    let corpus = planted_drift_corpus(30, 20, 13);
    let model = train_dtm(&sliced(&corpus), 2, &hyper(1), 1.0, corpus.vocab_size).unwrap();
    assert_eq!(model.num_slices(), 2);
    for b in &model.beta {
        assert!(b.max_row_sum_error() < 1e-9);
    }
    for t in &model.theta {
        assert!(t.max_row_sum_error() < 1e-9);
    }
}
