//! The five pipeline subcommands. Each reads only persisted artifacts (plus
//! the raw corpus and stoplist for the first two) and records what it wrote.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use anyhow::{bail, Context};
use newstopics::corpus::{articles_per_day, filter_by_category, load_corpus, parse_timeline_csv, slice_monthly, timeline_csv};
use newstopics::dtm::{parse_trajectories_csv, top_words_at, train_dtm, trajectories_csv, trajectory};
use newstopics::eval::{intertopic_map, topic_overlap, umass_coherence};
use newstopics::lda::{top_words, train_lda};
use newstopics::preprocess::{bow_from_jsonl, bow_to_jsonl, preprocess};
use newstopics::viz::{render_intertopic, render_timeline, render_trajectories};
use newstopics::{
    BowDoc, Corpus, DtmModel, FigureSpec, IntertopicMap, LdaModel, Slicing, Stoplist, TrajectorySeries, Vocabulary,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::workspace::{sha256_hex, Workspace};

type Inputs = BTreeMap<String, String>;

fn inputs(ws: &Workspace, names: &[&str]) -> anyhow::Result<Inputs> {
    names.iter().map(|n| Ok((n.to_string(), ws.hash_of(n)?))).collect()
}

fn pretty<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Corpus statistics written by `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub loaded: usize,
    pub origin_date: String,
    pub end_date: String,
    pub days: usize,
    pub categories: Vec<String>,
    pub after_category_filter: usize,
    pub window_start: String,
    pub window_end: String,
    pub retained: usize,
    pub excluded: usize,
    pub slice_counts: Vec<SliceCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceCount {
    pub start: String,
    pub documents: usize,
}

pub fn ingest(ws: &mut Workspace, cfg: &RunConfig) -> anyhow::Result<IngestStats> {
    let c = &cfg.corpus;
    let path = c.path.as_ref().context("no corpus path configured")?;
    let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let corpus = load_corpus(path)?;
    let loaded = corpus.len();
    log::info!("{loaded} loaded from {}", path.display());

    let timeline = articles_per_day(&corpus)?;
    let filtered = filter_by_category(&corpus, &c.categories);
    let slicing = slice_monthly(&filtered, c.anchor_day, c.first_start, c.n_slices)?;
    let (start, end) = slicing.span();
    let retained = filtered.restrict_to(start, end);
    log::info!(
        "{} retained ({} in categories {:?}, window {start}..{end})",
        retained.len(),
        filtered.len(),
        c.categories
    );

    let stats = IngestStats {
        loaded,
        origin_date: corpus.origin_date().map(|d| d.to_string()).unwrap_or_default(),
        end_date: corpus.end_date().map(|d| d.to_string()).unwrap_or_default(),
        days: timeline.len(),
        categories: c.categories.clone(),
        after_category_filter: filtered.len(),
        window_start: start.to_string(),
        window_end: end.to_string(),
        retained: retained.len(),
        excluded: slicing.excluded.len(),
        slice_counts: slicing
            .slices
            .iter()
            .map(|s| SliceCount {
                start: s.label(),
                documents: s.doc_ids.len(),
            })
            .collect(),
    };

    let source: Inputs = [("external:corpus".to_string(), sha256_hex(&raw))].into();
    let params = json!({
        "categories": c.categories,
        "anchor_day": c.anchor_day,
        "first_start": c.first_start,
        "n_slices": c.n_slices,
    });
    ws.write("corpus.jsonl", retained.to_jsonl().as_bytes(), "ingest", source.clone(), params.clone())?;
    ws.write("timeline.csv", timeline_csv(&timeline).as_bytes(), "ingest", source.clone(), json!({}))?;
    ws.write("slices.json", &pretty(&slicing)?, "ingest", source.clone(), params.clone())?;
    ws.write("stats.json", &pretty(&stats)?, "ingest", source, params)?;
    Ok(stats)
}

fn read_corpus(ws: &Workspace) -> anyhow::Result<Corpus> {
    let text = ws.read_string("corpus.jsonl")?;
    let docs = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            newstopics::corpus::parse_record(l).map_err(|e| anyhow::anyhow!("corpus.jsonl line {}: {e}", i + 1))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(Corpus::from_documents(docs)?)
}

pub fn run_preprocess(ws: &mut Workspace, cfg: &RunConfig) -> anyhow::Result<(usize, usize)> {
    let p = &cfg.preprocess;
    let corpus = read_corpus(ws)?;
    let mut ins = inputs(ws, &["corpus.jsonl"])?;
    let stoplist = match &p.stoplist {
        Some(path) => {
            let raw = std::fs::read(path).with_context(|| format!("reading stoplist {}", path.display()))?;
            ins.insert("external:stoplist".into(), sha256_hex(&raw));
            Stoplist::parse(std::str::from_utf8(&raw).context("stoplist is not UTF-8")?)
        }
        None => Stoplist::swedish(),
    };
    let out = preprocess(
        corpus.documents().iter().map(|d| (d.id.as_str(), d.text())),
        &stoplist,
        &p.thresholds(),
    )?;
    let empty = out.docs.iter().filter(|d| d.is_empty()).count();
    log::info!(
        "vocabulary of {} types over {} documents ({empty} left empty)",
        out.vocabulary.len(),
        out.docs.len()
    );
    let params = serde_json::to_value(p.thresholds())?;
    ws.write("vocab.json", out.vocabulary.to_json().as_bytes(), "preprocess", ins.clone(), params.clone())?;
    ws.write("bow.jsonl", bow_to_jsonl(&out.docs).as_bytes(), "preprocess", ins, params)?;
    Ok((out.vocabulary.len(), out.docs.len()))
}

fn read_vocab(ws: &Workspace) -> anyhow::Result<Vocabulary> {
    Ok(Vocabulary::from_json(&ws.read_string("vocab.json")?)?)
}

fn read_bow(ws: &Workspace) -> anyhow::Result<Vec<BowDoc>> {
    bow_from_jsonl(&ws.read_string("bow.jsonl")?).context("parsing bow.jsonl")
}

pub fn lda_name(k: usize) -> String {
    format!("models/lda_k{k}.json")
}

pub fn dtm_name(k: usize) -> String {
    format!("models/dtm_k{k}.json")
}

#[derive(Debug, Serialize, Deserialize)]
struct TopicTable {
    topic: usize,
    terms: Vec<(String, f64)>,
}

pub fn train_static(ws: &mut Workspace, cfg: &RunConfig) -> anyhow::Result<Vec<usize>> {
    let vocab = read_vocab(ws)?;
    let docs = read_bow(ws)?;
    let ins = inputs(ws, &["vocab.json", "bow.jsonl"])?;
    let ks = cfg.train.static_topic_counts();
    let hypers: Vec<_> = ks.iter().map(|&k| cfg.train.hyper(k)).collect();
    log::info!("training static LDA for K in {ks:?} on {} documents", docs.len());

    let models: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = hypers
            .iter()
            .map(|h| {
                let (docs, v) = (&docs, vocab.len());
                scope.spawn(move || train_lda(docs, v, h))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });

    for (model, h) in models.into_iter().zip(&hypers) {
        let model = model.with_context(|| format!("training K={}", h.topics))?;
        let table = (0..model.topics())
            .map(|k| {
                Ok(TopicTable {
                    topic: k,
                    terms: top_words(&model, k, cfg.report.top_n)?.labeled(&vocab),
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let params = serde_json::to_value(h)?;
        ws.write(&lda_name(h.topics), model.to_json(false).as_bytes(), "train", ins.clone(), params.clone())?;
        ws.write(&format!("models/topics_k{}.json", h.topics), &pretty(&table)?, "train", ins.clone(), params)?;
    }
    Ok(ks)
}

pub fn train_dynamic(ws: &mut Workspace, cfg: &RunConfig) -> anyhow::Result<usize> {
    let vocab = read_vocab(ws)?;
    let docs = read_bow(ws)?;
    let slicing: Slicing = serde_json::from_str(&ws.read_string("slices.json")?).context("parsing slices.json")?;
    let ins = inputs(ws, &["vocab.json", "bow.jsonl", "slices.json"])?;

    let by_id: HashMap<&str, &BowDoc> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let sliced = slicing
        .slices
        .iter()
        .map(|s| {
            let docs = s
                .doc_ids
                .iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|d| (*d).clone())
                        .with_context(|| format!("document {id} of slice {} missing from bow.jsonl", s.label()))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            Ok((s.clone(), docs))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let k = cfg.train.topics;
    let hyper = cfg.train.hyper(k);
    log::info!("training chained DTM, K={k}, {} slices, kappa={}", sliced.len(), cfg.train.kappa);
    let model = train_dtm(&sliced, k, &hyper, cfg.train.kappa, vocab.len())?;
    let params = json!({ "hyper": hyper, "kappa": cfg.train.kappa });
    ws.write(&dtm_name(k), model.to_json().as_bytes(), "train", ins, params)?;
    Ok(model.num_slices())
}

/// What `report` exported, read back by `plot`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportIndex {
    pub static_topics: Vec<usize>,
    pub dtm_topics: Option<usize>,
    pub files: Vec<String>,
}

/// Per-topic tracked words: the configured list, or the union of each
/// topic's top `n` words at the first and last slice.
pub fn tracked_words(model: &DtmModel, vocab: &Vocabulary, fixed: &[String], n: usize) -> anyhow::Result<Vec<Vec<String>>> {
    let last = model.num_slices() - 1;
    (0..model.topics())
        .map(|k| {
            if !fixed.is_empty() {
                return Ok(fixed.to_vec());
            }
            let mut seen = BTreeSet::new();
            let mut words = Vec::new();
            for t in [0, last] {
                for (w, _) in top_words_at(model, k, t, n)?.labeled(vocab) {
                    if seen.insert(w.clone()) {
                        words.push(w);
                    }
                }
            }
            Ok(words)
        })
        .collect()
}

pub fn report(ws: &mut Workspace, cfg: &RunConfig) -> anyhow::Result<ReportIndex> {
    let top_n = cfg.report.top_n;
    let mut index = ReportIndex::default();
    let has_static: Vec<usize> = cfg
        .train
        .static_topic_counts()
        .into_iter()
        .filter(|&k| ws.contains(&lda_name(k)))
        .collect();
    let dtm = dtm_name(cfg.train.topics);
    if has_static.is_empty() && !ws.contains(&dtm) {
        bail!(
            "no trained model for K in {:?}; run `newstopics train --mode static` or `newstopics train --mode dtm` first",
            cfg.train.static_topic_counts()
        );
    }
    let vocab = read_vocab(ws)?;

    if !has_static.is_empty() {
        let docs = read_bow(ws)?;
        for k in has_static {
            let name = lda_name(k);
            let model = LdaModel::from_json(&ws.read_string(&name)?)?;
            let ins = inputs(ws, &[&name, "bow.jsonl"])?;
            let coherence = umass_coherence(&model, &docs, top_n)?;
            let overlap = topic_overlap(&model, top_n);
            let map = intertopic_map(&model)?;
            log::info!(
                "K={k}: mean UMass {:.4}, mean overlap {:.4}",
                coherence.mean,
                overlap.mean_off_diagonal()
            );
            let params = json!({ "top_n": top_n });
            for (file, bytes) in [
                (format!("reports/coherence_k{k}.json"), pretty(&coherence)?),
                (format!("reports/overlap_k{k}.json"), pretty(&overlap)?),
                (format!("reports/intertopic_k{k}.csv"), map.to_csv().into_bytes()),
            ] {
                ws.write(&file, &bytes, "report", ins.clone(), params.clone())?;
                index.files.push(file);
            }
            index.static_topics.push(k);
        }
    }

    if ws.contains(&dtm) {
        let model = DtmModel::from_json(&ws.read_string(&dtm)?)?;
        let ins = inputs(ws, &[&dtm, "vocab.json"])?;
        let words = tracked_words(&model, &vocab, &cfg.report.track_words, cfg.report.track_n)?;
        let series = words
            .iter()
            .enumerate()
            .map(|(k, w)| trajectory(&model, k, w, &vocab))
            .collect::<Result<Vec<_>, _>>()?;
        let per_slice = (0..model.topics())
            .map(|k| {
                (0..model.num_slices())
                    .map(|t| Ok(top_words_at(&model, k, t, top_n)?.labeled(&vocab)))
                    .collect::<anyhow::Result<Vec<_>>>()
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let params = json!({ "top_n": top_n, "track_words": cfg.report.track_words, "track_n": cfg.report.track_n });
        for (file, bytes) in [
            ("reports/trajectories.csv".to_string(), trajectories_csv(&series).into_bytes()),
            (format!("reports/dtm_topics_k{}.json", model.topics()), pretty(&per_slice)?),
        ] {
            ws.write(&file, &bytes, "report", ins.clone(), params.clone())?;
            index.files.push(file);
        }
        index.dtm_topics = Some(model.topics());
    }

    let ins = index
        .files
        .iter()
        .map(|f| Ok((f.clone(), ws.hash_of(f)?)))
        .collect::<anyhow::Result<Inputs>>()?;
    ws.write("reports/index.json", &pretty(&index)?, "report", ins, json!({}))?;
    Ok(index)
}

pub fn plot(ws: &mut Workspace, cfg: &RunConfig) -> anyhow::Result<Vec<String>> {
    let (w, h) = (cfg.plot.width, cfg.plot.height);
    let index: ReportIndex =
        serde_json::from_str(&ws.read_string("reports/index.json")?).context("parsing reports/index.json")?;
    let mut figures: Vec<(String, String, String)> = Vec::new();

    let timeline = parse_timeline_csv(&ws.read_string("timeline.csv")?)?;
    let spec = FigureSpec::new("Published articles per day", "figures/timeline.svg").with_size(w, h);
    figures.push(("figures/timeline.svg".into(), render_timeline(&timeline, &spec)?, "timeline.csv".into()));

    for &k in &index.static_topics {
        let src = format!("reports/intertopic_k{k}.csv");
        let map = IntertopicMap::from_csv(&ws.read_string(&src)?)?;
        let out = format!("figures/intertopic_k{k}.svg");
        let spec = FigureSpec::new(format!("Intertopic distance map, K = {k}"), &out).with_size(w, h);
        figures.push((out, render_intertopic(&map, &spec)?, src));
    }

    if index.dtm_topics.is_some() {
        let src = "reports/trajectories.csv".to_string();
        let all: Vec<TrajectorySeries> = parse_trajectories_csv(&ws.read_string(&src)?)?;
        for s in all.iter().filter(|s| !s.words.is_empty()) {
            let out = format!("figures/trajectories_topic{:02}.svg", s.topic_id);
            let spec = FigureSpec::new(format!("Topic {} keyword probability over time", s.topic_id), &out)
                .with_size(w, h);
            figures.push((out, render_trajectories(s, &spec)?, src.clone()));
        }
    }

    let params = serde_json::to_value(&cfg.plot)?;
    let mut written = Vec::new();
    for (out, svg, src) in figures {
        let ins = inputs(ws, &[&src])?;
        ws.write(&out, svg.as_bytes(), "plot", ins, params.clone())?;
        written.push(out);
    }
    Ok(written)
}
