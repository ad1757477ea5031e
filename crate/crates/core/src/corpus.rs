//! Dated, categorized article records: loading, category filtering,
//! month-anchored time slicing and per-day publication counts.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate document id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("corpus is empty")]
    Empty,
    #[error("invalid slice parameters: {0}")]
    InvalidSlicing(String),
}

/// One news article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub date: NaiveDate,
    pub category: String,
    pub title: String,
    pub body: String,
}

impl Document {
    /// Title and body joined by a blank line, the text fed to tokenization.
    pub fn text(&self) -> String {
        if self.body.is_empty() {
            self.title.clone()
        } else if self.title.is_empty() {
            self.body.clone()
        } else {
            format!("{}\n\n{}", self.title, self.body)
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.title.is_empty() && self.body.is_empty() {
            return Err(format!("document {:?} has neither title nor body", self.id));
        }
        Ok(())
    }
}

/// Raw on-disk record; the date is kept as a string so a bad date gets a
/// precise message instead of a generic serde error.
#[derive(Deserialize)]
struct Record {
    id: String,
    date: String,
    category: String,
    title: String,
    body: String,
}

/// Documents ordered nondecreasing by date. Ties keep file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus from in-memory documents, enforcing the same rules
    /// as [`load_corpus`]. Line numbers in errors are 1-based positions.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = HashMap::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            doc.validate()
                .map_err(|reason| CorpusError::Malformed { line: i + 1, reason })?;
            if seen.insert(doc.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    line: i + 1,
                    id: doc.id.clone(),
                });
            }
        }
        Ok(Self::sorted(documents))
    }

    fn sorted(mut documents: Vec<Document>) -> Self {
        documents.sort_by_key(|d| d.date);
        Corpus { documents }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn origin_date(&self) -> Option<NaiveDate> {
        self.documents.first().map(|d| d.date)
    }

    pub fn end_date(&self) -> Option<NaiveDate> {
        self.documents.last().map(|d| d.date)
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Distinct categories in lexical order.
    pub fn categories(&self) -> BTreeSet<&str> {
        self.documents.iter().map(|d| d.category.as_str()).collect()
    }

    /// Documents dated in `[start, end)`.
    pub fn restrict_to(&self, start: NaiveDate, end: NaiveDate) -> Corpus {
        Corpus {
            documents: self
                .documents
                .iter()
                .filter(|d| start <= d.date && d.date < end)
                .cloned()
                .collect(),
        }
    }

    /// Serializes back to JSON Lines in corpus order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            let record = serde_json::json!({
                "id": doc.id,
                "date": doc.date.format("%Y-%m-%d").to_string(),
                "category": doc.category,
                "title": doc.title,
                "body": doc.body,
            });
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    }
}

/// Reads a JSON Lines corpus. Blank lines are skipped; line numbers in
/// errors are 1-based file lines.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut documents = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_record(&line).map_err(|reason| CorpusError::Malformed {
            line: line_no,
            reason,
        })?;
        if seen.insert(doc.id.clone(), line_no).is_some() {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: doc.id,
            });
        }
        documents.push(doc);
    }
    Ok(Corpus::sorted(documents))
}

/// Parses one JSONL line into a validated [`Document`].
pub fn parse_record(line: &str) -> Result<Document, String> {
    let record: Record = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let date = NaiveDate::parse_from_str(&record.date, "%Y-%m-%d")
        .map_err(|e| format!("bad date {:?}: {e}", record.date))?;
    let doc = Document {
        id: record.id,
        date,
        category: record.category,
        title: record.title,
        body: record.body,
    };
    doc.validate()?;
    Ok(doc)
}

/// Keeps documents whose category is in `keep`, preserving order.
pub fn filter_by_category<S: AsRef<str>>(corpus: &Corpus, keep: &[S]) -> Corpus {
    let keep: BTreeSet<&str> = keep.iter().map(AsRef::as_ref).collect();
    Corpus {
        documents: corpus
            .documents
            .iter()
            .filter(|d| keep.contains(d.category.as_str()))
            .cloned()
            .collect(),
    }
}

/// A half-open date interval `[start, end)` and the documents inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSlice {
    pub index: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub doc_ids: Vec<String>,
}

impl TimeSlice {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date < self.end
    }

    pub fn label(&self) -> String {
        self.start.format("%Y-%m-%d").to_string()
    }
}

/// Output of [`slice_monthly`]: the slices plus ids of documents falling
/// outside the sliced span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slicing {
    pub slices: Vec<TimeSlice>,
    pub excluded: Vec<String>,
}

impl Slicing {
    pub fn span(&self) -> (NaiveDate, NaiveDate) {
        (self.slices[0].start, self.slices[self.slices.len() - 1].end)
    }
}

/// `anchor_day` of the month `months` after `(year, month)`, clamped to the
/// last day of that month.
fn anchored(year: i32, month: u32, months: u32, anchor_day: u32) -> Option<NaiveDate> {
    let zero_based = month - 1 + months;
    let y = year + (zero_based / 12) as i32;
    let m = zero_based % 12 + 1;
    let last = last_day_of_month(y, m)?;
    NaiveDate::from_ymd_opt(y, m, anchor_day.min(last))
}

fn last_day_of_month(year: i32, month: u32) -> Option<u32> {
    let first_next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)?
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)?
    };
    Some(first_next.pred_opt()?.day())
}

/// Partitions `[first_start, first_start + n_slices months)` into slices
/// anchored on `anchor_day`. A month lacking that day uses its last day.
pub fn slice_monthly(
    corpus: &Corpus,
    anchor_day: u32,
    first_start: NaiveDate,
    n_slices: usize,
) -> Result<Slicing, CorpusError> {
    if !(1..=31).contains(&anchor_day) {
        return Err(CorpusError::InvalidSlicing(format!(
            "anchor day {anchor_day} outside 1..=31"
        )));
    }
    if n_slices == 0 {
        return Err(CorpusError::InvalidSlicing("n_slices must be at least 1".into()));
    }
    let (year, month) = (first_start.year(), first_start.month());
    let expected = anchored(year, month, 0, anchor_day)
        .ok_or_else(|| CorpusError::InvalidSlicing("date out of range".into()))?;
    if expected != first_start {
        return Err(CorpusError::InvalidSlicing(format!(
            "first_start {first_start} does not fall on anchor day {anchor_day}"
        )));
    }
    let bounds: Vec<NaiveDate> = (0..=n_slices as u32)
        .map(|t| anchored(year, month, t, anchor_day))
        .collect::<Option<_>>()
        .ok_or_else(|| CorpusError::InvalidSlicing("date out of range".into()))?;

    let mut slices: Vec<TimeSlice> = bounds
        .windows(2)
        .enumerate()
        .map(|(index, w)| TimeSlice {
            index,
            start: w[0],
            end: w[1],
            doc_ids: Vec::new(),
        })
        .collect();
    let mut excluded = Vec::new();
    for doc in &corpus.documents {
        // bounds is sorted, so the slice is the last bound <= date.
        let pos = bounds.partition_point(|b| *b <= doc.date);
        if pos == 0 || pos > n_slices {
            excluded.push(doc.id.clone());
        } else {
            slices[pos - 1].doc_ids.push(doc.id.clone());
        }
    }
    if !excluded.is_empty() {
        log::info!(
            "{} documents outside {}..{} excluded from slicing",
            excluded.len(),
            bounds[0],
            bounds[n_slices]
        );
    }
    Ok(Slicing { slices, excluded })
}

/// Zero-filled count of documents per calendar day from the first to the
/// last document date inclusive.
pub fn articles_per_day(corpus: &Corpus) -> Result<Vec<(NaiveDate, usize)>, CorpusError> {
    let (origin, end) = match (corpus.origin_date(), corpus.end_date()) {
        (Some(o), Some(e)) => (o, e),
        _ => return Err(CorpusError::Empty),
    };
    let n_days = (end - origin).num_days() as usize + 1;
    let mut counts = vec![0usize; n_days];
    for doc in &corpus.documents {
        counts[(doc.date - origin).num_days() as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (origin + Days::new(i as u64), c))
        .collect())
}

/// CSV `date,count` rendering of a per-day series.
pub fn timeline_csv(series: &[(NaiveDate, usize)]) -> String {
    let mut out = String::from("date,count\n");
    for (date, count) in series {
        out.push_str(&format!("{},{}\n", date.format("%Y-%m-%d"), count));
    }
    out
}

/// Parses the output of [`timeline_csv`].
pub fn parse_timeline_csv(text: &str) -> Result<Vec<(NaiveDate, usize)>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| CorpusError::Malformed { line: i + 1, reason };
        let (date, count) = line
            .split_once(',')
            .ok_or_else(|| bad("expected date,count".into()))?;
        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| bad(e.to_string()))?;
        let count = count.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        out.push((date, count));
    }
    Ok(out)
}
