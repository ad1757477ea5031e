//! Run configuration: a sectioned key-value (TOML) file whose values
//! command-line flags may override. Every module precondition that can be
//! checked without reading data is checked in [`RunConfig::validate`].

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use newstopics::corpus::{slice_monthly, Corpus};
use newstopics::lda::LdaHyperparams;
use newstopics::PreprocessConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub path: Option<PathBuf>,
    pub categories: Vec<String>,
    pub anchor_day: u32,
    pub first_start: NaiveDate,
    pub n_slices: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            path: None,
            categories: vec!["inrikes".into(), "utrikes".into()],
            anchor_day: 17,
            first_start: NaiveDate::from_ymd_opt(2020, 1, 17).expect("valid date"),
            n_slices: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    /// Stopword file; the bundled Swedish list when absent.
    pub stoplist: Option<PathBuf>,
    pub min_count: usize,
    pub threshold: f64,
    pub no_below: usize,
    pub no_above: f64,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        let d = PreprocessConfig::default();
        PreprocessSection {
            stoplist: None,
            min_count: d.min_count,
            threshold: d.threshold,
            no_below: d.no_below,
            no_above: d.no_above,
        }
    }
}

impl PreprocessSection {
    pub fn thresholds(&self) -> PreprocessConfig {
        PreprocessConfig {
            min_count: self.min_count,
            threshold: self.threshold,
            no_below: self.no_below,
            no_above: self.no_above,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub topics: usize,
    /// Topic counts for static training; `[topics]` when empty.
    pub k_sweep: Vec<usize>,
    /// Defaults to `50 / K` for each K.
    pub alpha: Option<f64>,
    pub eta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub kappa: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = LdaHyperparams::new(20);
        TrainSection {
            topics: 20,
            k_sweep: Vec::new(),
            alpha: None,
            eta: d.eta,
            iterations: d.iterations,
            burn_in: d.burn_in,
            thin: d.thin,
            seed: d.seed,
            kappa: 1.0,
        }
    }
}

impl TrainSection {
    pub fn hyper(&self, topics: usize) -> LdaHyperparams {
        let mut h = LdaHyperparams::new(topics);
        if let Some(a) = self.alpha {
            h.alpha = a;
        }
        h.eta = self.eta;
        h.iterations = self.iterations;
        h.burn_in = self.burn_in;
        h.thin = self.thin;
        h.seed = self.seed;
        h
    }

    pub fn static_topic_counts(&self) -> Vec<usize> {
        if self.k_sweep.is_empty() {
            vec![self.topics]
        } else {
            self.k_sweep.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub top_n: usize,
    /// Words tracked in every topic's trajectory. When empty, each topic
    /// tracks its own top `track_n` words of the first and last slice.
    pub track_words: Vec<String>,
    pub track_n: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            top_n: 10,
            track_words: Vec::new(),
            track_n: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotSection {
    pub width: u32,
    pub height: u32,
}

impl Default for PlotSection {
    fn default() -> Self {
        PlotSection {
            width: 800,
            height: 450,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSection,
    pub preprocess: PreprocessSection,
    pub train: TrainSection,
    pub report: ReportSection,
    pub plot: PlotSection,
}

impl RunConfig {
    /// Relative paths in the file resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.corpus.path);
        resolve(&mut cfg.preprocess.stoplist);
        Ok(cfg)
    }

    /// Checks every statically known precondition of every stage.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        let c = &self.corpus;
        if c.categories.is_empty() || c.categories.iter().any(String::is_empty) {
            return bad("corpus.categories must list at least one nonempty category".into());
        }
        slice_monthly(&Corpus::default(), c.anchor_day, c.first_start, c.n_slices)
            .map_err(|e| CliError::Validation(e.to_string()))?;

        self.preprocess
            .thresholds()
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;

        let t = &self.train;
        let mut counts = t.static_topic_counts();
        counts.push(t.topics);
        for k in counts {
            t.hyper(k)
                .validate()
                .map_err(|e| CliError::Validation(format!("train (K={k}): {e}")))?;
        }
        if !(t.kappa >= 0.0 && t.kappa.is_finite()) {
            return bad(format!("train.kappa must be finite and >= 0, got {}", t.kappa));
        }

        if self.report.top_n < 2 {
            return bad(format!("report.top_n must be at least 2, got {}", self.report.top_n));
        }
        if self.report.track_n == 0 && self.report.track_words.is_empty() {
            return bad("report.track_n must be positive when no track_words are given".into());
        }
        if self.plot.width == 0 || self.plot.height == 0 {
            return bad("plot.width and plot.height must be positive".into());
        }
        Ok(())
    }

    /// Canonical TOML rendering, recorded in the workspace.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
