//! Command-line pipeline over a persistent workspace:
//! `ingest`, `preprocess`, `train`, `report`, `plot`.

pub mod config;
pub mod stages;
pub mod workspace;

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::RunConfig;
pub use workspace::Workspace;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration, detected before any stage runs.
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "newstopics", version, about = "Topic modelling pipeline for dated news corpora")]
pub struct Cli {
    /// Workspace directory holding artifacts and the manifest.
    #[arg(long, global = true, default_value = "workspace")]
    pub workspace: PathBuf,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Sampler seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the corpus, filter categories, slice by month, count articles per day.
    Ingest(IngestArgs),
    /// Tokenize, drop stopwords, merge bigrams, build the vocabulary and bag-of-words.
    Preprocess(PreprocessArgs),
    /// Train static LDA models or a chained dynamic model.
    Train(TrainArgs),
    /// Coherence, overlap, intertopic maps and keyword trajectories.
    Report(ReportArgs),
    /// Render SVG figures from the report exports.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus file in JSON Lines.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Categories to keep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    #[arg(long)]
    pub anchor_day: Option<u32>,
    #[arg(long)]
    pub first_start: Option<NaiveDate>,
    #[arg(long)]
    pub n_slices: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub no_below: Option<usize>,
    #[arg(long)]
    pub no_above: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Static,
    Dtm,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = Mode::Static)]
    pub mode: Mode,
    #[arg(long)]
    pub topics: Option<usize>,
    /// Topic counts for static training, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k_sweep: Option<Vec<usize>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub topics: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub k_sweep: Option<Vec<usize>>,
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Words to track in every topic, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub track_words: Option<Vec<String>>,
    #[arg(long)]
    pub track_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
}

fn set<T>(slot: &mut T, value: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = value {
        *slot = v.clone();
    }
}

impl Cli {
    /// The file configuration (or defaults) with this invocation's flags applied.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        set(&mut cfg.train.seed, &self.seed);
        match &self.command {
            Command::Ingest(a) => {
                if a.corpus.is_some() {
                    cfg.corpus.path = a.corpus.clone();
                }
                set(&mut cfg.corpus.categories, &a.categories);
                set(&mut cfg.corpus.anchor_day, &a.anchor_day);
                set(&mut cfg.corpus.first_start, &a.first_start);
                set(&mut cfg.corpus.n_slices, &a.n_slices);
            }
            Command::Preprocess(a) => {
                if a.stoplist.is_some() {
                    cfg.preprocess.stoplist = a.stoplist.clone();
                }
                set(&mut cfg.preprocess.min_count, &a.min_count);
                set(&mut cfg.preprocess.threshold, &a.threshold);
                set(&mut cfg.preprocess.no_below, &a.no_below);
                set(&mut cfg.preprocess.no_above, &a.no_above);
            }
            Command::Train(a) => {
                set(&mut cfg.train.topics, &a.topics);
                set(&mut cfg.train.k_sweep, &a.k_sweep);
                if a.alpha.is_some() {
                    cfg.train.alpha = a.alpha;
                }
                set(&mut cfg.train.eta, &a.eta);
                set(&mut cfg.train.iterations, &a.iterations);
                set(&mut cfg.train.burn_in, &a.burn_in);
                set(&mut cfg.train.thin, &a.thin);
                set(&mut cfg.train.kappa, &a.kappa);
            }
            Command::Report(a) => {
                set(&mut cfg.train.topics, &a.topics);
                set(&mut cfg.train.k_sweep, &a.k_sweep);
                set(&mut cfg.report.top_n, &a.top_n);
                set(&mut cfg.report.track_words, &a.track_words);
                set(&mut cfg.report.track_n, &a.track_n);
            }
            Command::Plot(a) => {
                set(&mut cfg.plot.width, &a.width);
                set(&mut cfg.plot.height, &a.height);
            }
        }
        cfg.validate()?;
        if let Command::Ingest(_) = self.command {
            if cfg.corpus.path.is_none() {
                return Err(CliError::Validation(
                    "no corpus file: set corpus.path in the config or pass --corpus".into(),
                ));
            }
        }
        Ok(cfg)
    }
}

/// Validates everything, then runs one subcommand under the workspace lock.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.resolve_config()?;
    let creating = matches!(cli.command, Command::Ingest(_));
    let mut ws = Workspace::open(&cli.workspace, creating)?;
    match &cli.command {
        Command::Ingest(_) => {
            let stats = stages::ingest(&mut ws, &cfg)?;
            let counts = &stats.slice_counts;
            let max = counts.iter().max_by_key(|s| s.documents);
            let min = counts.iter().min_by_key(|s| s.documents);
            if let (Some(max), Some(min)) = (max, min) {
                log::info!(
                    "largest slice {} ({}), smallest {} ({})",
                    max.start,
                    max.documents,
                    min.start,
                    min.documents
                );
            }
        }
        Command::Preprocess(_) => {
            stages::run_preprocess(&mut ws, &cfg)?;
        }
        Command::Train(a) => match a.mode {
            Mode::Static => {
                stages::train_static(&mut ws, &cfg)?;
            }
            Mode::Dtm => {
                stages::train_dynamic(&mut ws, &cfg)?;
            }
        },
        Command::Report(_) => {
            stages::report(&mut ws, &cfg)?;
        }
        Command::Plot(_) => {
            let figures = stages::plot(&mut ws, &cfg)?;
            log::info!("{} figures written", figures.len());
        }
    }
    ws.save()?;
    Ok(())
}
