//! Topic modelling for dated news corpora.
//!
//! The pipeline runs [`corpus`] loading and time slicing, [`preprocess`]
//! into bag-of-words documents, static [`lda`] and chained [`dtm`]
//! training, [`eval`] diagnostics, and [`viz`] SVG figures.

pub mod corpus;
pub mod dtm;
pub mod eval;
pub mod lda;
pub mod matrix;
pub mod preprocess;
pub mod synthetic;
pub mod viz;

pub use corpus::{Corpus, Document, Slicing, TimeSlice};
pub use dtm::{DtmModel, TrajectorySeries};
pub use eval::{CoherenceReport, IntertopicMap, OverlapReport};
pub use lda::{LdaHyperparams, LdaModel, TopicSummary};
pub use matrix::Matrix;
pub use preprocess::{BowDoc, PreprocessConfig, Stoplist, TokenStream, Vocabulary};
pub use viz::FigureSpec;
