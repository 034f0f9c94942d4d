//! Clinical report standardization toolkit.
//!
//! Bilingual (Chinese/English) fundus-report corpora, a validated standard
//! terminology, seeded data augmentation, rule-based standardization,
//! quality filtering and corpus-level NLG evaluation.

pub mod augment;
pub mod corpus;
pub mod eval;
pub mod filter;
pub mod metrics;
pub mod num;
pub mod rng;
pub mod standardize;
pub mod synth;
pub mod terminology;
pub mod text;

pub use corpus::{detect_language, load_corpus, parse_pair_record, Corpus, Language, Report, ReportPair};
pub use num::{round2, Scalar};
pub use terminology::{load_terminology, match_terms, Polarity, TermEntry, TermMatch, Terminology};

/// Metric scores in double precision, the reporting default.
pub type MetricScores = metrics::Scores<f64>;
/// Single-precision scores.
pub type MetricScoresF32 = metrics::Scores<f32>;
