//! Emoji combination prediction.
//!
//! People rarely stop at one emoji: a short text is often followed by a run
//! of up to three of them, and that run behaves like a phrase of a small
//! language. This crate builds the whole pipeline around that idea:
//!
//! - [`emoji`] — Unicode emoji recognition, skin-tone/variation-selector
//!   normalization and emoji-aware segmentation;
//! - [`corpus`] — cleaning raw posts, extracting (context, combination)
//!   samples, the top-K emoji vocabulary and the mined candidate dictionary;
//! - [`model`] — pluggable per-context probability models over the
//!   vocabulary, including a trainable bag-of-words softmax;
//! - [`strategy`] — naive top-3, greedy threshold, and retrieval ranking of
//!   mined combinations by cross-entropy with a size penalty;
//! - [`eval`] — multiset precision/recall/F1 and the strategy comparison;
//! - [`dataset`] — the on-disk formats tying the stages together;
//! - [`synth`] — deterministic synthetic corpora for tests and benchmarks.

pub mod corpus;
pub mod dataset;
pub mod emoji;
pub mod error;
pub mod eval;
pub mod model;
pub mod strategy;
pub mod synth;

pub use corpus::{
    build_vocabulary, extract_samples, mine_candidates, preprocess, Candidate,
    CandidateDictionary, Combination, EmojiId, EmojiVocabulary, Sample, VocabEntry,
    DEFAULT_DICT_SIZE, DEFAULT_VOCAB_SIZE, MAX_COMBINATION_LEN,
};
pub use emoji::{segment, Emoji, EmojiTable, Token, TokenKind, TokenStream};
pub use error::{Error, Result};
pub use eval::{
    aggregate, compare_strategies, default_grid, report_csv, sample_score, EvalReport,
    SampleScore, StrategySpec,
};
pub use model::{
    soft_label, train_bow, BowModel, ExternalModel, LabelDistribution, ProbDistribution,
    ProbabilityModel, TrainConfig, Training, UnigramModel, DEFAULT_FEATURE_DIM,
};
pub use strategy::{
    greedy_topk, naive_top3, retrieval_predict, score_candidate, CandidateDistribution,
    RankedPrediction, Ranker, SCORE_FLOOR,
};
