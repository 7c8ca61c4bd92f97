//! Bengali image captioning over precomputed image features.
//!
//! A projected 2048-d feature seeds two GRU decoders that share a word
//! embedding, one reading left to right and one right to left. Captions are
//! decoded greedily, by beam search or exhaustively, and scored with corpus
//! BLEU and an exact-match METEOR.

pub mod data_io;
pub mod decode;
pub mod error;
pub mod gru;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod text;
pub mod trainer;

pub use decode::{
    beam_search, bidirectional_decode, decode_beam, decode_bidirectional, decode_exhaustive, decode_greedy, exhaustive_decode, greedy_decode,
    search_space_size, DecodeParams, Hypothesis, StepModel, EXHAUSTIVE_LIMIT,
};
pub use error::{Error, Result};
pub use gru::{Direction, GruParams};
pub use metrics::{evaluate_corpus, EvalPair, MetricsReport};
pub use model::{select_bidirectional, CaptionModel, ModelConfig, ScoredSentence, ScoringMode, FEATURE_DIM};
pub use numerics::{Matrix, Vector};
pub use text::{decode_tokens, detokenize, encode_caption, tokenize, TokenSequence, Vocabulary};
pub use trainer::{gradient_check, train, EpochStats, GradCheckConfig, GradCheckReport, Optimizer, TrainConfig, TrainingSet};
