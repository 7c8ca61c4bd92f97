//! Shared inputs for the benchmarks.

use capgen_core::data_io::fixture_feature;
use capgen_core::{CaptionModel, ModelConfig, TokenSequence};

/// A randomly initialized model of the given size.
pub fn model(vocab_size: usize, embed_dim: usize, hidden_dim: usize, max_len: usize) -> CaptionModel {
    let cfg = ModelConfig {
        embed_dim,
        hidden_dim,
        max_len,
        ..ModelConfig::new(vocab_size)
    };
    CaptionModel::init(cfg).expect("valid config")
}

pub fn feature(id: &str) -> Vec<f64> {
    fixture_feature(id, 0).expect("fixture feature").values().to_vec()
}

/// A caption whose body cycles through the non-reserved ids.
pub fn caption(vocab_size: usize, len: usize) -> TokenSequence {
    let body: Vec<usize> = (0..len).map(|i| 4 + i % (vocab_size - 4)).collect();
    TokenSequence::from_body(&body).expect("valid body")
}
