//! Inductive node embedding toolkit.
//!
//! Nodes are represented by composing trainable token embeddings of their
//! attributes (e.g. product titles) through a trainable encoder (sum/mean
//! pooling or a GRU). Encoder parameters and the shared token-embedding
//! table are trained with a graph-based max-margin objective over positive
//! pairs sampled from truncated random walks, so embeddings can be produced
//! for nodes that were never seen during training.
//!
//! Module map:
//! - [`graph`]: edge-list loading, adjacency, edge holdout splits
//! - [`text`]: tokenization, frequency vocabulary, token-id sequences
//! - [`sampler`]: random walks, window pairs, uniform negatives
//! - [`encoder`]: composition functions with exact analytic gradients
//! - [`trainer`]: hinge loss, Adam, multi-edge-type training, checkpoints
//! - [`evaluator`]: full-ranking link prediction, P@k / R@k, rank histogram

pub mod encoder;
pub mod error;
pub mod evaluator;
pub mod graph;
pub mod linalg;
pub mod sampler;
pub mod synthetic;
pub mod text;
pub mod trainer;

pub use encoder::{EmbeddingTable, EncoderKind, EncoderParams, EncoderSpec, GruParams};
pub use error::{Error, Result};
pub use evaluator::{EmbeddingMatrix, EvalOptions, EvalSides, RankingReport};
pub use graph::{EdgeSet, Graph, NodeId};
pub use sampler::{TrainingExample, Walk};
pub use text::{AttrStore, TokenSequence, Vocabulary};
pub use trainer::{EpochLoss, ModelState, PairSpec, TrainConfig};

/// Derives a child RNG seed from a base seed, a tag, and integer parts.
///
/// splitmix64 chaining keeps per-node / per-epoch streams independent of
/// each other and of platform hashing.
pub fn derive_seed(base: u64, tag: &str, parts: &[u64]) -> u64 {
    let mut h = splitmix64(base ^ fnv1a64(tag.as_bytes()));
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// FNV-1a over bytes; used for seed derivation and config provenance hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
