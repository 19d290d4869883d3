//! Shared fixtures for the benchmark suite: a planted two-block graph
//! with its attribute store and a freshly initialized model, sized so a
//! single iteration stays in the millisecond range.

use std::collections::BTreeMap;

use cne_core::encoder::{EncoderKind, EncoderSpec};
use cne_core::graph::Graph;
use cne_core::synthetic::{planted_graph, BlockSpec};
use cne_core::text::{AttrStore, Vocabulary};
use cne_core::trainer::{ModelState, PairSpec, TrainConfig};

pub const SEED: u64 = 9090;

pub struct Fixture {
    pub graph: Graph,
    pub attrs: AttrStore,
    pub state: ModelState,
    pub config: TrainConfig,
}

pub fn fixture(kind: EncoderKind, d: usize, h: usize) -> Fixture {
    let planted = planted_graph(&BlockSpec::default(), &[("link", 0.1, 0.005)], SEED);
    let vocab = Vocabulary::build(planted.text.values().map(|s| s.as_str()), 400);
    let attrs = AttrStore::build(planted.graph.labels(), &planted.text, &vocab, 1, 16);
    let spec = EncoderSpec::new(kind, d, h);
    let state = ModelState::init(
        &[PairSpec::uniform("link", spec, false)],
        attrs.vocab_size(),
        SEED,
    );
    let config = TrainConfig {
        l: 10,
        w: 2,
        k: 4,
        r: 2,
        margin: 1.0,
        d,
        h,
        lr: 1e-3,
        batch: 256,
        epochs: 1,
        seed: SEED,
        share_phi: false,
        edge_type_weights: BTreeMap::new(),
    };
    Fixture {
        graph: planted.graph,
        attrs,
        state,
        config,
    }
}
