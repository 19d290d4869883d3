//! Planted two-block graphs for behavioral tests.
//!
//! Block membership drives both the wiring (dense inside a block, sparse
//! across) and the attribute text (each block draws from its own token
//! pool, diluted by a shared noise pool), so attribute-composed embeddings
//! carry a recoverable signal about likely neighbors.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, GraphBuilder, NodeId};
use crate::{derive_seed, fnv1a64};

#[derive(Debug, Clone, Copy)]
pub struct BlockSpec {
    pub nodes_per_block: usize,
    pub tokens_per_node: usize,
    /// distinct tokens private to each block
    pub block_pool: usize,
    /// distinct tokens shared by both blocks
    pub noise_pool: usize,
}

impl Default for BlockSpec {
    fn default() -> BlockSpec {
        BlockSpec {
            nodes_per_block: 100,
            tokens_per_node: 8,
            block_pool: 50,
            noise_pool: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub graph: Graph,
    /// node label → attribute text, ready for an attribute store
    pub text: BTreeMap<String, String>,
    /// block id per node, indexed by NodeId
    pub block: Vec<u8>,
}

impl Planted {
    pub fn block_of(&self, v: NodeId) -> u8 {
        self.block[v as usize]
    }

    pub fn same_block(&self, a: NodeId, b: NodeId) -> bool {
        self.block_of(a) == self.block_of(b)
    }
}

/// Samples a two-block graph. Each entry of `edge_types` plants one edge
/// type with its own `(name, intra_p, inter_p)` densities over the same
/// node set. Every node is kept even when it ends up isolated.
pub fn planted_graph(spec: &BlockSpec, edge_types: &[(&str, f64, f64)], seed: u64) -> Planted {
    assert!(spec.nodes_per_block >= 1 && spec.tokens_per_node >= 1);
    assert!(spec.block_pool >= 1);
    assert!(!edge_types.is_empty());
    for &(_, intra, inter) in edge_types {
        assert!((0.0..=1.0).contains(&intra) && (0.0..=1.0).contains(&inter));
    }

    let n = 2 * spec.nodes_per_block;
    let labels: Vec<String> = (0..n).map(|i| format!("n{i:04}")).collect();
    let block: Vec<u8> = (0..n).map(|i| (i >= spec.nodes_per_block) as u8).collect();

    let mut attr_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "planted-attrs", &[]));
    let mut text = BTreeMap::new();
    for i in 0..n {
        let b = block[i];
        let mut tokens = Vec::with_capacity(spec.tokens_per_node);
        for _ in 0..spec.tokens_per_node {
            let pick = attr_rng.random_range(0..spec.block_pool + spec.noise_pool);
            if pick < spec.block_pool {
                tokens.push(format!("b{b}w{pick:02}"));
            } else {
                tokens.push(format!("zz{:02}", pick - spec.block_pool));
            }
        }
        text.insert(labels[i].clone(), tokens.join(" "));
    }

    let mut builder = GraphBuilder::new(false);
    for label in &labels {
        builder.intern_node(label);
    }
    for &(name, intra_p, inter_p) in edge_types {
        builder.intern_edge_type(name);
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, "planted-edges", &[fnv1a64(name.as_bytes())]));
        for i in 0..n {
            for j in i + 1..n {
                let p = if block[i] == block[j] { intra_p } else { inter_p };
                if rng.random::<f64>() < p {
                    builder.add_edge(&labels[i], &labels[j], name);
                }
            }
        }
    }
    let (graph, stats) = builder.finish();
    debug_assert_eq!(stats.self_loops_skipped, 0);
    debug_assert_eq!(stats.duplicates_collapsed, 0);

    Planted { graph, text, block }
}
