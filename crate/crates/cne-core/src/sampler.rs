//! Positive pairs from truncated random walks, negatives from uniform draws.
//!
//! All randomness flows from caller-provided seeds. `epoch_stream` derives
//! one seed per start node, so walk generation can fan out across workers
//! while the emitted example order stays identical to a sequential run.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::derive_seed;
use crate::graph::{EdgeTypeId, Graph, NodeId};

/// Node ids visited in order; consecutive nodes are adjacent.
pub type Walk = Vec<NodeId>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub center: NodeId,
    pub positive: NodeId,
    pub negatives: Vec<NodeId>,
    pub edge_type: EdgeTypeId,
}

/// Uniform next-neighbor walk of at most `l` nodes, stopping early at a
/// node with no out-neighbors.
pub fn random_walk(
    g: &Graph,
    start: NodeId,
    l: usize,
    edge_type: EdgeTypeId,
    rng: &mut impl Rng,
) -> Walk {
    assert!(l >= 1, "walk length must be at least 1");
    let mut nodes = vec![start];
    while nodes.len() < l {
        let cur = *nodes.last().unwrap();
        let nbrs = g.neighbors(edge_type, cur);
        if nbrs.is_empty() {
            break;
        }
        nodes.push(nbrs[rng.random_range(0..nbrs.len())]);
    }
    nodes
}

/// Ordered pairs `(walk[i], walk[j])` for i ≠ j with |i−j| ≤ w, skipping
/// pairs whose two positions hold the same node.
pub fn window_pairs(walk: &[NodeId], w: usize) -> Vec<(NodeId, NodeId)> {
    assert!(w >= 1, "window must be at least 1");
    let n = walk.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(n.saturating_sub(1));
        for j in lo..=hi {
            if j != i && walk[i] != walk[j] {
                pairs.push((walk[i], walk[j]));
            }
        }
    }
    pairs
}

/// K independent uniform draws with replacement from `nodes`. True
/// neighbors are not filtered out.
pub fn sample_negatives(nodes: &[NodeId], k: usize, rng: &mut impl Rng) -> Vec<NodeId> {
    assert!(!nodes.is_empty() && k >= 1);
    (0..k).map(|_| nodes[rng.random_range(0..nodes.len())]).collect()
}

/// One epoch of training examples for a single edge type: `r` walks per
/// node, every window pair paired with fresh negatives, then a seeded
/// shuffle of the whole stream.
pub fn epoch_stream(
    g: &Graph,
    walks_per_node: usize,
    l: usize,
    w: usize,
    k: usize,
    edge_type: EdgeTypeId,
    seed: u64,
) -> Vec<TrainingExample> {
    let all_nodes: Vec<NodeId> = g.nodes().collect();
    if all_nodes.is_empty() {
        return Vec::new();
    }
    let mut examples: Vec<TrainingExample> = all_nodes
        .par_iter()
        .map(|&start| {
            let node_seed = derive_seed(seed, "walk-node", &[edge_type as u64, start as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(node_seed);
            let mut out = Vec::new();
            for _ in 0..walks_per_node {
                let walk = random_walk(g, start, l, edge_type, &mut rng);
                for (center, positive) in window_pairs(&walk, w) {
                    let negatives = sample_negatives(&all_nodes, k, &mut rng);
                    out.push(TrainingExample {
                        center,
                        positive,
                        negatives,
                        edge_type,
                    });
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let mut shuffle_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(seed, "epoch-shuffle", &[edge_type as u64]));
    examples.shuffle(&mut shuffle_rng);
    examples
}
