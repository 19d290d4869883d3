//! Link-prediction evaluation.
//!
//! Every node is embedded with the trained composition function, each
//! sampled test node's held-out neighbors are ranked against the whole
//! node set by cosine, and Precision@k / Recall@k are averaged over the
//! sampled nodes. True-neighbor ranks also feed a geometric histogram.
//!
//! Because embeddings come from attributes alone, nodes without a single
//! training edge get scored the same way as everyone else; that is the
//! inductive path.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::derive_seed;
use crate::encoder::compose;
use crate::error::{Error, Result};
use crate::graph::{EdgeSet, Graph, NodeId};
use crate::linalg::{axpy, Mat};
use crate::text::AttrStore;
use crate::trainer::{cosine, ModelState};

/// Which tower produces an embedding. In a ranking, the query uses the
/// chosen side and candidates use the opposite one; `Average` puts the
/// per-node mean of both towers on both sides, which makes the score
/// symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSides {
    Phi1,
    Phi2,
    Average,
}

impl EvalSides {
    pub fn opposite(self) -> EvalSides {
        match self {
            EvalSides::Phi1 => EvalSides::Phi2,
            EvalSides::Phi2 => EvalSides::Phi1,
            EvalSides::Average => EvalSides::Average,
        }
    }
}

impl std::fmt::Display for EvalSides {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalSides::Phi1 => "phi1",
            EvalSides::Phi2 => "phi2",
            EvalSides::Average => "average",
        })
    }
}

impl std::str::FromStr for EvalSides {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<EvalSides, String> {
        match s {
            "phi1" => Ok(EvalSides::Phi1),
            "phi2" => Ok(EvalSides::Phi2),
            "average" => Ok(EvalSides::Average),
            other => Err(format!(
                "unknown side {other:?} (expected phi1, phi2 or average)"
            )),
        }
    }
}

/// Embeddings for a fixed node list, all the same width, tagged with the
/// side that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
    mat: Mat,
    pub side: EvalSides,
}

impl EmbeddingMatrix {
    pub fn from_rows(ids: Vec<NodeId>, rows: Vec<Vec<f64>>, side: EvalSides) -> EmbeddingMatrix {
        assert_eq!(ids.len(), rows.len());
        let width = rows.first().map_or(0, Vec::len);
        let mut mat = Mat::zeros(ids.len(), width);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), width, "uneven embedding widths");
            mat.row_mut(i).copy_from_slice(row);
        }
        let index = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        EmbeddingMatrix {
            ids,
            index,
            mat,
            side,
        }
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn width(&self) -> usize {
        self.mat.cols()
    }

    pub fn row(&self, node: NodeId) -> Option<&[f64]> {
        self.index.get(&node).map(|&i| self.mat.row(i))
    }
}

/// Embeds `nodes` with the chosen tower of one edge type's encoder pair.
/// Pure with respect to the state: unseen nodes work exactly like seen
/// ones as long as they have attributes.
pub fn embed_all(
    state: &ModelState,
    nodes: &[NodeId],
    attrs: &AttrStore,
    edge_type: Option<&str>,
    side: EvalSides,
) -> Result<EmbeddingMatrix> {
    let (_, pair) = state.resolve_pair(edge_type)?;
    let rows: Vec<Result<Vec<f64>>> = nodes
        .par_iter()
        .map(|&v| -> Result<Vec<f64>> {
            let parts = attrs.parts(v)?;
            let one = |params: &crate::encoder::EncoderParams| {
                compose(params, &state.table, &parts[..params.spec.arity()]).0
            };
            let row = match side {
                EvalSides::Phi1 => one(&pair.phi1),
                EvalSides::Phi2 => one(pair.phi2()),
                EvalSides::Average => {
                    let mut a = one(&pair.phi1);
                    let b = one(pair.phi2());
                    assert_eq!(a.len(), b.len());
                    axpy(&mut a, &b, 1.0);
                    for x in &mut a {
                        *x *= 0.5;
                    }
                    a
                }
            };
            debug_assert!(row.iter().all(|x| x.is_finite()));
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingMatrix::from_rows(nodes.to_vec(), rows, side))
}

/// All matrix nodes except `exclude`, sorted by descending cosine against
/// the query; ties break toward the lower node id.
pub fn rank_candidates(
    query: &[f64],
    matrix: &EmbeddingMatrix,
    exclude: &BTreeSet<NodeId>,
) -> Vec<NodeId> {
    assert_eq!(query.len(), matrix.width(), "query width mismatch");
    let mut scored: Vec<(NodeId, f64)> = matrix
        .ids
        .iter()
        .filter(|v| !exclude.contains(v))
        .map(|&v| (v, cosine(query, matrix.row(v).unwrap())))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.into_iter().map(|(v, _)| v).collect()
}

/// P@k = |truth ∩ top-k| / k, R@k = |truth ∩ top-k| / |truth|.
pub fn precision_recall_at_k(
    ranked: &[NodeId],
    truth: &BTreeSet<NodeId>,
    k: usize,
) -> (f64, f64) {
    assert!(k >= 1);
    assert!(!truth.is_empty(), "empty truth is skipped upstream");
    let hits = ranked
        .iter()
        .take(k)
        .filter(|v| truth.contains(v))
        .count();
    (hits as f64 / k as f64, hits as f64 / truth.len() as f64)
}

/// Half-open geometric buckets; top-1 hits have rank 0 and land in "0-2".
pub const DEFAULT_RANK_BUCKETS: [usize; 11] = [0, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024];

/// Counts ranks per bucket `[b_i, b_{i+1})`; the final slot counts ranks
/// at or past the last boundary. Output length equals `boundaries.len()`.
pub fn rank_histogram(ranks: &[usize], boundaries: &[usize]) -> Vec<u64> {
    assert!(!boundaries.is_empty() && boundaries[0] == 0);
    assert!(boundaries.windows(2).all(|w| w[0] < w[1]));
    let mut counts = vec![0u64; boundaries.len()];
    for &r in ranks {
        let i = boundaries.partition_point(|&b| b <= r) - 1;
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub ks: Vec<usize>,
    pub sample_nodes: usize,
    pub seed: u64,
    /// required when the model holds several encoder pairs
    pub edge_type: Option<String>,
    /// query tower; candidates use the opposite, `Average` both
    pub sides: EvalSides,
}

impl Default for EvalOptions {
    fn default() -> EvalOptions {
        EvalOptions {
            ks: vec![10],
            sample_nodes: 1000,
            seed: 0,
            edge_type: None,
            sides: EvalSides::Phi1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub ks: Vec<usize>,
    /// mean P@k over evaluated nodes, aligned with `ks`
    pub precision: Vec<f64>,
    /// mean R@k over evaluated nodes, aligned with `ks`
    pub recall: Vec<f64>,
    /// ranks of every (node, held-out neighbor) pair, per node
    pub node_ranks: BTreeMap<NodeId, Vec<usize>>,
    pub bucket_boundaries: Vec<usize>,
    pub histogram: Vec<u64>,
    pub nodes_evaluated: usize,
}

impl RankingReport {
    pub fn scored_pairs(&self) -> usize {
        self.node_ranks.values().map(Vec::len).sum()
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "k,precision,recall")?;
        for (i, k) in self.ks.iter().enumerate() {
            writeln!(w, "{},{:.6},{:.6}", k, self.precision[i], self.recall[i])?;
        }
        writeln!(w)?;
        writeln!(w, "bucket_lo,bucket_hi,count")?;
        for (i, count) in self.histogram.iter().enumerate() {
            let lo = self.bucket_boundaries[i];
            match self.bucket_boundaries.get(i + 1) {
                Some(hi) => writeln!(w, "{lo},{hi},{count}")?,
                None => writeln!(w, "{lo},inf,{count}")?,
            }
        }
        Ok(())
    }
}

/// Scores held-out edges: samples up to `sample_nodes` test nodes that
/// have at least one held-out neighbor, ranks the whole node set for each,
/// and averages P@k / R@k. Candidates never exclude anyone's held-out
/// neighbors, only the query node itself.
pub fn evaluate_lp(
    state: &ModelState,
    train_g: &Graph,
    test: &EdgeSet,
    attrs: &AttrStore,
    opts: &EvalOptions,
) -> Result<RankingReport> {
    let (pair_name, _) = state.resolve_pair(opts.edge_type.as_deref())?;
    let type_id = train_g
        .edge_type_id(pair_name)
        .ok_or_else(|| Error::UnknownEdgeType {
            edge_type: pair_name.to_string(),
        })?;

    let mut truth: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for e in &test.edges {
        if e.edge_type != type_id {
            continue;
        }
        truth.entry(e.src).or_default().insert(e.dst);
        if !train_g.directed() {
            truth.entry(e.dst).or_default().insert(e.src);
        }
    }
    let eligible: Vec<NodeId> = truth.keys().copied().collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleTestNodes);
    }

    let sampled: Vec<NodeId> = if eligible.len() > opts.sample_nodes {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, "eval-sample", &[]));
        let mut picked = rand::seq::index::sample(&mut rng, eligible.len(), opts.sample_nodes)
            .into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| eligible[i]).collect()
    } else {
        eligible
    };

    let all_nodes: Vec<NodeId> = train_g.nodes().collect();
    let queries = embed_all(state, &all_nodes, attrs, Some(pair_name), opts.sides)?;
    let candidates = if opts.sides.opposite() == opts.sides {
        queries.clone()
    } else {
        embed_all(state, &all_nodes, attrs, Some(pair_name), opts.sides.opposite())?
    };

    struct NodeResult {
        node: NodeId,
        hits: Vec<usize>,
        precision: Vec<f64>,
        recall: Vec<f64>,
    }

    let per_node: Vec<NodeResult> = sampled
        .par_iter()
        .map(|&v| {
            let node_truth = &truth[&v];
            let exclude: BTreeSet<NodeId> = [v].into_iter().collect();
            let ranked = rank_candidates(queries.row(v).unwrap(), &candidates, &exclude);
            let hits: Vec<usize> = ranked
                .iter()
                .enumerate()
                .filter(|(_, id)| node_truth.contains(id))
                .map(|(pos, _)| pos)
                .collect();
            let mut precision = Vec::with_capacity(opts.ks.len());
            let mut recall = Vec::with_capacity(opts.ks.len());
            for &k in &opts.ks {
                let (p, r) = precision_recall_at_k(&ranked, node_truth, k);
                precision.push(p);
                recall.push(r);
            }
            NodeResult {
                node: v,
                hits,
                precision,
                recall,
            }
        })
        .collect();

    let n = per_node.len() as f64;
    let mut precision = vec![0.0; opts.ks.len()];
    let mut recall = vec![0.0; opts.ks.len()];
    let mut node_ranks = BTreeMap::new();
    let mut all_ranks = Vec::new();
    for r in per_node {
        axpy(&mut precision, &r.precision, 1.0);
        axpy(&mut recall, &r.recall, 1.0);
        all_ranks.extend_from_slice(&r.hits);
        node_ranks.insert(r.node, r.hits);
    }
    for p in precision.iter_mut().chain(recall.iter_mut()) {
        *p /= n;
    }
    let histogram = rank_histogram(&all_ranks, &DEFAULT_RANK_BUCKETS);

    Ok(RankingReport {
        ks: opts.ks.clone(),
        precision,
        recall,
        node_ranks,
        bucket_boundaries: DEFAULT_RANK_BUCKETS.to_vec(),
        histogram,
        nodes_evaluated: sampled.len(),
    })
}
