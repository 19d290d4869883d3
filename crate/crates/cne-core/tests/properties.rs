//! Randomized invariants across the pipeline.

use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cne_core::encoder::{gru_forward, pool_forward, EmbeddingTable, EncoderKind, GruParams};
use cne_core::evaluator::{precision_recall_at_k, rank_histogram, DEFAULT_RANK_BUCKETS};
use cne_core::graph::{load_edge_list_from, split_edges, unseen_test_nodes, Graph};
use cne_core::sampler::{random_walk, sample_negatives, window_pairs};
use cne_core::text::{encode_sequence, Vocabulary};
use cne_core::trainer::cosine;
use cne_core::NodeId;

fn graph_from_pairs(pairs: &[(u8, u8)]) -> Graph {
    let mut text = String::new();
    for (a, b) in pairs {
        text.push_str(&format!("n{a}\tn{b}\n"));
    }
    load_edge_list_from(text.as_bytes(), &PathBuf::from("<prop>"), false, "e")
        .unwrap()
        .0
}

fn arb_pairs() -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..12, 0u8..12), 1..40)
}

fn arb_corpus() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-e]{1,4}( [a-e]{1,4}){0,6}", 1..20)
}

proptest! {
    #[test]
    fn split_partitions_the_edge_set(pairs in arb_pairs(), frac in 0.0f64..=1.0, seed: u64) {
        let g = graph_from_pairs(&pairs);
        let (train, test) = split_edges(&g, frac, seed);
        prop_assert_eq!(test.edges.len(),
            (frac * g.edges().len() as f64).round() as usize);
        let mut merged: Vec<_> = train.edges().iter().chain(&test.edges).copied().collect();
        merged.sort();
        let mut original = g.edges().to_vec();
        original.sort();
        prop_assert_eq!(merged, original);
        prop_assert_eq!(train.node_count(), g.node_count());
    }

    #[test]
    fn unseen_nodes_have_no_training_edges(pairs in arb_pairs(), frac in 0.0f64..=1.0, seed: u64) {
        let g = graph_from_pairs(&pairs);
        let (train, test) = split_edges(&g, frac, seed);
        for v in unseen_test_nodes(&train, &test) {
            prop_assert_eq!(train.degree(v), 0);
            prop_assert!(test.edges.iter().any(|e| e.src == v || e.dst == v));
        }
    }

    #[test]
    fn edge_list_round_trips(pairs in arb_pairs(), seed: u64) {
        let g = graph_from_pairs(&pairs);
        let (train, _) = split_edges(&g, 0.5, seed);
        let mut buf = Vec::new();
        train.write_edge_list(&mut buf).unwrap();
        let (reloaded, stats) =
            load_edge_list_from(buf.as_slice(), &PathBuf::from("<rt>"), false, "e").unwrap();
        prop_assert_eq!(stats.duplicates_collapsed, 0);
        prop_assert_eq!(stats.self_loops_skipped, 0);
        let key = |g: &Graph| -> BTreeSet<(String, String)> {
            g.edges()
                .iter()
                .map(|e| {
                    let a = g.label(e.src).to_string();
                    let b = g.label(e.dst).to_string();
                    (a.clone().min(b.clone()), a.max(b))
                })
                .collect()
        };
        prop_assert_eq!(key(&train), key(&reloaded));
    }

    #[test]
    fn vocabulary_is_deterministic_and_bounded(corpus in arb_corpus(), max_size in 1usize..30) {
        let a = Vocabulary::build(corpus.iter().map(|s| s.as_str()), max_size);
        let b = Vocabulary::build(corpus.iter().map(|s| s.as_str()), max_size);
        prop_assert_eq!(a.token(0), "<UNK>");
        prop_assert!(a.len() <= max_size + 1);
        for id in 0..a.len() as u32 {
            prop_assert_eq!(a.token(id), b.token(id));
            if id > 0 {
                prop_assert_eq!(a.id(a.token(id)), Some(id));
            }
        }
    }

    #[test]
    fn encoded_sequences_stay_in_vocabulary(corpus in arb_corpus(), text in "[a-g ]{0,30}", max_len in 1usize..12) {
        let vocab = Vocabulary::build(corpus.iter().map(|s| s.as_str()), 20);
        let ids = encode_sequence(&vocab, &text, max_len);
        prop_assert!(!ids.is_empty() && ids.len() <= max_len);
        prop_assert!(ids.iter().all(|&id| (id as usize) < vocab.len()));
    }

    #[test]
    fn walks_follow_edges(pairs in arb_pairs(), start in 0u8..12, l in 1usize..12, seed: u64) {
        let g = graph_from_pairs(&pairs);
        let start = start as NodeId % g.node_count() as NodeId;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let walk = random_walk(&g, start, l, 0, &mut rng);
        prop_assert!(!walk.is_empty() && walk.len() <= l);
        prop_assert_eq!(walk[0], start);
        for step in walk.windows(2) {
            prop_assert!(g.neighbors(0, step[0]).contains(&step[1]));
        }
    }

    #[test]
    fn window_pairs_are_bounded_and_drawn_from_the_walk(walk in prop::collection::vec(0u32..8, 1..12), w in 1usize..4) {
        let pairs = window_pairs(&walk, w);
        prop_assert!(pairs.len() <= 2 * walk.len() * w);
        let members: BTreeSet<u32> = walk.iter().copied().collect();
        for (a, b) in pairs {
            prop_assert!(a != b);
            prop_assert!(members.contains(&a) && members.contains(&b));
        }
    }

    #[test]
    fn negatives_come_from_the_node_list(nodes in prop::collection::vec(0u32..500, 1..40), k in 1usize..10, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let negs = sample_negatives(&nodes, k, &mut rng);
        prop_assert_eq!(negs.len(), k);
        let members: BTreeSet<u32> = nodes.iter().copied().collect();
        prop_assert!(negs.iter().all(|n| members.contains(n)));
    }

    #[test]
    fn gru_states_stay_in_the_unit_box(seed: u64, ids in prop::collection::vec(0u32..6, 1..12)) {
        // h starts at 0 and every update is a convex mix with tanh output
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = EmbeddingTable::init(6, 3, &mut rng);
        let params = GruParams::init(3, 4, &mut rng);
        let (out, _) = gru_forward(&params, &table, &ids);
        prop_assert!(out.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn sum_pooling_ignores_order(seed: u64, ids in prop::collection::vec(0u32..6, 1..12), swap in (0usize..12, 0usize..12)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = EmbeddingTable::init(6, 3, &mut rng);
        let a = pool_forward(EncoderKind::Sum, &table, &ids);
        let mut shuffled = ids.clone();
        let (i, j) = (swap.0 % ids.len(), swap.1 % ids.len());
        shuffled.swap(i, j);
        let b = pool_forward(EncoderKind::Sum, &table, &shuffled);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn precision_recall_counts_are_integral_and_monotone(
        ranked in prop::collection::vec(0u32..30, 1..30),
        truth in prop::collection::btree_set(0u32..30, 1..10),
    ) {
        let mut dedup = Vec::new();
        for v in ranked {
            if !dedup.contains(&v) {
                dedup.push(v);
            }
        }
        let mut prev_hits = 0.0;
        for k in 1..=dedup.len() {
            let (p, r) = precision_recall_at_k(&dedup, &truth, k);
            let hits = p * k as f64;
            prop_assert!((hits - hits.round()).abs() < 1e-9);
            prop_assert!((r * truth.len() as f64 - hits).abs() < 1e-9);
            prop_assert!(hits + 1e-9 >= prev_hits);
            prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&r));
            prev_hits = hits;
        }
    }

    #[test]
    fn histogram_counts_every_rank(ranks in prop::collection::vec(0usize..5000, 0..60)) {
        let counts = rank_histogram(&ranks, &DEFAULT_RANK_BUCKETS);
        prop_assert_eq!(counts.iter().sum::<u64>(), ranks.len() as u64);
    }

    #[test]
    fn cosine_is_bounded_and_reflexive(x in prop::collection::vec(-5.0f64..5.0, 2..6)) {
        let y: Vec<f64> = x.iter().rev().copied().collect();
        let c = cosine(&x, &y);
        prop_assert!(c.abs() <= 1.0 + 1e-12);
        if x.iter().any(|v| v.abs() > 1e-6) {
            prop_assert!((cosine(&x, &x) - 1.0).abs() < 1e-12);
        }
    }
}
