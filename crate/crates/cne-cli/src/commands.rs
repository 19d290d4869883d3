//! Subcommand implementations. Each one resolves its inputs, does the
//! work through the library, and overwrites its declared outputs.
//!
//! `train` and `eval` never exchange a split file: both re-derive the
//! identical edge holdout from (seed, holdout fraction), so a checkpoint
//! plus its config reproduces the exact evaluation setting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cne_core::derive_seed;
use cne_core::encoder::{EncoderKind, EncoderSpec};
use cne_core::evaluator::{embed_all, evaluate_lp, EvalOptions};
use cne_core::graph::{load_edge_list, load_node_attributes, split_edges, EdgeSet, Graph};
use cne_core::sampler::random_walk;
use cne_core::text::{AttrStore, Vocabulary};
use cne_core::trainer::{
    load_checkpoint, save_checkpoint, train, write_loss_csv, ModelState, PairSpec, TrainConfig,
};
use cne_core::NodeId;

use crate::config::RunConfig;

/// Edge type recorded for two-column edge lists.
const DEFAULT_EDGE_TYPE: &str = "link";

fn load_graph(cfg: &RunConfig) -> Result<Graph> {
    let path = cfg.require_input("edges")?;
    let (g, stats) = load_edge_list(path, cfg.directed, DEFAULT_EDGE_TYPE)?;
    if stats.self_loops_skipped > 0 || stats.duplicates_collapsed > 0 {
        eprintln!(
            "cne: note: skipped {} self-loops, collapsed {} duplicate edges",
            stats.self_loops_skipped, stats.duplicates_collapsed
        );
    }
    if g.node_count() == 0 {
        bail!("edge list {} contains no edges", path.display());
    }
    Ok(g)
}

fn split(cfg: &RunConfig, g: &Graph) -> (Graph, EdgeSet) {
    split_edges(g, cfg.holdout, derive_seed(cfg.seed, "edge-split", &[]))
}

fn encoder_spec(cfg: &RunConfig) -> EncoderSpec {
    match cfg.encoder {
        EncoderKind::MultiGruSum => {
            EncoderSpec::multi(cfg.dim, cfg.hidden, cfg.subencoders, cfg.shared_subencoders)
        }
        kind => EncoderSpec::new(kind, cfg.dim, cfg.hidden),
    }
}

fn pair_arity(state: &ModelState, edge_type: Option<&str>) -> Result<usize> {
    let (_, pair) = state.resolve_pair(edge_type)?;
    Ok(pair.phi1.spec.arity().max(pair.phi2().spec.arity()))
}

fn create_output(cfg: &RunConfig, path: &Path) -> Result<BufWriter<File>> {
    let file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(cfg.header_comment().as_bytes())?;
    Ok(w)
}

pub fn build_vocab(cfg: &RunConfig) -> Result<()> {
    let attr_path = cfg.require_input("attributes")?;
    let path = cfg.require_path("vocab")?;
    let attr_file = load_node_attributes(attr_path)?;
    let vocab = Vocabulary::build(
        attr_file.text.values().map(|s| s.as_str()),
        cfg.vocab_size,
    );
    // the vocabulary format is positional (line number = token id + 1),
    // so it carries no provenance header
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    vocab.write_to(&mut w)?;
    w.flush()?;
    println!(
        "wrote {} tokens ({} attribute rows) to {}",
        vocab.len(),
        attr_file.text.len(),
        path.display()
    );
    Ok(())
}

fn resolve_graph_edge_type(g: &Graph, cfg: &RunConfig) -> Result<(String, u32)> {
    match &cfg.edge_type {
        Some(name) => {
            let id = g
                .edge_type_id(name)
                .with_context(|| format!("edge type {name:?} not present in the edge list"))?;
            Ok((name.clone(), id))
        }
        None => {
            let names = g.edge_type_names();
            if names.len() != 1 {
                bail!(
                    "edge list has {} edge types; pick one with --edge-type",
                    names.len()
                );
            }
            Ok((names[0].clone(), 0))
        }
    }
}

pub fn walk(cfg: &RunConfig) -> Result<()> {
    let path = cfg.require_path("output")?;
    let g = load_graph(cfg)?;
    let (_, tid) = resolve_graph_edge_type(&g, cfg)?;
    let mut w = create_output(cfg, path)?;
    let mut count = 0usize;
    for v in g.nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            cfg.seed,
            "walk-node",
            &[tid as u64, v as u64],
        ));
        for _ in 0..cfg.walks_per_node {
            let walk = random_walk(&g, v, cfg.walk_length, tid, &mut rng);
            let labels: Vec<&str> = walk.iter().map(|&n| g.label(n)).collect();
            writeln!(w, "{}", labels.join("\t"))?;
            count += 1;
        }
    }
    w.flush()?;
    println!("wrote {count} walks to {}", path.display());
    Ok(())
}

pub fn train_model(cfg: &RunConfig) -> Result<()> {
    let vocab_path = cfg.require_input("vocab")?;
    let attr_path = cfg.require_input("attributes")?;
    let ckpt = cfg.require_path("checkpoint")?;
    let loss_path = cfg.require_path("output")?;
    let g = load_graph(cfg)?;
    let vocab = Vocabulary::read_file(vocab_path)?;
    let attr_file = load_node_attributes(attr_path)?;
    let (train_g, test) = split(cfg, &g);

    let spec = encoder_spec(cfg);
    let attrs = AttrStore::build(
        train_g.labels(),
        &attr_file.text,
        &vocab,
        spec.arity(),
        cfg.max_seq_len,
    );
    if attrs.fallback_nodes > 0 {
        eprintln!(
            "cne: note: {} of {} nodes have no attribute text; using <UNK>",
            attrs.fallback_nodes,
            train_g.node_count()
        );
    }

    let specs: Vec<PairSpec> = train_g
        .edge_type_names()
        .iter()
        .map(|name| PairSpec::uniform(name, spec, cfg.share_phi))
        .collect();
    let tc = TrainConfig {
        l: cfg.walk_length,
        w: cfg.window,
        k: cfg.negatives,
        r: cfg.walks_per_node,
        margin: cfg.margin,
        d: cfg.dim,
        h: cfg.hidden,
        lr: cfg.lr,
        batch: cfg.batch,
        epochs: cfg.epochs,
        seed: cfg.seed,
        share_phi: cfg.share_phi,
        edge_type_weights: cfg.edge_type_weights.clone(),
    };

    let (state, losses) = train(&tc, &train_g, &attrs, &specs)?;

    save_checkpoint(&state, ckpt)?;
    let mut w = create_output(cfg, loss_path)?;
    write_loss_csv(&losses, &mut w)?;
    w.flush()?;
    println!(
        "trained {} steps on {} edges ({} held out); checkpoint {}, losses {}",
        state.step,
        train_g.edges().len(),
        test.edges.len(),
        ckpt.display(),
        loss_path.display()
    );
    Ok(())
}

pub fn embed(cfg: &RunConfig) -> Result<()> {
    let ckpt = cfg.require_input("checkpoint")?;
    let vocab_path = cfg.require_input("vocab")?;
    let attr_path = cfg.require_input("attributes")?;
    let path = cfg.require_path("output")?;
    let state = load_checkpoint(ckpt)?;
    let vocab = Vocabulary::read_file(vocab_path)?;
    let attr_file = load_node_attributes(attr_path)?;

    // every node in the attribute file gets a row, trained on or not;
    // embeddings are a pure function of attributes and the checkpoint
    let labels: Vec<String> = attr_file.text.keys().cloned().collect();
    let arity = pair_arity(&state, cfg.edge_type.as_deref())?;
    let attrs = AttrStore::build(&labels, &attr_file.text, &vocab, arity, cfg.max_seq_len);
    let ids: Vec<NodeId> = (0..labels.len() as NodeId).collect();
    let matrix = embed_all(&state, &ids, &attrs, cfg.edge_type.as_deref(), cfg.side)?;

    let mut w = create_output(cfg, path)?;
    for (i, label) in labels.iter().enumerate() {
        let row = matrix.row(i as NodeId).unwrap();
        let mut line = String::with_capacity(row.len() * 16);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.8e}"));
        }
        writeln!(w, "{label}\t{line}")?;
    }
    w.flush()?;
    println!(
        "wrote {} embeddings of width {} to {}",
        labels.len(),
        matrix.width(),
        path.display()
    );
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    let ckpt = cfg.require_input("checkpoint")?;
    let vocab_path = cfg.require_input("vocab")?;
    let attr_path = cfg.require_input("attributes")?;
    let path = cfg.require_path("output")?;
    let g = load_graph(cfg)?;
    let state = load_checkpoint(ckpt)?;
    let vocab = Vocabulary::read_file(vocab_path)?;
    let attr_file = load_node_attributes(attr_path)?;
    let (train_g, test) = split(cfg, &g);
    if test.edges.is_empty() {
        bail!("holdout {} leaves nothing to evaluate", cfg.holdout);
    }

    let arity = pair_arity(&state, cfg.edge_type.as_deref())?;
    let attrs = AttrStore::build(
        train_g.labels(),
        &attr_file.text,
        &vocab,
        arity,
        cfg.max_seq_len,
    );
    let opts = EvalOptions {
        ks: cfg.ks.clone(),
        sample_nodes: cfg.sample_nodes,
        seed: cfg.seed,
        edge_type: cfg.edge_type.clone(),
        sides: cfg.side,
    };
    let report = evaluate_lp(&state, &train_g, &test, &attrs, &opts)?;

    let mut w = create_output(cfg, path)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "evaluated {} test nodes over {} held-out edges; report {}",
        report.nodes_evaluated,
        test.edges.len(),
        path.display()
    );
    Ok(())
}
