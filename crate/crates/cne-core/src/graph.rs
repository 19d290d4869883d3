//! Attributed graphs: loading, adjacency access, and edge holdout splits.
//!
//! Node labels are interned to dense ids in first-appearance order so the
//! same input file always produces the same indexing. Self-loops are dropped
//! at load time and duplicate edges are collapsed; undirected edges are
//! canonicalized to `(min, max)` so `a b` and `b a` count as one edge.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type NodeId = u32;
pub type EdgeTypeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub edge_type: EdgeTypeId,
}

/// Counters for conditions tolerated (but reported) during loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub self_loops_skipped: usize,
    pub duplicates_collapsed: usize,
}

/// Immutable attributed graph. Safe to share across threads once built.
#[derive(Debug, Clone)]
pub struct Graph {
    directed: bool,
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    node_types: Vec<String>,
    edge_type_names: Vec<String>,
    edges: Vec<Edge>,
    /// adj[edge_type][node] = sorted out-neighbors (symmetric when undirected)
    adj: Vec<Vec<Vec<NodeId>>>,
}

pub struct GraphBuilder {
    directed: bool,
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    edge_type_names: Vec<String>,
    edge_type_index: HashMap<String, EdgeTypeId>,
    raw_edges: Vec<Edge>,
    self_loops_skipped: usize,
}

impl GraphBuilder {
    pub fn new(directed: bool) -> Self {
        GraphBuilder {
            directed,
            labels: Vec::new(),
            index: HashMap::new(),
            edge_type_names: Vec::new(),
            edge_type_index: HashMap::new(),
            raw_edges: Vec::new(),
            self_loops_skipped: 0,
        }
    }

    pub fn intern_node(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as NodeId;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn intern_edge_type(&mut self, label: &str) -> EdgeTypeId {
        if let Some(&id) = self.edge_type_index.get(label) {
            return id;
        }
        let id = self.edge_type_names.len() as EdgeTypeId;
        self.edge_type_names.push(label.to_string());
        self.edge_type_index.insert(label.to_string(), id);
        id
    }

    pub fn add_edge(&mut self, src: &str, dst: &str, edge_type: &str) {
        let s = self.intern_node(src);
        let d = self.intern_node(dst);
        let t = self.intern_edge_type(edge_type);
        if s == d {
            self.self_loops_skipped += 1;
            return;
        }
        self.raw_edges.push(Edge {
            src: s,
            dst: d,
            edge_type: t,
        });
    }

    pub fn finish(self) -> (Graph, LoadStats) {
        let n = self.labels.len();
        let mut seen = BTreeSet::new();
        let mut edges = Vec::new();
        let mut duplicates = 0usize;
        for e in &self.raw_edges {
            let key = if self.directed {
                (e.edge_type, e.src, e.dst)
            } else {
                (e.edge_type, e.src.min(e.dst), e.src.max(e.dst))
            };
            if seen.insert(key) {
                edges.push(Edge {
                    src: key.1,
                    dst: key.2,
                    edge_type: key.0,
                });
            } else {
                duplicates += 1;
            }
        }
        let adj = build_adjacency(n, self.edge_type_names.len(), &edges, self.directed);
        let g = Graph {
            directed: self.directed,
            labels: self.labels,
            index: self.index,
            node_types: vec![String::new(); n],
            edge_type_names: self.edge_type_names,
            edges,
            adj,
        };
        let stats = LoadStats {
            self_loops_skipped: self.self_loops_skipped,
            duplicates_collapsed: duplicates,
        };
        (g, stats)
    }
}

fn build_adjacency(
    n: usize,
    edge_types: usize,
    edges: &[Edge],
    directed: bool,
) -> Vec<Vec<Vec<NodeId>>> {
    let mut adj = vec![vec![Vec::new(); n]; edge_types.max(1)];
    for e in edges {
        adj[e.edge_type as usize][e.src as usize].push(e.dst);
        if !directed {
            adj[e.edge_type as usize][e.dst as usize].push(e.src);
        }
    }
    for per_type in &mut adj {
        for list in per_type {
            list.sort_unstable();
            list.dedup();
        }
    }
    adj
}

impl Graph {
    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        0..self.labels.len() as NodeId
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_id(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn node_type(&self, v: NodeId) -> &str {
        &self.node_types[v as usize]
    }

    pub fn set_node_type(&mut self, v: NodeId, ty: &str) {
        self.node_types[v as usize] = ty.to_string();
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_type_names(&self) -> &[String] {
        &self.edge_type_names
    }

    pub fn edge_type_id(&self, name: &str) -> Option<EdgeTypeId> {
        self.edge_type_names
            .iter()
            .position(|n| n == name)
            .map(|i| i as EdgeTypeId)
    }

    pub fn edge_count(&self, edge_type: EdgeTypeId) -> usize {
        self.edges
            .iter()
            .filter(|e| e.edge_type == edge_type)
            .count()
    }

    /// Out-neighbors of `v` for one edge type (both directions when undirected).
    pub fn neighbors(&self, edge_type: EdgeTypeId, v: NodeId) -> &[NodeId] {
        &self.adj[edge_type as usize][v as usize]
    }

    /// Degree across all edge types; for directed graphs counts both
    /// incoming and outgoing edges.
    pub fn degree(&self, v: NodeId) -> usize {
        self.edges
            .iter()
            .filter(|e| e.src == v || e.dst == v)
            .count()
    }

    /// Removes the edges at `holdout` indices, keeping every node.
    fn without_edges(&self, holdout: &BTreeSet<usize>) -> Graph {
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !holdout.contains(i))
            .map(|(_, e)| *e)
            .collect();
        let adj = build_adjacency(
            self.labels.len(),
            self.edge_type_names.len(),
            &edges,
            self.directed,
        );
        Graph {
            directed: self.directed,
            labels: self.labels.clone(),
            index: self.index.clone(),
            node_types: self.node_types.clone(),
            edge_type_names: self.edge_type_names.clone(),
            edges,
            adj,
        }
    }

    pub fn write_edge_list(&self, mut w: impl Write) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.labels[e.src as usize],
                self.labels[e.dst as usize],
                self.edge_type_names[e.edge_type as usize]
            )?;
        }
        Ok(())
    }
}

/// Edges held out of a training graph.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    pub edges: Vec<Edge>,
    pub role: String,
}

impl EdgeSet {
    pub fn write_tsv(&self, g: &Graph, mut w: impl Write) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(
                w,
                "{}\t{}\t{}",
                g.label(e.src),
                g.label(e.dst),
                g.edge_type_names()[e.edge_type as usize]
            )?;
        }
        Ok(())
    }
}

/// Loads a tab-separated edge list: `src<TAB>dst[<TAB>edge_type]`.
///
/// Lines starting with `#` and blank lines are skipped. Self-loops are
/// dropped and duplicates collapsed; both are counted in the returned stats.
pub fn load_edge_list(
    path: impl AsRef<Path>,
    directed: bool,
    default_edge_type: &str,
) -> Result<(Graph, LoadStats)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_edge_list_from(BufReader::new(file), path, directed, default_edge_type)
}

pub fn load_edge_list_from(
    reader: impl Read,
    path: &Path,
    directed: bool,
    default_edge_type: &str,
) -> Result<(Graph, LoadStats)> {
    let mut builder = GraphBuilder::new(directed);
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 2 or 3 tab-separated fields, got {}", fields.len()),
            ));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::parse(path, lineno, "empty field"));
        }
        let edge_type = if fields.len() == 3 {
            fields[2]
        } else {
            default_edge_type
        };
        builder.add_edge(fields[0], fields[1], edge_type);
    }
    Ok(builder.finish())
}

/// Result of [`load_node_attributes`]: label → raw text, plus how many
/// labels were overwritten by a later line.
#[derive(Debug, Clone, Default)]
pub struct AttributeFile {
    pub text: BTreeMap<String, String>,
    pub overwritten: usize,
}

/// Loads `node_label<TAB>free text` lines; later duplicates win.
pub fn load_node_attributes(path: impl AsRef<Path>) -> Result<AttributeFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_node_attributes_from(BufReader::new(file), path)
}

pub fn load_node_attributes_from(reader: impl Read, path: &Path) -> Result<AttributeFile> {
    let mut out = AttributeFile::default();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((label, text)) = trimmed.split_once('\t') else {
            return Err(Error::parse(path, lineno, "missing tab separator"));
        };
        if label.is_empty() {
            return Err(Error::parse(path, lineno, "empty node label"));
        }
        if out
            .text
            .insert(label.to_string(), text.to_string())
            .is_some()
        {
            out.overwritten += 1;
        }
    }
    Ok(out)
}

/// Uniformly holds out `round(holdout_fraction * |E|)` edges.
///
/// The training graph keeps the full node set, so isolated nodes remain
/// available as ranking candidates and negative samples. Deterministic for
/// a fixed seed.
pub fn split_edges(g: &Graph, holdout_fraction: f64, seed: u64) -> (Graph, EdgeSet) {
    assert!(
        (0.0..=1.0).contains(&holdout_fraction),
        "holdout_fraction must be in [0, 1]"
    );
    let total = g.edges().len();
    let count = (holdout_fraction * total as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, total, count).into_vec();
    picked.sort_unstable();
    let holdout: BTreeSet<usize> = picked.iter().copied().collect();
    let test_edges: Vec<Edge> = picked.iter().map(|&i| g.edges()[i]).collect();
    let train = g.without_edges(&holdout);
    let test = EdgeSet {
        edges: test_edges,
        role: "test".to_string(),
    };
    (train, test)
}

/// Holds out every edge incident to `nodes`, leaving them with training
/// degree zero while keeping them in the node set. The removed edges
/// become the test set.
pub fn hold_out_nodes(g: &Graph, nodes: &BTreeSet<NodeId>) -> (Graph, EdgeSet) {
    let holdout: BTreeSet<usize> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| nodes.contains(&e.src) || nodes.contains(&e.dst))
        .map(|(i, _)| i)
        .collect();
    let test_edges: Vec<Edge> = holdout.iter().map(|&i| g.edges()[i]).collect();
    let train = g.without_edges(&holdout);
    let test = EdgeSet {
        edges: test_edges,
        role: "test".to_string(),
    };
    (train, test)
}

/// Nodes incident to test edges whose degree in the training graph is zero.
pub fn unseen_test_nodes(train: &Graph, test: &EdgeSet) -> BTreeSet<NodeId> {
    let mut incident = BTreeSet::new();
    for e in &test.edges {
        incident.insert(e.src);
        incident.insert(e.dst);
    }
    incident.retain(|&v| train.degree(v) == 0);
    incident
}
