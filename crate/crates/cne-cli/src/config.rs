//! Run configuration: paper defaults, a flat key=value file, and flag
//! overrides, merged in that order (flags win). `CNE_SEED` sits below all
//! of them as a last-resort seed source.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cne_core::encoder::EncoderKind;
use cne_core::evaluator::EvalSides;
use cne_core::fnv1a64;

#[derive(Parser, Debug)]
#[command(
    name = "cne",
    version,
    about = "Inductive node embeddings composed from attribute tokens"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Build a frequency vocabulary from the attribute file
    BuildVocab,
    /// Dump truncated random walks, one walk of node labels per line
    Walk,
    /// Train encoders plus the shared token table; writes checkpoint and loss CSV
    Train,
    /// Write `label<TAB>v1,v2,...` embeddings for every node in the attribute file
    Embed,
    /// Rank held-out edges against the whole node set; writes a report CSV
    Eval,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BuildVocab => "build-vocab",
            Command::Walk => "walk",
            Command::Train => "train",
            Command::Embed => "embed",
            Command::Eval => "eval",
        }
    }
}

/// Optional values only; `None` means "no override at this layer".
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// flat key=value config file; flags override its entries
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// tab-separated edge list: src, dst, optional edge type
    #[arg(long, global = true, value_name = "FILE")]
    pub edges: Option<PathBuf>,

    /// tab-separated node attributes: label, text
    #[arg(long, global = true, value_name = "FILE")]
    pub attributes: Option<PathBuf>,

    /// vocabulary file (one token per line, <UNK> first)
    #[arg(long, global = true, value_name = "FILE")]
    pub vocab: Option<PathBuf>,

    /// model checkpoint path
    #[arg(long, global = true, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,

    /// main output path of the subcommand
    #[arg(long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// treat edges as directed
    #[arg(long, global = true, value_name = "BOOL")]
    pub directed: Option<bool>,

    /// composition function: sum, mean, gru or multi_gru_sum
    #[arg(long, global = true, value_name = "KIND")]
    pub encoder: Option<EncoderKind>,

    /// token embedding width
    #[arg(long, global = true, value_name = "N")]
    pub dim: Option<usize>,

    /// GRU hidden width
    #[arg(long, global = true, value_name = "N")]
    pub hidden: Option<usize>,

    /// sub-encoder count for multi_gru_sum
    #[arg(long, global = true, value_name = "N")]
    pub subencoders: Option<usize>,

    /// share one GRU across multi_gru_sum sub-encoders
    #[arg(long, global = true, value_name = "BOOL")]
    pub shared_subencoders: Option<bool>,

    /// use one tower for both sides of the score
    #[arg(long, global = true, value_name = "BOOL")]
    pub share_phi: Option<bool>,

    /// max nodes per random walk
    #[arg(long, global = true, value_name = "N")]
    pub walk_length: Option<usize>,

    /// positive-pair window within a walk
    #[arg(long, global = true, value_name = "N")]
    pub window: Option<usize>,

    /// negative samples per positive pair
    #[arg(long, global = true, value_name = "N")]
    pub negatives: Option<usize>,

    /// walks started from each node per epoch
    #[arg(long, global = true, value_name = "N")]
    pub walks_per_node: Option<usize>,

    /// hinge margin
    #[arg(long, global = true, value_name = "X")]
    pub margin: Option<f64>,

    /// Adam learning rate
    #[arg(long, global = true, value_name = "X")]
    pub lr: Option<f64>,

    /// examples per optimizer step
    #[arg(long, global = true, value_name = "N")]
    pub batch: Option<usize>,

    #[arg(long, global = true, value_name = "N")]
    pub epochs: Option<usize>,

    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// kept vocabulary entries, excluding <UNK>
    #[arg(long, global = true, value_name = "N")]
    pub vocab_size: Option<usize>,

    /// token sequence truncation length
    #[arg(long, global = true, value_name = "N")]
    pub max_seq_len: Option<usize>,

    /// fraction of edges held out for evaluation
    #[arg(long, global = true, value_name = "X")]
    pub holdout: Option<f64>,

    /// test nodes sampled per evaluation
    #[arg(long, global = true, value_name = "N")]
    pub sample_nodes: Option<usize>,

    /// comma-separated ranking cutoffs, e.g. 1,5,10
    #[arg(long, global = true, value_name = "LIST")]
    pub ks: Option<String>,

    /// edge type to operate on (defaults to the only one)
    #[arg(long, global = true, value_name = "NAME")]
    pub edge_type: Option<String>,

    /// embedding side: phi1, phi2 or average
    #[arg(long, global = true, value_name = "SIDE")]
    pub side: Option<EvalSides>,

    /// batch interleaving weights, e.g. click:3,purchase:1
    #[arg(long, global = true, value_name = "LIST")]
    pub edge_type_weights: Option<String>,

    /// rayon worker cap; 0 leaves the default (never changes results)
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub edges: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub directed: bool,
    pub encoder: EncoderKind,
    pub dim: usize,
    pub hidden: usize,
    pub subencoders: usize,
    pub shared_subencoders: bool,
    pub share_phi: bool,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub walks_per_node: usize,
    pub margin: f64,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub holdout: f64,
    pub sample_nodes: usize,
    pub ks: Vec<usize>,
    pub edge_type: Option<String>,
    pub side: EvalSides,
    pub edge_type_weights: BTreeMap<String, f64>,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            edges: None,
            attributes: None,
            vocab: None,
            checkpoint: None,
            output: None,
            directed: false,
            encoder: EncoderKind::Gru,
            dim: 256,
            hidden: 512,
            subencoders: 1,
            shared_subencoders: true,
            share_phi: false,
            walk_length: 20,
            window: 2,
            negatives: 4,
            walks_per_node: 10,
            margin: 1.0,
            lr: 8e-4,
            batch: 256,
            epochs: 5,
            seed: 0,
            vocab_size: 40_000,
            max_seq_len: 64,
            holdout: 0.2,
            sample_nodes: 1000,
            ks: vec![10],
            edge_type: None,
            side: EvalSides::Phi1,
            edge_type_weights: BTreeMap::new(),
            workers: 0,
        }
    }
}

fn parse_ks(value: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = value
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| anyhow!("{e}")))
        .collect::<Result<_>>()?;
    if ks.is_empty() || ks.iter().any(|&k| k == 0) {
        bail!("cutoffs must be positive integers");
    }
    Ok(ks)
}

fn parse_weights(value: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for part in value.split(',') {
        let (name, w) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("expected name:weight, got {part:?}"))?;
        let w: f64 = w.trim().parse().map_err(|e| anyhow!("{e}"))?;
        if !(w > 0.0) {
            bail!("weight for {name:?} must be positive");
        }
        out.insert(name.trim().to_string(), w);
    }
    Ok(out)
}

impl RunConfig {
    /// One key=value assignment from the config file.
    fn apply_entry(&mut self, key: &str, value: &str) -> Result<()> {
        fn v<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse::<T>()
                .map_err(|e| anyhow!("invalid value {value:?} for {key:?}: {e}"))
        }

        match key {
            "edges" => self.edges = Some(PathBuf::from(value)),
            "attributes" => self.attributes = Some(PathBuf::from(value)),
            "vocab" => self.vocab = Some(PathBuf::from(value)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            "directed" => self.directed = v(key, value)?,
            "encoder" => self.encoder = v(key, value)?,
            "dim" => self.dim = v(key, value)?,
            "hidden" => self.hidden = v(key, value)?,
            "subencoders" => self.subencoders = v(key, value)?,
            "shared_subencoders" => self.shared_subencoders = v(key, value)?,
            "share_phi" => self.share_phi = v(key, value)?,
            "walk_length" => self.walk_length = v(key, value)?,
            "window" => self.window = v(key, value)?,
            "negatives" => self.negatives = v(key, value)?,
            "walks_per_node" => self.walks_per_node = v(key, value)?,
            "margin" => self.margin = v(key, value)?,
            "lr" => self.lr = v(key, value)?,
            "batch" => self.batch = v(key, value)?,
            "epochs" => self.epochs = v(key, value)?,
            "seed" => self.seed = v(key, value)?,
            "vocab_size" => self.vocab_size = v(key, value)?,
            "max_seq_len" => self.max_seq_len = v(key, value)?,
            "holdout" => self.holdout = v(key, value)?,
            "sample_nodes" => self.sample_nodes = v(key, value)?,
            "ks" => self.ks = parse_ks(value).context("invalid value for \"ks\"")?,
            "edge_type" => self.edge_type = Some(value.to_string()),
            "side" => self.side = value.parse().map_err(|e| anyhow!("{e}"))?,
            "edge_type_weights" => {
                self.edge_type_weights =
                    parse_weights(value).context("invalid value for \"edge_type_weights\"")?
            }
            "workers" => self.workers = v(key, value)?,
            other => bail!("unknown key {other:?}"),
        }
        Ok(())
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!("{} line {}: expected key=value", path.display(), i + 1)
            })?;
            self.apply_entry(key.trim(), value.trim())
                .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        }
        Ok(())
    }

    fn apply_overrides(&mut self, o: &Overrides) -> Result<()> {
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = &o.$field {
                    self.$field = v.clone();
                }
            };
        }
        // path fields stay optional in the resolved config, so overrides
        // replace the whole Option
        macro_rules! set_path {
            ($field:ident) => {
                if o.$field.is_some() {
                    self.$field = o.$field.clone();
                }
            };
        }
        set_path!(edges);
        set_path!(attributes);
        set_path!(vocab);
        set_path!(checkpoint);
        set_path!(output);
        set!(directed);
        set!(encoder);
        set!(dim);
        set!(hidden);
        set!(subencoders);
        set!(shared_subencoders);
        set!(share_phi);
        set!(walk_length);
        set!(window);
        set!(negatives);
        set!(walks_per_node);
        set!(margin);
        set!(lr);
        set!(batch);
        set!(epochs);
        set!(seed);
        set!(vocab_size);
        set!(max_seq_len);
        set!(holdout);
        set!(sample_nodes);
        set!(workers);
        if let Some(ks) = &o.ks {
            self.ks = parse_ks(ks).context("invalid value for \"--ks\"")?;
        }
        if let Some(t) = &o.edge_type {
            self.edge_type = Some(t.clone());
        }
        if let Some(s) = o.side {
            self.side = s;
        }
        if let Some(w) = &o.edge_type_weights {
            self.edge_type_weights =
                parse_weights(w).context("invalid value for \"--edge-type-weights\"")?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.walk_length < 1
            || self.window < 1
            || self.negatives < 1
            || self.batch < 1
            || self.dim < 1
            || self.hidden < 1
            || self.subencoders < 1
            || self.max_seq_len < 1
        {
            bail!("counts and widths must be at least 1");
        }
        if !(self.margin > 0.0) {
            bail!("margin must be positive");
        }
        if !(self.lr > 0.0) {
            bail!("lr must be positive");
        }
        if !(0.0..=1.0).contains(&self.holdout) {
            bail!("holdout must be within [0, 1]");
        }
        if self.encoder != EncoderKind::MultiGruSum && self.subencoders != 1 {
            bail!("subencoders only applies to encoder=multi_gru_sum");
        }
        Ok(())
    }

    /// FNV-1a over the sorted hyperparameter assignments. Paths and the
    /// worker cap are excluded: they never influence computed values, and
    /// the hash ties outputs to the model configuration alone.
    pub fn config_hash(&self) -> u64 {
        let mut entries: Vec<(String, String)> = vec![
            ("directed".into(), self.directed.to_string()),
            ("encoder".into(), self.encoder.to_string()),
            ("dim".into(), self.dim.to_string()),
            ("hidden".into(), self.hidden.to_string()),
            ("subencoders".into(), self.subencoders.to_string()),
            (
                "shared_subencoders".into(),
                self.shared_subencoders.to_string(),
            ),
            ("share_phi".into(), self.share_phi.to_string()),
            ("walk_length".into(), self.walk_length.to_string()),
            ("window".into(), self.window.to_string()),
            ("negatives".into(), self.negatives.to_string()),
            ("walks_per_node".into(), self.walks_per_node.to_string()),
            ("margin".into(), self.margin.to_string()),
            ("lr".into(), self.lr.to_string()),
            ("batch".into(), self.batch.to_string()),
            ("epochs".into(), self.epochs.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("vocab_size".into(), self.vocab_size.to_string()),
            ("max_seq_len".into(), self.max_seq_len.to_string()),
            ("holdout".into(), self.holdout.to_string()),
            ("sample_nodes".into(), self.sample_nodes.to_string()),
            (
                "ks".into(),
                self.ks
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            (
                "edge_type".into(),
                self.edge_type.clone().unwrap_or_default(),
            ),
            ("side".into(), self.side.to_string()),
            (
                "edge_type_weights".into(),
                self.edge_type_weights
                    .iter()
                    .map(|(k, v)| format!("{k}:{v}"))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
        ];
        entries.sort();
        let mut canonical = String::new();
        for (k, v) in entries {
            let _ = writeln!(canonical, "{k}={v}");
        }
        fnv1a64(canonical.as_bytes())
    }

    /// Provenance line prepended to every text output.
    pub fn header_comment(&self) -> String {
        format!("# config_hash={:016x} seed={}\n", self.config_hash(), self.seed)
    }

    pub fn require_path(&self, key: &str) -> Result<&Path> {
        let stored = match key {
            "edges" => &self.edges,
            "attributes" => &self.attributes,
            "vocab" => &self.vocab,
            "checkpoint" => &self.checkpoint,
            "output" => &self.output,
            other => unreachable!("not a path key: {other}"),
        };
        stored
            .as_deref()
            .ok_or_else(|| anyhow!("missing required path: set --{key} or {key}= in the config"))
    }

    /// Like [`require_path`](Self::require_path), but the file must exist.
    pub fn require_input(&self, key: &str) -> Result<&Path> {
        let path = self.require_path(key)?;
        if !path.is_file() {
            bail!("{key} file {} does not exist", path.display());
        }
        Ok(path)
    }
}

/// Resolves the full configuration: paper defaults, then `CNE_SEED`, then
/// the config file, then flags.
pub fn parse_config(overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Ok(env_seed) = std::env::var("CNE_SEED") {
        cfg.seed = env_seed
            .trim()
            .parse()
            .map_err(|e| anyhow!("invalid CNE_SEED {env_seed:?}: {e}"))?;
    }
    if let Some(path) = &overrides.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_overrides(overrides)?;
    cfg.validate()?;
    Ok(cfg)
}
