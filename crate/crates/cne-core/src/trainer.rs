//! Siamese max-margin training over sampled pairs.
//!
//! Each training example scores a center node v against its positive
//! context u and K uniform negatives:
//!
//!   loss = Σ_k max(0, m − δ(v,u) + δ(v,ū_k)),  δ(a,b) = cos(φ1(A_a), φ2(A_b))
//!
//! φ1 encodes the center, φ2 the context and the negatives. Every encoder
//! pair in a model shares one token-embedding table; multiple edge types
//! get their own pairs and are interleaved proportionally to their weights.
//! Updates are Adam with lazy sparse handling of table rows: a row's
//! moments decay only in steps that touch it, while bias correction always
//! uses the global step counter.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::encoder::{
    compose, compose_backward, merge_rows_scaled, EmbeddingTable, EncoderParams, EncoderSpec,
    GruParams, RowGrads, GRU_TENSOR_NAMES,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{axpy, dot, norm, Mat};
use crate::sampler::{epoch_stream, TrainingExample};
use crate::text::AttrStore;
use crate::{derive_seed, fnv1a64};

pub const COSINE_EPS: f64 = 1e-12;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// ⟨x,y⟩ / (max(‖x‖,ε)·max(‖y‖,ε)); the guard absorbs zero vectors.
pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let nx = norm(x).max(COSINE_EPS);
    let ny = norm(y).max(COSINE_EPS);
    dot(x, y) / (nx * ny)
}

/// Cosine plus its gradients with respect to both inputs. Inside the norm
/// guard the clamped norm is constant, so its term drops out.
fn cosine_grads(x: &[f64], y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    assert_eq!(x.len(), y.len());
    let nx_raw = norm(x);
    let ny_raw = norm(y);
    let nx = nx_raw.max(COSINE_EPS);
    let ny = ny_raw.max(COSINE_EPS);
    let c = dot(x, y) / (nx * ny);
    let gx: Vec<f64> = (0..x.len())
        .map(|i| {
            let mut g = y[i] / (nx * ny);
            if nx_raw > COSINE_EPS {
                g -= c * x[i] / (nx * nx);
            }
            g
        })
        .collect();
    let gy: Vec<f64> = (0..y.len())
        .map(|i| {
            let mut g = x[i] / (nx * ny);
            if ny_raw > COSINE_EPS {
                g -= c * y[i] / (ny * ny);
            }
            g
        })
        .collect();
    (c, gx, gy)
}

/// Σ_k max(0, m − pos + negs[k]).
pub fn hinge_loss(pos: f64, negs: &[f64], m: f64) -> f64 {
    assert!(m > 0.0, "margin must be positive");
    negs.iter().map(|&n| (m - pos + n).max(0.0)).sum()
}

/// One edge type's towers. `phi2: None` means the context tower shares
/// φ1's parameters, which makes δ exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderPair {
    pub phi1: EncoderParams,
    pub phi2: Option<EncoderParams>,
}

impl EncoderPair {
    pub fn phi2(&self) -> &EncoderParams {
        self.phi2.as_ref().unwrap_or(&self.phi1)
    }

    pub fn shares_phi(&self) -> bool {
        self.phi2.is_none()
    }
}

/// Construction recipe for one edge type's encoder pair.
#[derive(Debug, Clone)]
pub struct PairSpec {
    pub edge_type: String,
    pub phi1: EncoderSpec,
    pub phi2: EncoderSpec,
    pub share_phi: bool,
}

impl PairSpec {
    /// Same spec on both sides.
    pub fn uniform(edge_type: &str, spec: EncoderSpec, share_phi: bool) -> PairSpec {
        PairSpec {
            edge_type: edge_type.to_string(),
            phi1: spec,
            phi2: spec,
            share_phi,
        }
    }
}

/// Adam first/second moment buffers keyed by tensor name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub m: BTreeMap<String, Vec<f64>>,
    pub v: BTreeMap<String, Vec<f64>>,
}

impl AdamState {
    fn buffers(&mut self, name: &str, len: usize) -> (&mut [f64], &mut [f64]) {
        let m = self
            .m
            .entry(name.to_string())
            .or_insert_with(|| vec![0.0; len]);
        let v = self
            .v
            .entry(name.to_string())
            .or_insert_with(|| vec![0.0; len]);
        (m, v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub table: EmbeddingTable,
    pub pairs: BTreeMap<String, EncoderPair>,
    pub adam: AdamState,
    pub step: u64,
}

impl ModelState {
    pub fn init(specs: &[PairSpec], vocab_size: usize, seed: u64) -> ModelState {
        assert!(!specs.is_empty(), "at least one encoder pair required");
        let d = specs[0].phi1.d;
        for ps in specs {
            ps.phi1.validate();
            ps.phi2.validate();
            assert_eq!(ps.phi1.d, d, "all encoders share one embedding table");
            assert_eq!(ps.phi2.d, d, "all encoders share one embedding table");
            assert_eq!(
                ps.phi1.output_width(),
                ps.phi2.output_width(),
                "φ1 and φ2 must have equal output widths"
            );
            if ps.share_phi {
                assert_eq!(ps.phi1, ps.phi2, "share_phi needs identical side specs");
            }
        }
        let mut table_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "embedding-table", &[]));
        let table = EmbeddingTable::init(vocab_size, d, &mut table_rng);
        let mut pairs = BTreeMap::new();
        for ps in specs {
            let tag = fnv1a64(ps.edge_type.as_bytes());
            let mut r1 = ChaCha8Rng::seed_from_u64(derive_seed(seed, "phi1", &[tag]));
            let phi1 = EncoderParams::init(ps.phi1, &mut r1);
            let phi2 = if ps.share_phi {
                None
            } else {
                let mut r2 = ChaCha8Rng::seed_from_u64(derive_seed(seed, "phi2", &[tag]));
                Some(EncoderParams::init(ps.phi2, &mut r2))
            };
            pairs.insert(ps.edge_type.clone(), EncoderPair { phi1, phi2 });
        }
        assert_eq!(pairs.len(), specs.len(), "duplicate edge type in specs");
        ModelState {
            table,
            pairs,
            adam: AdamState::default(),
            step: 0,
        }
    }

    /// Looks up an edge type's pair; `None` is allowed only when the model
    /// has exactly one.
    pub fn resolve_pair(&self, edge_type: Option<&str>) -> Result<(&str, &EncoderPair)> {
        match edge_type {
            Some(name) => self
                .pairs
                .get_key_value(name)
                .map(|(k, v)| (k.as_str(), v))
                .ok_or_else(|| Error::UnknownEdgeType {
                    edge_type: name.to_string(),
                }),
            None => {
                if self.pairs.len() == 1 {
                    let (k, v) = self.pairs.iter().next().unwrap();
                    Ok((k.as_str(), v))
                } else {
                    Err(Error::AmbiguousEdgeType {
                        count: self.pairs.len(),
                    })
                }
            }
        }
    }
}

/// Gradients from one example or one batch: sparse table rows plus dense
/// GRU tensors per touched pair. A shared-φ pair accumulates both towers
/// into the `phi1` slot.
#[derive(Debug, Clone)]
pub struct GradSet {
    pub rows: RowGrads,
    pub pairs: BTreeMap<String, PairGrads>,
}

#[derive(Debug, Clone)]
pub struct PairGrads {
    pub phi1: Vec<GruParams>,
    pub phi2: Vec<GruParams>,
}

impl GradSet {
    pub fn zeros_like(state: &ModelState, edge_type: &str) -> Result<GradSet> {
        let (name, pair) = state.resolve_pair(Some(edge_type))?;
        let zero = |p: &EncoderParams| -> Vec<GruParams> {
            p.grus
                .iter()
                .map(|g| GruParams::zeros(g.input_dim(), g.hidden_dim()))
                .collect()
        };
        let grads = PairGrads {
            phi1: zero(&pair.phi1),
            phi2: pair.phi2.as_ref().map(|p| zero(p)).unwrap_or_default(),
        };
        let mut pairs = BTreeMap::new();
        pairs.insert(name.to_string(), grads);
        Ok(GradSet {
            rows: BTreeMap::new(),
            pairs,
        })
    }

    pub fn add_assign(&mut self, other: &GradSet) {
        merge_rows_scaled(&mut self.rows, &other.rows, 1.0);
        for (name, theirs) in &other.pairs {
            let mine = self
                .pairs
                .get_mut(name)
                .expect("accumulating gradients for an unknown pair");
            for (a, b) in mine.phi1.iter_mut().zip(&theirs.phi1) {
                a.add_scaled(b, 1.0);
            }
            for (a, b) in mine.phi2.iter_mut().zip(&theirs.phi2) {
                a.add_scaled(b, 1.0);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for row in self.rows.values_mut() {
            for v in row {
                *v *= s;
            }
        }
        for pg in self.pairs.values_mut() {
            for g in pg.phi1.iter_mut().chain(pg.phi2.iter_mut()) {
                g.scale(s);
            }
        }
    }
}

fn node_parts<'a>(
    attrs: &'a AttrStore,
    node: u32,
    params: &EncoderParams,
) -> Result<&'a [Vec<u32>]> {
    let parts = attrs.parts(node)?;
    let arity = params.spec.arity();
    assert!(
        parts.len() >= arity,
        "attribute store holds {} sequences per node but the encoder needs {}",
        parts.len(),
        arity
    );
    Ok(&parts[..arity])
}

/// Forward pass only: the example's hinge loss under the current state.
pub fn example_loss(
    state: &ModelState,
    edge_type: &str,
    ex: &TrainingExample,
    attrs: &AttrStore,
    margin: f64,
) -> Result<f64> {
    let (_, pair) = state.resolve_pair(Some(edge_type))?;
    let (ev, _) = compose(&pair.phi1, &state.table, node_parts(attrs, ex.center, &pair.phi1)?);
    let (eu, _) = compose(pair.phi2(), &state.table, node_parts(attrs, ex.positive, pair.phi2())?);
    let pos = cosine(&ev, &eu);
    let mut negs = Vec::with_capacity(ex.negatives.len());
    for &nk in &ex.negatives {
        let (en, _) = compose(pair.phi2(), &state.table, node_parts(attrs, nk, pair.phi2())?);
        negs.push(cosine(&ev, &en));
    }
    Ok(hinge_loss(pos, &negs, margin))
}

/// Loss and exact gradients for one example. Only negatives violating the
/// margin contribute; when none do, the returned gradients are all zero.
/// The kink of max(0,·) takes subgradient 0.
pub fn example_gradients(
    state: &ModelState,
    edge_type: &str,
    ex: &TrainingExample,
    attrs: &AttrStore,
    margin: f64,
) -> Result<(f64, GradSet)> {
    let (name, pair) = state.resolve_pair(Some(edge_type))?;
    let phi1 = &pair.phi1;
    let phi2 = pair.phi2();
    let table = &state.table;

    let (ev, tr_v) = compose(phi1, table, node_parts(attrs, ex.center, phi1)?);
    let (eu, tr_u) = compose(phi2, table, node_parts(attrs, ex.positive, phi2)?);
    let (pos, d_pos_ev, d_pos_eu) = cosine_grads(&ev, &eu);

    let mut grads = GradSet::zeros_like(state, name)?;
    let mut loss = 0.0;
    let mut active = 0usize;
    let mut g_ev = vec![0.0; ev.len()];

    for &nk in &ex.negatives {
        let (en, tr_n) = compose(phi2, table, node_parts(attrs, nk, phi2)?);
        let (neg, d_neg_ev, d_neg_en) = cosine_grads(&ev, &en);
        let term = margin - pos + neg;
        if term > 0.0 {
            loss += term;
            active += 1;
            axpy(&mut g_ev, &d_neg_ev, 1.0);
            let eg = compose_backward(phi2, table, &tr_n, &d_neg_en);
            fold_side(&mut grads, name, pair, false, &eg);
        }
    }

    if active > 0 {
        let a = active as f64;
        axpy(&mut g_ev, &d_pos_ev, -a);
        let mut g_eu = vec![0.0; eu.len()];
        axpy(&mut g_eu, &d_pos_eu, -a);
        let eg_u = compose_backward(phi2, table, &tr_u, &g_eu);
        fold_side(&mut grads, name, pair, false, &eg_u);
        let eg_v = compose_backward(phi1, table, &tr_v, &g_ev);
        fold_side(&mut grads, name, pair, true, &eg_v);
    }

    Ok((loss, grads))
}

/// Adds one tower's encoder gradients into the grad set. `phi1_side`
/// selects the slot; a shared pair routes everything to `phi1`.
fn fold_side(
    grads: &mut GradSet,
    name: &str,
    pair: &EncoderPair,
    phi1_side: bool,
    eg: &crate::encoder::EncoderGrads,
) {
    merge_rows_scaled(&mut grads.rows, &eg.rows, 1.0);
    let pg = grads.pairs.get_mut(name).unwrap();
    let slot = if phi1_side || pair.shares_phi() {
        &mut pg.phi1
    } else {
        &mut pg.phi2
    };
    for (mine, theirs) in slot.iter_mut().zip(&eg.grus) {
        mine.add_scaled(theirs, 1.0);
    }
}

fn adam_apply(theta: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], t: u64, lr: f64) {
    debug_assert!(t >= 1);
    let bc1 = 1.0 - ADAM_BETA1.powi(t as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(t as i32);
    for i in 0..theta.len() {
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * grad[i];
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

fn gru_tensor_name(etype: &str, side: &str, gru: usize, tensor: usize) -> String {
    format!("{etype}/{side}/gru{gru}/{}", GRU_TENSOR_NAMES[tensor])
}

/// One bias-corrected Adam update. Rejects non-finite gradients before
/// touching any state, so a failed step leaves the model unchanged.
pub fn adam_step(state: &mut ModelState, grads: &GradSet, lr: f64) -> Result<()> {
    for (&id, row) in &grads.rows {
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                tensor: format!("table row {id}"),
            });
        }
    }
    for (etype, pg) in &grads.pairs {
        if !state.pairs.contains_key(etype) {
            return Err(Error::UnknownEdgeType {
                edge_type: etype.clone(),
            });
        }
        for (side, grus) in [("phi1", &pg.phi1), ("phi2", &pg.phi2)] {
            for (i, g) in grus.iter().enumerate() {
                if !g.is_finite() {
                    return Err(Error::NonFiniteGradient {
                        tensor: format!("{etype}/{side}/gru{i}"),
                    });
                }
            }
        }
    }

    state.step += 1;
    let t = state.step;
    let ModelState {
        table,
        pairs,
        adam,
        ..
    } = state;

    if !grads.rows.is_empty() {
        let dim = table.dim();
        let (m, v) = adam.buffers("table", table.len() * dim);
        for (&id, grad) in &grads.rows {
            let s = id as usize * dim;
            adam_apply(table.row_mut(id), grad, &mut m[s..s + dim], &mut v[s..s + dim], t, lr);
        }
    }

    for (etype, pg) in &grads.pairs {
        let pair = pairs.get_mut(etype).unwrap();
        for (i, g) in pg.phi1.iter().enumerate() {
            for ti in 0..6 {
                let name = gru_tensor_name(etype, "phi1", i, ti);
                let target = pair.phi1.grus[i].tensor_mut(ti);
                let len = target.as_slice().len();
                let (m, v) = adam.buffers(&name, len);
                adam_apply(target.as_mut_slice(), g.tensor(ti).as_slice(), m, v, t, lr);
            }
        }
        if let Some(phi2) = pair.phi2.as_mut() {
            for (i, g) in pg.phi2.iter().enumerate() {
                for ti in 0..6 {
                    let name = gru_tensor_name(etype, "phi2", i, ti);
                    let target = phi2.grus[i].tensor_mut(ti);
                    let len = target.as_slice().len();
                    let (m, v) = adam.buffers(&name, len);
                    adam_apply(target.as_mut_slice(), g.tensor(ti).as_slice(), m, v, t, lr);
                }
            }
        } else {
            debug_assert!(pg.phi2.is_empty());
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// walk length (nodes per walk)
    pub l: usize,
    /// window size
    pub w: usize,
    /// negatives per example
    pub k: usize,
    /// walks per node per epoch
    pub r: usize,
    pub margin: f64,
    /// token embedding width
    pub d: usize,
    /// GRU hidden width
    pub h: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub share_phi: bool,
    /// interleaving weight per edge type; defaults to its edge count
    pub edge_type_weights: BTreeMap<String, f64>,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            l: 20,
            w: 2,
            k: 4,
            r: 10,
            margin: 1.0,
            d: 256,
            h: 512,
            lr: 8e-4,
            batch: 256,
            epochs: 5,
            seed: 0,
            share_phi: false,
            edge_type_weights: BTreeMap::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) {
        assert!(self.l >= 1 && self.w >= 1 && self.k >= 1);
        assert!(self.margin > 0.0, "margin must be positive");
        assert!(self.d >= 1 && self.h >= 1);
        assert!(self.lr > 0.0 && self.batch >= 1);
    }
}

/// Mean loss over one edge type's examples within one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub edge_type: String,
    pub mean_loss: f64,
    pub examples: usize,
}

pub fn write_loss_csv(losses: &[EpochLoss], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "epoch,edge_type,mean_loss")?;
    for row in losses {
        writeln!(w, "{},{},{:.6}", row.epoch, row.edge_type, row.mean_loss)?;
    }
    Ok(())
}

/// Mean-gradient Adam step over one batch (all of one edge type). Returns
/// the batch's summed loss. Per-example gradients are computed in parallel
/// and reduced in batch order, so worker count never changes the result.
pub fn train_batch(
    state: &mut ModelState,
    edge_type: &str,
    batch: &[TrainingExample],
    attrs: &AttrStore,
    margin: f64,
    lr: f64,
) -> Result<f64> {
    assert!(!batch.is_empty());
    let per_example: Vec<Result<(f64, GradSet)>> = {
        let shared: &ModelState = state;
        batch
            .par_iter()
            .map(|ex| example_gradients(shared, edge_type, ex, attrs, margin))
            .collect()
    };
    let mut total = GradSet::zeros_like(state, edge_type)?;
    let mut loss_sum = 0.0;
    for r in per_example {
        let (loss, g) = r?;
        loss_sum += loss;
        total.add_assign(&g);
    }
    total.scale(1.0 / batch.len() as f64);
    adam_step(state, &total, lr)?;
    Ok(loss_sum)
}

/// Full training run: initializes a model from `specs`, then for each
/// epoch samples per-type example streams and interleaves their batches
/// proportionally to the edge-type weights.
pub fn train(
    cfg: &TrainConfig,
    g: &Graph,
    attrs: &AttrStore,
    specs: &[PairSpec],
) -> Result<(ModelState, Vec<EpochLoss>)> {
    cfg.validate();
    let mut state = ModelState::init(specs, attrs.vocab_size(), cfg.seed);
    let mut log = Vec::new();

    for epoch in 0..cfg.epochs {
        let mut queues: BTreeMap<String, VecDeque<Vec<TrainingExample>>> = BTreeMap::new();
        let mut weights: BTreeMap<String, f64> = BTreeMap::new();
        for ps in specs {
            let tid = g
                .edge_type_id(&ps.edge_type)
                .ok_or_else(|| Error::UnknownEdgeType {
                    edge_type: ps.edge_type.clone(),
                })?;
            let stream_seed = derive_seed(
                cfg.seed,
                "epoch-stream",
                &[epoch as u64, fnv1a64(ps.edge_type.as_bytes())],
            );
            let stream = epoch_stream(g, cfg.r, cfg.l, cfg.w, cfg.k, tid, stream_seed);
            let batches: VecDeque<Vec<TrainingExample>> =
                stream.chunks(cfg.batch).map(<[_]>::to_vec).collect();
            queues.insert(ps.edge_type.clone(), batches);
            let weight = cfg
                .edge_type_weights
                .get(&ps.edge_type)
                .copied()
                .unwrap_or(g.edge_count(tid) as f64);
            weights.insert(ps.edge_type.clone(), weight.max(1e-9));
        }

        let mut taken: BTreeMap<String, usize> = BTreeMap::new();
        let mut loss_sum: BTreeMap<String, f64> = BTreeMap::new();
        let mut example_count: BTreeMap<String, usize> = BTreeMap::new();
        loop {
            // least-served type first: smallest (taken+1)/weight, ties by name
            let next = queues
                .iter()
                .filter(|(_, q)| !q.is_empty())
                .map(|(name, _)| {
                    let served = *taken.get(name).unwrap_or(&0);
                    ((served + 1) as f64 / weights[name], name.clone())
                })
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
            let Some((_, name)) = next else { break };
            let batch = queues.get_mut(&name).unwrap().pop_front().unwrap();
            *taken.entry(name.clone()).or_insert(0) += 1;
            let batch_loss = train_batch(&mut state, &name, &batch, attrs, cfg.margin, cfg.lr)?;
            *loss_sum.entry(name.clone()).or_insert(0.0) += batch_loss;
            *example_count.entry(name.clone()).or_insert(0) += batch.len();
        }

        for ps in specs {
            let n = *example_count.get(&ps.edge_type).unwrap_or(&0);
            let sum = *loss_sum.get(&ps.edge_type).unwrap_or(&0.0);
            log.push(EpochLoss {
                epoch,
                edge_type: ps.edge_type.clone(),
                mean_loss: if n > 0 { sum / n as f64 } else { 0.0 },
                examples: n,
            });
        }
    }
    Ok((state, log))
}

// --- checkpoint format ----------------------------------------------------
//
// magic "CNE1" | version u32 | meta_len u32 | meta | tensor_count u32
// | per tensor: name_len u16, name, ndim u8, dims u32.., offset u64 (f32s)
// | payload_len u64 (f32 count) | payload f32-LE | crc32(payload) u32
//
// meta: step u64, pair_count u32, then per pair: name, φ1 spec, φ2 spec,
// share flag. Values are stored as f32; in-memory math stays f64.

const CHECKPOINT_MAGIC: &[u8; 4] = b"CNE1";
const CHECKPOINT_VERSION: u32 = 1;

fn push_u16(buf: &mut Vec<u8>, v: u16) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_str(buf: &mut Vec<u8>, s: &str) {
    assert!(s.len() <= u16::MAX as usize);
    push_u16(buf, s.len() as u16);
    buf.extend_from_slice(s.as_bytes());
}

fn push_spec(buf: &mut Vec<u8>, spec: &EncoderSpec) {
    buf.push(spec.kind.code());
    push_u32(buf, spec.d as u32);
    push_u32(buf, spec.h as u32);
    push_u32(buf, spec.n as u32);
    buf.push(spec.shared_subs as u8);
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::CheckpointTruncated);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String> {
        let len = self.u16()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::CheckpointFormat("non-utf8 name".into()))
    }

    fn spec(&mut self) -> Result<EncoderSpec> {
        let kind = crate::encoder::EncoderKind::from_code(self.u8()?)
            .ok_or_else(|| Error::CheckpointFormat("unknown encoder kind code".into()))?;
        let d = self.u32()? as usize;
        let h = self.u32()? as usize;
        let n = self.u32()? as usize;
        let shared_subs = self.u8()? != 0;
        Ok(EncoderSpec {
            kind,
            d,
            h,
            n,
            shared_subs,
        })
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Parameter tensors in their canonical save order: the table first, then
/// each pair's towers. Moment tensors follow as `m/<name>` and `v/<name>`.
fn param_tensor_names(state: &ModelState) -> Vec<(String, Vec<u32>)> {
    let mut out = vec![(
        "table".to_string(),
        vec![state.table.len() as u32, state.table.dim() as u32],
    )];
    for (etype, pair) in &state.pairs {
        let mut sides = vec![("phi1", &pair.phi1)];
        if let Some(p2) = &pair.phi2 {
            sides.push(("phi2", p2));
        }
        for (side, params) in sides {
            for (i, g) in params.grus.iter().enumerate() {
                for ti in 0..6 {
                    let t = g.tensor(ti);
                    out.push((
                        gru_tensor_name(etype, side, i, ti),
                        vec![t.rows() as u32, t.cols() as u32],
                    ));
                }
            }
        }
    }
    out
}

fn tensor_data<'a>(state: &'a ModelState, name: &str) -> &'a [f64] {
    if name == "table" {
        return state.table.as_slice();
    }
    let mut it = name.splitn(4, '/');
    let etype = it.next().unwrap();
    let side = it.next().unwrap();
    let gru: usize = it.next().unwrap()[3..].parse().unwrap();
    let tensor = it.next().unwrap();
    let ti = GRU_TENSOR_NAMES.iter().position(|&t| t == tensor).unwrap();
    let pair = &state.pairs[etype];
    let params = if side == "phi1" {
        &pair.phi1
    } else {
        pair.phi2.as_ref().unwrap()
    };
    params.grus[gru].tensor(ti).as_slice()
}

pub fn save_checkpoint(state: &ModelState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();

    let mut meta = Vec::new();
    push_u64(&mut meta, state.step);
    push_u32(&mut meta, state.pairs.len() as u32);
    for (etype, pair) in &state.pairs {
        push_str(&mut meta, etype);
        push_spec(&mut meta, &pair.phi1.spec);
        push_spec(&mut meta, &pair.phi2().spec);
        meta.push(pair.shares_phi() as u8);
    }

    let params = param_tensor_names(state);
    let mut manifest = Vec::new();
    let mut payload = Vec::new();
    let mut count = 0u32;
    let mut offset = 0u64;
    let mut emit = |manifest: &mut Vec<u8>,
                    payload: &mut Vec<u8>,
                    name: &str,
                    dims: &[u32],
                    data: Option<&[f64]>,
                    len: usize| {
        push_str(manifest, name);
        manifest.push(dims.len() as u8);
        for &d in dims {
            push_u32(manifest, d);
        }
        push_u64(manifest, offset);
        match data {
            Some(values) => {
                debug_assert_eq!(values.len(), len);
                for &v in values {
                    payload.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
            None => payload.extend_from_slice(&vec![0u8; len * 4]),
        }
        offset += len as u64;
        count += 1;
    };

    for (name, dims) in &params {
        let len = dims.iter().product::<u32>() as usize;
        emit(&mut manifest, &mut payload, name, dims, Some(tensor_data(state, name)), len);
    }
    for prefix in ["m", "v"] {
        let buffers = if prefix == "m" {
            &state.adam.m
        } else {
            &state.adam.v
        };
        for (name, dims) in &params {
            let len = dims.iter().product::<u32>() as usize;
            let data = buffers.get(name).map(|b| b.as_slice());
            emit(
                &mut manifest,
                &mut payload,
                &format!("{prefix}/{name}"),
                dims,
                data,
                len,
            );
        }
    }

    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&payload);
    let crc = hasher.finalize();

    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    push_u32(&mut out, CHECKPOINT_VERSION);
    push_u32(&mut out, meta.len() as u32);
    out.extend_from_slice(&meta);
    push_u32(&mut out, count);
    out.extend_from_slice(&manifest);
    push_u64(&mut out, (payload.len() / 4) as u64);
    out.extend_from_slice(&payload);
    push_u32(&mut out, crc);

    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &out).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelState> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader::new(&bytes);

    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::CheckpointMagic);
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }

    let meta_len = r.u32()? as usize;
    let mut meta = Reader::new(r.take(meta_len)?);
    let step = meta.u64()?;
    let pair_count = meta.u32()? as usize;
    let mut pair_meta = Vec::with_capacity(pair_count);
    for _ in 0..pair_count {
        let name = meta.str()?;
        let spec1 = meta.spec()?;
        let spec2 = meta.spec()?;
        let shared = meta.u8()? != 0;
        pair_meta.push((name, spec1, spec2, shared));
    }
    if !meta.done() {
        return Err(Error::CheckpointFormat("meta has trailing bytes".into()));
    }

    let tensor_count = r.u32()? as usize;
    let mut manifest: BTreeMap<String, (Vec<u32>, u64)> = BTreeMap::new();
    for _ in 0..tensor_count {
        let name = r.str()?;
        let ndim = r.u8()? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(r.u32()?);
        }
        let offset = r.u64()?;
        if manifest.insert(name.clone(), (dims, offset)).is_some() {
            return Err(Error::CheckpointFormat(format!("duplicate tensor {name:?}")));
        }
    }

    let payload_len = r.u64()? as usize;
    let payload = r.take(payload_len * 4)?;
    let stored_crc = r.u32()?;
    if !r.done() {
        return Err(Error::CheckpointFormat("trailing bytes after crc".into()));
    }
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(payload);
    let computed = hasher.finalize();
    if computed != stored_crc {
        return Err(Error::CheckpointChecksum {
            stored: stored_crc,
            computed,
        });
    }

    let fetch = |name: &str, want_dims: &[u32]| -> Result<Vec<f64>> {
        let (dims, offset) = manifest
            .get(name)
            .ok_or_else(|| Error::CheckpointFormat(format!("missing tensor {name:?}")))?;
        if dims != want_dims {
            return Err(Error::CheckpointFormat(format!(
                "tensor {name:?} has shape {dims:?}, expected {want_dims:?}"
            )));
        }
        let len = dims.iter().product::<u32>() as usize;
        let start = *offset as usize * 4;
        let end = start + len * 4;
        if end > payload.len() {
            return Err(Error::CheckpointFormat(format!(
                "tensor {name:?} overruns the payload"
            )));
        }
        Ok(payload[start..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    };

    let table_dims = manifest
        .get("table")
        .ok_or_else(|| Error::CheckpointFormat("missing tensor \"table\"".into()))?
        .0
        .clone();
    if table_dims.len() != 2 {
        return Err(Error::CheckpointFormat("table must be 2-dimensional".into()));
    }
    let (rows, dim) = (table_dims[0] as usize, table_dims[1] as usize);
    let data = fetch("table", &table_dims)?;
    let table = EmbeddingTable::from_mat(mat_from(rows, dim, data));

    let load_params = |etype: &str, side: &str, spec: EncoderSpec| -> Result<EncoderParams> {
        spec.validate();
        let mut grus = Vec::with_capacity(spec.gru_count());
        for i in 0..spec.gru_count() {
            let mut g = GruParams::zeros(spec.d, spec.h);
            for ti in 0..6 {
                let name = gru_tensor_name(etype, side, i, ti);
                let t = g.tensor_mut(ti);
                let dims = [t.rows() as u32, t.cols() as u32];
                let data = fetch(&name, &dims)?;
                *t = mat_from(t.rows(), t.cols(), data);
            }
            grus.push(g);
        }
        Ok(EncoderParams { spec, grus })
    };

    let mut pairs = BTreeMap::new();
    for (name, spec1, spec2, shared) in pair_meta {
        if spec1.d != dim || spec2.d != dim {
            return Err(Error::CheckpointFormat(format!(
                "pair {name:?} token width disagrees with the table"
            )));
        }
        let phi1 = load_params(&name, "phi1", spec1)?;
        let phi2 = if shared {
            None
        } else {
            Some(load_params(&name, "phi2", spec2)?)
        };
        pairs.insert(name, EncoderPair { phi1, phi2 });
    }

    let mut state = ModelState {
        table,
        pairs,
        adam: AdamState::default(),
        step,
    };
    for (name, dims) in param_tensor_names(&state) {
        let m = fetch(&format!("m/{name}"), &dims)?;
        let v = fetch(&format!("v/{name}"), &dims)?;
        state.adam.m.insert(name.clone(), m);
        state.adam.v.insert(name, v);
    }
    Ok(state)
}

fn mat_from(rows: usize, cols: usize, data: Vec<f64>) -> Mat {
    debug_assert_eq!(data.len(), rows * cols);
    let mut m = Mat::zeros(rows, cols);
    m.as_mut_slice().copy_from_slice(&data);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderKind;
    use crate::graph::load_edge_list_from;
    use crate::text::Vocabulary;
    use std::path::PathBuf;

    #[test]
    fn cosine_hand_values_and_guard() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        let half_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]) - half_sqrt2).abs() < 1e-12);
        let z = cosine(&[0.0, 0.0], &[1.0, 2.0]);
        assert_eq!(z, 0.0);
        assert!(z.is_finite());
    }

    #[test]
    fn hinge_examples() {
        assert!((hinge_loss(0.9, &[0.2, -0.1], 1.0) - 0.3).abs() < 1e-12);
        assert_eq!(hinge_loss(1.0, &[-1.0, -1.0, -1.0], 1.0), 0.0);
        assert_eq!(hinge_loss(0.4, &[0.4, 0.4, 0.4, 0.4], 1.0), 4.0);
    }

    #[test]
    fn adam_first_step_and_zero_grad() {
        let mut theta = [0.0f64];
        let mut m = [0.0f64];
        let mut v = [0.0f64];
        adam_apply(&mut theta, &[0.5], &mut m, &mut v, 1, 8e-4);
        assert!((theta[0] + 8e-4).abs() < 1e-9, "theta = {}", theta[0]);

        let mut theta = [0.7f64];
        let mut m = [0.0f64];
        let mut v = [0.0f64];
        adam_apply(&mut theta, &[0.0], &mut m, &mut v, 1, 8e-4);
        assert_eq!(theta[0], 0.7);
    }

    // A 3-node fixture with hand-set sum-encoder geometry: token rows are
    // chosen so δ values are exact.
    fn fixture(table_rows: &[(u32, [f64; 2])]) -> (ModelState, AttrStore) {
        let labels: Vec<String> = ["v", "u", "n"].iter().map(|s| s.to_string()).collect();
        let text: std::collections::BTreeMap<String, String> = [
            ("v", "alpha"),
            ("u", "beta"),
            ("n", "gamma"),
        ]
        .iter()
        .map(|(l, t)| (l.to_string(), t.to_string()))
        .collect();
        // frequency ties broken lexicographically: alpha=1, beta=2, gamma=3
        let vocab = Vocabulary::build(text.values().map(|s| s.as_str()), 10);
        let attrs = AttrStore::build(&labels, &text, &vocab, 1, 16);
        let spec = EncoderSpec::new(EncoderKind::Sum, 2, 2);
        let mut state = ModelState::init(&[PairSpec::uniform("e", spec, false)], 4, 1);
        for &(id, row) in table_rows {
            state.table.row_mut(id).copy_from_slice(&row);
        }
        (state, attrs)
    }

    fn example(negatives: Vec<u32>) -> TrainingExample {
        TrainingExample {
            center: 0,
            positive: 1,
            negatives,
            edge_type: 0,
        }
    }

    #[test]
    fn inactive_negatives_give_exactly_zero_gradients() {
        // pos = cos((1,0),(1,0)) = 1, neg = cos((1,0),(-1,0)) = -1:
        // the margin term 1 - 1 + (-1) is negative, nothing active
        let (state, attrs) = fixture(&[(1, [1.0, 0.0]), (2, [1.0, 0.0]), (3, [-1.0, 0.0])]);
        let (loss, grads) = example_gradients(&state, "e", &example(vec![2]), &attrs, 1.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.rows.is_empty() || grads.rows.values().all(|r| r.iter().all(|&v| v == 0.0)));

        // margin exactly met (term = 0): the kink's subgradient is 0
        let (state, attrs) = fixture(&[(1, [1.0, 0.0]), (2, [1.0, 0.0]), (3, [0.0, 1.0])]);
        let (loss, grads) = example_gradients(&state, "e", &example(vec![2]), &attrs, 1.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.rows.is_empty() || grads.rows.values().all(|r| r.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn active_negative_moves_loss_and_gradients() {
        // neg equals pos, so the term is exactly the margin
        let (state, attrs) = fixture(&[(1, [1.0, 0.0]), (2, [1.0, 0.0]), (3, [1.0, 0.0])]);
        let (loss, grads) = example_gradients(&state, "e", &example(vec![2]), &attrs, 1.0).unwrap();
        assert!((loss - 1.0).abs() < 1e-12);
        assert!(!grads.rows.is_empty());
        let probed = example_loss(&state, "e", &example(vec![2]), &attrs, 1.0).unwrap();
        assert_eq!(probed, loss);
    }

    #[test]
    fn duplicated_negative_doubles_every_gradient() {
        let (state, attrs) = fixture(&[(1, [0.8, 0.6]), (2, [0.6, 0.8]), (3, [0.9, 0.1])]);
        let (l1, g1) = example_gradients(&state, "e", &example(vec![2]), &attrs, 1.0).unwrap();
        let (l2, g2) =
            example_gradients(&state, "e", &example(vec![2, 2]), &attrs, 1.0).unwrap();
        assert!(l1 > 0.0, "fixture should have an active negative");
        assert!((l2 - 2.0 * l1).abs() < 1e-12);
        for (id, row) in &g1.rows {
            let doubled = &g2.rows[id];
            for (a, b) in row.iter().zip(doubled) {
                assert!((2.0 * a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adam_step_rejects_non_finite_gradients() {
        let (mut state, _) = fixture(&[]);
        let before = state.clone();
        let mut grads = GradSet::zeros_like(&state, "e").unwrap();
        grads.rows.insert(1, vec![f64::NAN, 0.0]);
        let err = adam_step(&mut state, &grads, 1e-3).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { .. }));
        assert_eq!(state, before);
    }

    #[test]
    fn lazy_rows_update_only_when_touched() {
        let (mut state, _) = fixture(&[(1, [1.0, 1.0]), (2, [2.0, 2.0])]);
        let row2_before: Vec<f64> = state.table.row(2).to_vec();
        let mut grads = GradSet::zeros_like(&state, "e").unwrap();
        grads.rows.insert(1, vec![0.5, 0.5]);
        adam_step(&mut state, &grads, 1e-2).unwrap();
        assert_eq!(state.table.row(2), row2_before.as_slice());
        assert_ne!(state.table.row(1), [1.0, 1.0]);
        // moments exist for the whole table but only row 1's slice moved
        let m = &state.adam.m["table"];
        assert!(m[4..6].iter().all(|&x| x == 0.0));
        assert!(m[2..4].iter().any(|&x| x != 0.0));
    }

    fn toy_graph() -> Graph {
        load_edge_list_from("a\tb\n".as_bytes(), &PathBuf::from("<t>"), false, "e")
            .unwrap()
            .0
    }

    fn toy_attrs(g: &Graph) -> AttrStore {
        let text: std::collections::BTreeMap<String, String> =
            [("a", "red fox"), ("b", "lazy dog")]
                .iter()
                .map(|(l, t)| (l.to_string(), t.to_string()))
                .collect();
        let vocab = Vocabulary::build(text.values().map(|s| s.as_str()), 10);
        AttrStore::build(g.labels(), &text, &vocab, 1, 16)
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            l: 2,
            w: 1,
            k: 2,
            r: 1,
            d: 3,
            h: 4,
            batch: 1,
            epochs: 1,
            seed: 5,
            lr: 1e-2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn train_counts_steps_per_example() {
        let g = toy_graph();
        let attrs = toy_attrs(&g);
        let spec = EncoderSpec::new(EncoderKind::Gru, 3, 4);
        let (state, log) =
            train(&tiny_config(), &g, &attrs, &[PairSpec::uniform("e", spec, false)]).unwrap();
        // 2 walks of length 2, w=1: four examples, batch size 1
        assert_eq!(state.step, 4);
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].examples, 4);
        assert!(log[0].mean_loss >= 0.0);
    }

    #[test]
    fn shared_phi_scores_symmetrically() {
        let g = toy_graph();
        let attrs = toy_attrs(&g);
        let spec = EncoderSpec::new(EncoderKind::Gru, 3, 4);
        let mut cfg = tiny_config();
        cfg.share_phi = true;
        let (state, _) =
            train(&cfg, &g, &attrs, &[PairSpec::uniform("e", spec, true)]).unwrap();
        let pair = &state.pairs["e"];
        assert!(pair.shares_phi());
        let (ea, _) = compose(&pair.phi1, &state.table, attrs.parts(0).unwrap());
        let (eb, _) = compose(pair.phi2(), &state.table, attrs.parts(1).unwrap());
        assert_eq!(cosine(&ea, &eb), cosine(&eb, &ea));
    }

    #[test]
    fn distinct_phi_scores_asymmetrically() {
        let g = toy_graph();
        let attrs = toy_attrs(&g);
        let spec = EncoderSpec::new(EncoderKind::Gru, 3, 4);
        let state = ModelState::init(&[PairSpec::uniform("e", spec, false)], 10, 3);
        let pair = &state.pairs["e"];
        let (a1, _) = compose(&pair.phi1, &state.table, attrs.parts(0).unwrap());
        let (a2, _) = compose(pair.phi2(), &state.table, attrs.parts(0).unwrap());
        let (b1, _) = compose(&pair.phi1, &state.table, attrs.parts(1).unwrap());
        let (b2, _) = compose(pair.phi2(), &state.table, attrs.parts(1).unwrap());
        assert_ne!(cosine(&a1, &b2), cosine(&b1, &a2));
    }

    fn trained_state() -> ModelState {
        let g = toy_graph();
        let attrs = toy_attrs(&g);
        let spec = EncoderSpec::new(EncoderKind::Gru, 3, 4);
        train(&tiny_config(), &g, &attrs, &[PairSpec::uniform("e", spec, false)])
            .unwrap()
            .0
    }

    #[test]
    fn checkpoint_round_trip() {
        let state = trained_state();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cne");
        save_checkpoint(&state, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.step, state.step);
        assert_eq!(loaded.pairs.keys().collect::<Vec<_>>(), vec!["e"]);

        // the file is a fixed point: saving the loaded state is byte-identical
        let path2 = dir.path().join("model2.cne");
        save_checkpoint(&loaded, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());

        // a freshly initialized state has f32-clean parameters, so its
        // values round-trip exactly; loading materializes zero moment
        // buffers, which re-save identically to the absent ones
        let fresh = ModelState::init(
            &[PairSpec::uniform("e", EncoderSpec::new(EncoderKind::Gru, 3, 4), false)],
            10,
            77,
        );
        let path3 = dir.path().join("fresh.cne");
        save_checkpoint(&fresh, &path3).unwrap();
        let fresh_loaded = load_checkpoint(&path3).unwrap();
        assert_eq!(fresh_loaded.table, fresh.table);
        assert_eq!(fresh_loaded.pairs, fresh.pairs);
        let path4 = dir.path().join("fresh2.cne");
        save_checkpoint(&fresh_loaded, &path4).unwrap();
        assert_eq!(fs::read(&path3).unwrap(), fs::read(&path4).unwrap());
    }

    #[test]
    fn checkpoint_error_kinds() {
        let state = trained_state();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cne");
        save_checkpoint(&state, &path).unwrap();
        let good = fs::read(&path).unwrap();

        let mut corrupt = good.clone();
        let last = corrupt.len() - 5; // inside the payload, before the crc
        corrupt[last] ^= 0xff;
        fs::write(&path, &corrupt).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::CheckpointChecksum { .. })
        ));

        let mut old = good.clone();
        old[4..8].copy_from_slice(&99u32.to_le_bytes());
        fs::write(&path, &old).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::CheckpointVersion { found: 99, .. })
        ));

        fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::CheckpointMagic)));

        fs::write(&path, &good[..good.len() / 2]).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::CheckpointTruncated)
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let g = toy_graph();
        let attrs = toy_attrs(&g);
        let spec = EncoderSpec::new(EncoderKind::Gru, 3, 4);
        let cfg = TrainConfig {
            epochs: 3,
            ..tiny_config()
        };
        let (s1, l1) = train(&cfg, &g, &attrs, &[PairSpec::uniform("e", spec, false)]).unwrap();
        let (s2, l2) = train(&cfg, &g, &attrs, &[PairSpec::uniform("e", spec, false)]).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn loss_csv_format() {
        let rows = vec![EpochLoss {
            epoch: 0,
            edge_type: "e".into(),
            mean_loss: 1.25,
            examples: 10,
        }];
        let mut buf = Vec::new();
        write_loss_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,edge_type,mean_loss\n0,e,1.250000\n"
        );
    }
}
