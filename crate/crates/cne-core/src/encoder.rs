//! Composition functions φ mapping token-id sequences to node embeddings.
//!
//! Three encoder families: sum/mean pooling over token embedding rows, a
//! single GRU whose last hidden state is the node embedding, and a sum of
//! n GRU encoders for nodes carrying n attribute sequences. Backward passes
//! are exact reverse-mode differentiation of the forward recurrences; table
//! gradients are sparse over the touched rows.
//!
//! The GRU has no bias vectors and starts from h = 0:
//!
//!   r = σ(W_r a + U_r h)
//!   z = σ(W_z a + U_z h)
//!   h̃ = tanh(W a + U (r ⊙ h))
//!   h ← (1 − z) ⊙ h + z ⊙ h̃

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::linalg::{axpy, sigmoid, Mat};

/// Rounds through f32 so freshly initialized parameters survive the 32-bit
/// checkpoint encoding bit-for-bit.
fn f32_clean(x: f64) -> f64 {
    x as f32 as f64
}

/// Token embedding rows, shared by every encoder in a model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    mat: Mat,
}

impl EmbeddingTable {
    /// Entries drawn uniform(−0.5/d, +0.5/d).
    pub fn init(vocab_size: usize, d: usize, rng: &mut ChaCha8Rng) -> EmbeddingTable {
        assert!(vocab_size >= 1 && d >= 1);
        let bound = 0.5 / d as f64;
        let mat = Mat::from_fn(vocab_size, d, |_, _| {
            f32_clean(rng.random_range(-bound..bound))
        });
        EmbeddingTable { mat }
    }

    pub fn from_mat(mat: Mat) -> EmbeddingTable {
        EmbeddingTable { mat }
    }

    pub fn len(&self) -> usize {
        self.mat.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.mat.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.mat.cols()
    }

    pub fn row(&self, id: u32) -> &[f64] {
        self.mat.row(id as usize)
    }

    pub fn row_mut(&mut self, id: u32) -> &mut [f64] {
        self.mat.row_mut(id as usize)
    }

    pub fn as_slice(&self) -> &[f64] {
        self.mat.as_slice()
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        self.mat.as_mut_slice()
    }

    pub fn is_finite(&self) -> bool {
        self.mat.is_finite()
    }
}

/// GRU weights; also reused as the shape of a GRU gradient set.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_r: Mat,
    pub u_r: Mat,
    pub w_z: Mat,
    pub u_z: Mat,
    pub w: Mat,
    pub u: Mat,
}

pub const GRU_TENSOR_NAMES: [&str; 6] = ["w_r", "u_r", "w_z", "u_z", "w", "u"];

impl GruParams {
    pub fn zeros(d: usize, h: usize) -> GruParams {
        GruParams {
            w_r: Mat::zeros(h, d),
            u_r: Mat::zeros(h, h),
            w_z: Mat::zeros(h, d),
            u_z: Mat::zeros(h, h),
            w: Mat::zeros(h, d),
            u: Mat::zeros(h, h),
        }
    }

    /// Glorot uniform: each matrix ~ uniform(±√(6/(fan_in+fan_out))).
    pub fn init(d: usize, h: usize, rng: &mut ChaCha8Rng) -> GruParams {
        assert!(d >= 1 && h >= 1);
        let mut draw = |rows: usize, cols: usize| {
            let limit = (6.0 / (cols + rows) as f64).sqrt();
            Mat::from_fn(rows, cols, |_, _| f32_clean(rng.random_range(-limit..limit)))
        };
        GruParams {
            w_r: draw(h, d),
            u_r: draw(h, h),
            w_z: draw(h, d),
            u_z: draw(h, h),
            w: draw(h, d),
            u: draw(h, h),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_r.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_r.rows()
    }

    pub fn tensor(&self, i: usize) -> &Mat {
        match i {
            0 => &self.w_r,
            1 => &self.u_r,
            2 => &self.w_z,
            3 => &self.u_z,
            4 => &self.w,
            5 => &self.u,
            _ => panic!("GRU tensor index out of range"),
        }
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut Mat {
        match i {
            0 => &mut self.w_r,
            1 => &mut self.u_r,
            2 => &mut self.w_z,
            3 => &mut self.u_z,
            4 => &mut self.w,
            5 => &mut self.u,
            _ => panic!("GRU tensor index out of range"),
        }
    }

    pub fn add_scaled(&mut self, other: &GruParams, s: f64) {
        for i in 0..6 {
            self.tensor_mut(i).add_scaled(other.tensor(i), s);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for i in 0..6 {
            self.tensor_mut(i).scale(s);
        }
    }

    pub fn is_finite(&self) -> bool {
        (0..6).all(|i| self.tensor(i).is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Sum,
    Mean,
    Gru,
    MultiGruSum,
}

impl EncoderKind {
    pub fn code(self) -> u8 {
        match self {
            EncoderKind::Sum => 0,
            EncoderKind::Mean => 1,
            EncoderKind::Gru => 2,
            EncoderKind::MultiGruSum => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<EncoderKind> {
        match code {
            0 => Some(EncoderKind::Sum),
            1 => Some(EncoderKind::Mean),
            2 => Some(EncoderKind::Gru),
            3 => Some(EncoderKind::MultiGruSum),
            _ => None,
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EncoderKind::Sum => "sum",
            EncoderKind::Mean => "mean",
            EncoderKind::Gru => "gru",
            EncoderKind::MultiGruSum => "multi_gru_sum",
        };
        f.write_str(s)
    }
}

impl FromStr for EncoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sum" => Ok(EncoderKind::Sum),
            "mean" => Ok(EncoderKind::Mean),
            "gru" => Ok(EncoderKind::Gru),
            "multi_gru_sum" => Ok(EncoderKind::MultiGruSum),
            other => Err(format!(
                "unknown encoder kind {other:?} (expected sum, mean, gru, or multi_gru_sum)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    /// token embedding width
    pub d: usize,
    /// GRU hidden width (ignored by pooling kinds)
    pub h: usize,
    /// sub-encoder count; 1 unless kind is MultiGruSum
    pub n: usize,
    /// MultiGruSum only: one parameter set shared across the n positions
    pub shared_subs: bool,
}

impl EncoderSpec {
    pub fn new(kind: EncoderKind, d: usize, h: usize) -> EncoderSpec {
        EncoderSpec {
            kind,
            d,
            h,
            n: 1,
            shared_subs: true,
        }
    }

    pub fn multi(d: usize, h: usize, n: usize, shared_subs: bool) -> EncoderSpec {
        EncoderSpec {
            kind: EncoderKind::MultiGruSum,
            d,
            h,
            n,
            shared_subs,
        }
    }

    /// How many attribute sequences one node feeds this encoder.
    pub fn arity(&self) -> usize {
        match self.kind {
            EncoderKind::MultiGruSum => self.n,
            _ => 1,
        }
    }

    pub fn output_width(&self) -> usize {
        match self.kind {
            EncoderKind::Sum | EncoderKind::Mean => self.d,
            EncoderKind::Gru | EncoderKind::MultiGruSum => self.h,
        }
    }

    /// Distinct GRU parameter sets this spec owns.
    pub fn gru_count(&self) -> usize {
        match self.kind {
            EncoderKind::Sum | EncoderKind::Mean => 0,
            EncoderKind::Gru => 1,
            EncoderKind::MultiGruSum => {
                if self.shared_subs {
                    1
                } else {
                    self.n
                }
            }
        }
    }

    pub fn validate(&self) {
        assert!(self.d >= 1 && self.h >= 1 && self.n >= 1);
        if self.kind != EncoderKind::MultiGruSum {
            assert_eq!(self.n, 1, "sub-encoder count only applies to multi_gru_sum");
        }
    }
}

/// One side's encoder: the spec plus its GRU parameter sets (empty for
/// pooling kinds). The embedding table lives outside, shared model-wide.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub spec: EncoderSpec,
    pub grus: Vec<GruParams>,
}

impl EncoderParams {
    pub fn init(spec: EncoderSpec, rng: &mut ChaCha8Rng) -> EncoderParams {
        spec.validate();
        let grus = (0..spec.gru_count())
            .map(|_| GruParams::init(spec.d, spec.h, rng))
            .collect();
        EncoderParams { spec, grus }
    }

    fn gru_for_part(&self, part: usize) -> &GruParams {
        if self.spec.shared_subs {
            &self.grus[0]
        } else {
            &self.grus[part]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.grus.iter().all(|g| g.is_finite())
    }
}

/// Fresh embedding table and encoder parameters for one spec, everything
/// derived from the seed.
pub fn init_params(
    spec: EncoderSpec,
    vocab_size: usize,
    seed: u64,
) -> (EmbeddingTable, EncoderParams) {
    let mut table_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "embedding-table", &[]));
    let table = EmbeddingTable::init(vocab_size, spec.d, &mut table_rng);
    let mut enc_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "encoder", &[]));
    let params = EncoderParams::init(spec, &mut enc_rng);
    (table, params)
}

/// Everything the backward pass needs from one GRU forward run.
#[derive(Debug, Clone)]
pub struct GruTrace {
    pub ids: Vec<u32>,
    pub r: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub h_tilde: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

/// Sparse embedding-row gradients keyed by token id.
pub type RowGrads = BTreeMap<u32, Vec<f64>>;

pub fn gru_forward(p: &GruParams, table: &EmbeddingTable, ids: &[u32]) -> (Vec<f64>, GruTrace) {
    assert!(!ids.is_empty(), "GRU input sequence must be non-empty");
    debug_assert_eq!(p.input_dim(), table.dim());
    let hd = p.hidden_dim();
    let mut state = vec![0.0; hd];
    let mut trace = GruTrace {
        ids: ids.to_vec(),
        r: Vec::with_capacity(ids.len()),
        z: Vec::with_capacity(ids.len()),
        h_tilde: Vec::with_capacity(ids.len()),
        h: Vec::with_capacity(ids.len()),
    };
    for &id in ids {
        let a = table.row(id);

        let mut pre_r = vec![0.0; hd];
        p.w_r.matvec_acc(a, &mut pre_r);
        p.u_r.matvec_acc(&state, &mut pre_r);
        let r: Vec<f64> = pre_r.iter().map(|&x| sigmoid(x)).collect();

        let mut pre_z = vec![0.0; hd];
        p.w_z.matvec_acc(a, &mut pre_z);
        p.u_z.matvec_acc(&state, &mut pre_z);
        let z: Vec<f64> = pre_z.iter().map(|&x| sigmoid(x)).collect();

        let rh: Vec<f64> = r.iter().zip(&state).map(|(ri, hi)| ri * hi).collect();
        let mut pre_c = vec![0.0; hd];
        p.w.matvec_acc(a, &mut pre_c);
        p.u.matvec_acc(&rh, &mut pre_c);
        let h_tilde: Vec<f64> = pre_c.iter().map(|x| x.tanh()).collect();

        let next: Vec<f64> = (0..hd)
            .map(|i| (1.0 - z[i]) * state[i] + z[i] * h_tilde[i])
            .collect();

        trace.r.push(r);
        trace.z.push(z);
        trace.h_tilde.push(h_tilde);
        trace.h.push(next.clone());
        state = next;
    }
    (state, trace)
}

/// Gradients of ⟨grad_out, h^(n)⟩ with respect to the GRU weights and the
/// touched embedding rows. Exact reverse sweep of [`gru_forward`].
pub fn gru_backward(
    p: &GruParams,
    table: &EmbeddingTable,
    trace: &GruTrace,
    grad_out: &[f64],
) -> (GruParams, RowGrads) {
    let hd = p.hidden_dim();
    let d = p.input_dim();
    assert_eq!(grad_out.len(), hd);
    let mut grads = GruParams::zeros(d, hd);
    let mut rows: RowGrads = BTreeMap::new();
    let zeros = vec![0.0; hd];
    let mut dh = grad_out.to_vec();
    for t in (0..trace.ids.len()).rev() {
        let a = table.row(trace.ids[t]);
        let h_prev: &[f64] = if t == 0 { &zeros } else { &trace.h[t - 1] };
        let r = &trace.r[t];
        let z = &trace.z[t];
        let ht = &trace.h_tilde[t];

        // h = (1−z)⊙h_prev + z⊙h̃
        let mut dh_prev: Vec<f64> = (0..hd).map(|i| dh[i] * (1.0 - z[i])).collect();
        let dz: Vec<f64> = (0..hd).map(|i| dh[i] * (ht[i] - h_prev[i])).collect();

        // h̃ = tanh(W a + U (r⊙h_prev))
        let dpre_c: Vec<f64> = (0..hd)
            .map(|i| dh[i] * z[i] * (1.0 - ht[i] * ht[i]))
            .collect();
        let rh: Vec<f64> = (0..hd).map(|i| r[i] * h_prev[i]).collect();
        grads.w.outer_acc(&dpre_c, a);
        grads.u.outer_acc(&dpre_c, &rh);
        let mut d_rh = vec![0.0; hd];
        p.u.matvec_t_acc(&dpre_c, &mut d_rh);
        let dr: Vec<f64> = (0..hd).map(|i| d_rh[i] * h_prev[i]).collect();
        for i in 0..hd {
            dh_prev[i] += d_rh[i] * r[i];
        }

        // gates through σ
        let dpre_z: Vec<f64> = (0..hd).map(|i| dz[i] * z[i] * (1.0 - z[i])).collect();
        grads.w_z.outer_acc(&dpre_z, a);
        grads.u_z.outer_acc(&dpre_z, h_prev);
        p.u_z.matvec_t_acc(&dpre_z, &mut dh_prev);

        let dpre_r: Vec<f64> = (0..hd).map(|i| dr[i] * r[i] * (1.0 - r[i])).collect();
        grads.w_r.outer_acc(&dpre_r, a);
        grads.u_r.outer_acc(&dpre_r, h_prev);
        p.u_r.matvec_t_acc(&dpre_r, &mut dh_prev);

        // input embedding row (accumulates across repeated tokens)
        let da = rows
            .entry(trace.ids[t])
            .or_insert_with(|| vec![0.0; d]);
        p.w_r.matvec_t_acc(&dpre_r, da);
        p.w_z.matvec_t_acc(&dpre_z, da);
        p.w.matvec_t_acc(&dpre_c, da);

        dh = dh_prev;
    }
    (grads, rows)
}

pub fn pool_forward(kind: EncoderKind, table: &EmbeddingTable, ids: &[u32]) -> Vec<f64> {
    assert!(!ids.is_empty(), "pooling input must be non-empty");
    let mut out = vec![0.0; table.dim()];
    for &id in ids {
        axpy(&mut out, table.row(id), 1.0);
    }
    if kind == EncoderKind::Mean {
        let s = 1.0 / ids.len() as f64;
        for v in &mut out {
            *v *= s;
        }
    } else {
        debug_assert_eq!(kind, EncoderKind::Sum);
    }
    out
}

pub fn pool_backward(kind: EncoderKind, ids: &[u32], grad_out: &[f64]) -> RowGrads {
    let s = match kind {
        EncoderKind::Sum => 1.0,
        EncoderKind::Mean => 1.0 / ids.len() as f64,
        _ => panic!("pool_backward on a non-pooling kind"),
    };
    let mut rows: RowGrads = BTreeMap::new();
    for &id in ids {
        let row = rows.entry(id).or_insert_with(|| vec![0.0; grad_out.len()]);
        axpy(row, grad_out, s);
    }
    rows
}

/// Saved forward state for [`compose_backward`].
#[derive(Debug, Clone)]
pub enum ComposeTrace {
    Pool { ids: Vec<u32> },
    Gru { traces: Vec<GruTrace> },
}

/// Gradients of one composed embedding: per GRU parameter set plus sparse
/// table rows.
#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub grus: Vec<GruParams>,
    pub rows: RowGrads,
}

impl EncoderGrads {
    pub fn zeros_like(params: &EncoderParams) -> EncoderGrads {
        EncoderGrads {
            grus: params
                .grus
                .iter()
                .map(|g| GruParams::zeros(g.input_dim(), g.hidden_dim()))
                .collect(),
            rows: BTreeMap::new(),
        }
    }

    pub fn add_scaled(&mut self, other: &EncoderGrads, s: f64) {
        debug_assert_eq!(self.grus.len(), other.grus.len());
        for (mine, theirs) in self.grus.iter_mut().zip(&other.grus) {
            mine.add_scaled(theirs, s);
        }
        merge_rows_scaled(&mut self.rows, &other.rows, s);
    }
}

pub fn merge_rows_scaled(dst: &mut RowGrads, src: &RowGrads, s: f64) {
    for (&id, grad) in src {
        match dst.get_mut(&id) {
            Some(row) => axpy(row, grad, s),
            None => {
                let mut row = vec![0.0; grad.len()];
                axpy(&mut row, grad, s);
                dst.insert(id, row);
            }
        }
    }
}

/// Applies the encoder to one node's attribute sequences. `parts` must
/// hold exactly `spec.arity()` sequences.
pub fn compose(
    params: &EncoderParams,
    table: &EmbeddingTable,
    parts: &[Vec<u32>],
) -> (Vec<f64>, ComposeTrace) {
    assert_eq!(
        parts.len(),
        params.spec.arity(),
        "encoder arity mismatch: {} sequences for arity {}",
        parts.len(),
        params.spec.arity()
    );
    match params.spec.kind {
        EncoderKind::Sum | EncoderKind::Mean => {
            let out = pool_forward(params.spec.kind, table, &parts[0]);
            (out, ComposeTrace::Pool {
                ids: parts[0].clone(),
            })
        }
        EncoderKind::Gru | EncoderKind::MultiGruSum => {
            let mut out = vec![0.0; params.spec.h];
            let mut traces = Vec::with_capacity(parts.len());
            for (i, part) in parts.iter().enumerate() {
                let (state, trace) = gru_forward(params.gru_for_part(i), table, part);
                axpy(&mut out, &state, 1.0);
                traces.push(trace);
            }
            (out, ComposeTrace::Gru { traces })
        }
    }
}

pub fn compose_backward(
    params: &EncoderParams,
    table: &EmbeddingTable,
    trace: &ComposeTrace,
    grad_out: &[f64],
) -> EncoderGrads {
    let mut grads = EncoderGrads::zeros_like(params);
    match trace {
        ComposeTrace::Pool { ids } => {
            grads.rows = pool_backward(params.spec.kind, ids, grad_out);
        }
        ComposeTrace::Gru { traces } => {
            for (i, sub) in traces.iter().enumerate() {
                let (g, rows) = gru_backward(params.gru_for_part(i), table, sub, grad_out);
                let slot = if params.spec.shared_subs { 0 } else { i };
                grads.grus[slot].add_scaled(&g, 1.0);
                merge_rows_scaled(&mut grads.rows, &rows, 1.0);
            }
        }
    }
    grads
}
