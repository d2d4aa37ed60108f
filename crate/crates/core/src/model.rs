//! Embedding matrices and the gradient-ascent training loop.
//!
//! Every symbol owns two d-dimensional vectors: a center vector (used when
//! the symbol is the middle of a window) and a context vector (used when it
//! appears as a neighbor). Training maximizes, per positive context symbol,
//! the log-sigmoid of the center/context score minus the same for drawn
//! negatives, with an L2 norm penalty on the involved vectors.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::error::Error;
use crate::negative::{NegativeDistribution, SelfPacedState};
use crate::sampler::{TrainingPair, VoxelStream};
use crate::symbol::{SymbolTable, SymbolVolume};
use crate::Result;

/// Norms below this skip the norm-penalty term, whose gradient is undefined
/// at the origin.
pub const NORM_EPS: f64 = 1e-12;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln(sigmoid(x))`, computed without overflow for large |x|.
#[inline]
pub fn ln_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Index of the largest entry, ties broken toward the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Dot product with four independent accumulators; the summation order here
/// is the one contract every row view must reproduce.
#[inline]
pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let chunks = n / 4;
    let mut acc = [0.0f64; 4];
    for c in 0..chunks {
        let j = c * 4;
        for lane in 0..4 {
            acc[lane] += a[j + lane] * b[j + lane];
        }
    }
    let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in chunks * 4..n {
        total += a[j] * b[j];
    }
    total
}

/// A rows-by-dim matrix of f64 stored as atomic bits.
///
/// Relaxed atomic access makes the matrix shareable by throughput-mode
/// workers that update rows without locking (benign races); in the default
/// single-writer mode the same accessors behave like plain loads and stores,
/// so results are bit-reproducible.
pub struct VectorStore {
    rows: usize,
    dim: usize,
    data: Vec<AtomicU64>,
}

impl VectorStore {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        let mut data = Vec::with_capacity(rows * dim);
        data.resize_with(rows * dim, || AtomicU64::new(0f64.to_bits()));
        VectorStore { rows, dim, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, j: usize) -> f64 {
        f64::from_bits(self.data[row * self.dim + j].load(Ordering::Relaxed))
    }

    #[inline]
    pub fn set(&self, row: usize, j: usize, v: f64) {
        self.data[row * self.dim + j].store(v.to_bits(), Ordering::Relaxed);
    }

    #[inline]
    pub fn copy_row(&self, row: usize, out: &mut [f64]) {
        let base = row * self.dim;
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = f64::from_bits(self.data[base + j].load(Ordering::Relaxed));
        }
    }

    #[inline]
    pub fn dot_row(&self, row: usize, v: &[f64]) -> f64 {
        let base = row * self.dim;
        let mut acc = [0.0f64; 4];
        let chunks = v.len() / 4;
        for c in 0..chunks {
            let j = c * 4;
            for lane in 0..4 {
                acc[lane] += f64::from_bits(self.data[base + j + lane].load(Ordering::Relaxed))
                    * v[j + lane];
            }
        }
        let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for j in chunks * 4..v.len() {
            total += f64::from_bits(self.data[base + j].load(Ordering::Relaxed)) * v[j];
        }
        total
    }

    #[inline]
    pub fn row_norm(&self, row: usize) -> f64 {
        let base = row * self.dim;
        let mut acc = 0.0;
        for j in 0..self.dim {
            let x = f64::from_bits(self.data[base + j].load(Ordering::Relaxed));
            acc += x * x;
        }
        acc.sqrt()
    }

    /// `row += scale * v`
    #[inline]
    pub fn add_scaled_row(&self, row: usize, scale: f64, v: &[f64]) {
        let base = row * self.dim;
        for (j, &x) in v.iter().enumerate() {
            let slot = &self.data[base + j];
            let cur = f64::from_bits(slot.load(Ordering::Relaxed));
            slot.store((cur + scale * x).to_bits(), Ordering::Relaxed);
        }
    }

    pub fn row_vec(&self, row: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.copy_row(row, &mut out);
        out
    }

    pub fn set_row(&self, row: usize, v: &[f64]) {
        for (j, &x) in v.iter().enumerate() {
            self.set(row, j, x);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|a| f64::from_bits(a.load(Ordering::Relaxed)).is_finite())
    }

    /// Copy the whole matrix into a plain row-major vector (for read-heavy
    /// consumers that want vectorizable slices).
    pub fn to_plain(&self) -> Vec<f64> {
        self.data
            .iter()
            .map(|a| f64::from_bits(a.load(Ordering::Relaxed)))
            .collect()
    }
}

/// Row-level access used by the training inner loops. The two
/// implementations perform identical floating-point operations in identical
/// order, so deterministic single-writer training and the safe atomic path
/// produce bit-identical results.
pub(crate) trait Rows: Copy {
    fn dim(self) -> usize;
    fn copy_row(self, row: usize, out: &mut [f64]);
    fn dot_row(self, row: usize, v: &[f64]) -> f64;
    /// `row += scale * v`
    fn add_scaled_row(self, row: usize, scale: f64, v: &[f64]);
}

/// Safe view backed by relaxed atomics; valid under concurrent writers
/// (throughput mode's benign races).
#[derive(Clone, Copy)]
pub(crate) struct AtomicRows<'a> {
    store: &'a VectorStore,
}

impl<'a> AtomicRows<'a> {
    pub(crate) fn new(store: &'a VectorStore) -> Self {
        AtomicRows { store }
    }
}

impl Rows for AtomicRows<'_> {
    #[inline]
    fn dim(self) -> usize {
        self.store.dim
    }

    #[inline]
    fn copy_row(self, row: usize, out: &mut [f64]) {
        self.store.copy_row(row, out)
    }

    #[inline]
    fn dot_row(self, row: usize, v: &[f64]) -> f64 {
        self.store.dot_row(row, v)
    }

    #[inline]
    fn add_scaled_row(self, row: usize, scale: f64, v: &[f64]) {
        self.store.add_scaled_row(row, scale, v)
    }
}

/// Single-writer view over the same storage as plain `f64`s, which lets the
/// inner products vectorize. `AtomicU64` wraps an `UnsafeCell`, so raw
/// access is defined as long as exactly one thread touches the store for
/// the lifetime of the view; construction is `unsafe` to pin that promise
/// on the caller. Not `Send`/`Sync` (raw pointer).
#[derive(Clone, Copy)]
pub(crate) struct PlainRows<'a> {
    ptr: *mut f64,
    dim: usize,
    _store: std::marker::PhantomData<&'a VectorStore>,
}

impl<'a> PlainRows<'a> {
    /// Callers must guarantee no other thread reads or writes `store` while
    /// the view exists.
    pub(crate) unsafe fn new(store: &'a VectorStore) -> Self {
        PlainRows {
            ptr: store.data.as_ptr() as *mut f64,
            dim: store.dim,
            _store: std::marker::PhantomData,
        }
    }
}

impl Rows for PlainRows<'_> {
    #[inline]
    fn dim(self) -> usize {
        self.dim
    }

    #[inline]
    fn copy_row(self, row: usize, out: &mut [f64]) {
        let base = row * self.dim;
        let src = unsafe { std::slice::from_raw_parts(self.ptr.add(base), self.dim) };
        out.copy_from_slice(src);
    }

    #[inline]
    fn dot_row(self, row: usize, v: &[f64]) -> f64 {
        let base = row * self.dim;
        let src = unsafe { std::slice::from_raw_parts(self.ptr.add(base), self.dim) };
        dot_slices(src, v)
    }

    #[inline]
    fn add_scaled_row(self, row: usize, scale: f64, v: &[f64]) {
        let base = row * self.dim;
        let dst = unsafe { std::slice::from_raw_parts_mut(self.ptr.add(base), self.dim) };
        for (x, &y) in dst.iter_mut().zip(v) {
            *x += scale * y;
        }
    }
}

/// The trained model: one center and one context vector per symbol.
pub struct EmbeddingModel {
    centers: VectorStore,
    contexts: VectorStore,
    table: Arc<SymbolTable>,
    trained_epochs: u32,
}

impl EmbeddingModel {
    pub fn symbol_count(&self) -> usize {
        self.table.len()
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn centers(&self) -> &VectorStore {
        &self.centers
    }

    pub fn contexts(&self) -> &VectorStore {
        &self.contexts
    }

    pub fn trained_epochs(&self) -> u32 {
        self.trained_epochs
    }

    pub(crate) fn set_trained_epochs(&mut self, epochs: u32) {
        self.trained_epochs = epochs;
    }

    /// Reassemble a model from raw rows (used by the file loader).
    pub fn from_parts(
        table: Arc<SymbolTable>,
        dim: usize,
        centers: Vec<Vec<f64>>,
        contexts: Vec<Vec<f64>>,
        trained_epochs: u32,
    ) -> Result<Self> {
        let n = table.len();
        if centers.len() != n || contexts.len() != n {
            return Err(Error::Data(format!(
                "row count mismatch: table has {n} symbols, got {} center / {} context rows",
                centers.len(),
                contexts.len()
            )));
        }
        let c = VectorStore::zeros(n, dim);
        let h = VectorStore::zeros(n, dim);
        for (i, row) in centers.iter().enumerate() {
            c.set_row(i, row);
        }
        for (i, row) in contexts.iter().enumerate() {
            h.set_row(i, row);
        }
        Ok(EmbeddingModel {
            centers: c,
            contexts: h,
            table,
            trained_epochs,
        })
    }
}

/// Fresh model: center rows uniform in `[-0.5/dim, 0.5/dim)`, context rows
/// all zero, so every center/context score starts at sigmoid(0) = 0.5.
pub fn init_model(table: Arc<SymbolTable>, dim: usize, rng: &mut ChaCha8Rng) -> Result<EmbeddingModel> {
    if table.is_empty() {
        return Err(Error::Parameter("symbol table is empty".into()));
    }
    if dim == 0 {
        return Err(Error::Parameter("dimension must be >= 1".into()));
    }
    let n = table.len();
    let centers = VectorStore::zeros(n, dim);
    let contexts = VectorStore::zeros(n, dim);
    let scale = 1.0 / dim as f64;
    for row in 0..n {
        for j in 0..dim {
            centers.set(row, j, (rng.random::<f64>() - 0.5) * scale);
        }
    }
    Ok(EmbeddingModel {
        centers,
        contexts,
        table,
        trained_epochs: 0,
    })
}

/// The per-instance objective: for each positive context symbol with its
/// drawn negatives,
/// `ln s(zhat_o . z_c) - penalty * ||z_c||  +  sum_w [ ln s(-zhat_w . z_c) - penalty/(k+1) * ||zhat_w|| ]`.
///
/// Used for gradient verification and loss monitoring; `train_step` performs
/// gradient ascent on exactly this quantity per positive.
pub fn objective(
    model: &EmbeddingModel,
    pair: &TrainingPair,
    negatives: &[Vec<u32>],
    penalty: f64,
    k: usize,
) -> f64 {
    let dim = model.dim();
    let mut zc = vec![0.0; dim];
    model.centers.copy_row(pair.center as usize, &mut zc);
    let zc_norm = dot_slices(&zc, &zc).sqrt();
    let mut total = 0.0;
    let mut row = vec![0.0; dim];
    for (i, &o) in pair.context.iter().enumerate() {
        let dot_o = model.contexts.dot_row(o as usize, &zc);
        total += ln_sigmoid(dot_o) - penalty * zc_norm;
        for &w in negatives.get(i).map(Vec::as_slice).unwrap_or(&[]) {
            let dot_w = model.contexts.dot_row(w as usize, &zc);
            model.contexts.copy_row(w as usize, &mut row);
            total += ln_sigmoid(-dot_w) - penalty / (k as f64 + 1.0) * dot_slices(&row, &row).sqrt();
        }
    }
    total
}

/// Scratch buffers reused across training steps.
pub struct StepScratch {
    zc: Vec<f64>,
    accum: Vec<f64>,
    row: Vec<f64>,
}

impl StepScratch {
    pub fn new(dim: usize) -> Self {
        StepScratch {
            zc: vec![0.0; dim],
            accum: vec![0.0; dim],
            row: vec![0.0; dim],
        }
    }
}

/// Objective contribution and instance count of one training step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub objective: f64,
    pub instances: u64,
}

/// Apply one pair's gradient-ascent updates.
///
/// For each positive context symbol `o` (with its own negative list):
/// the center accumulator starts from the positive gradient with the center
/// norm penalty, the positive's context vector moves toward the center, each
/// negative's context vector moves away (with its own norm penalty), and the
/// center row is updated once at the end of the instance. All gradients of
/// one instance are evaluated at the state from before that instance's
/// updates.
pub fn train_step(
    model: &EmbeddingModel,
    pair: &TrainingPair,
    negatives: &[Vec<u32>],
    cfg: &TrainConfig,
    scratch: &mut StepScratch,
) -> StepStats {
    step_impl(
        AtomicRows::new(&model.centers),
        AtomicRows::new(&model.contexts),
        pair,
        negatives,
        cfg,
        scratch,
    )
}

pub(crate) fn step_impl<R: Rows>(
    centers: R,
    contexts: R,
    pair: &TrainingPair,
    negatives: &[Vec<u32>],
    cfg: &TrainConfig,
    scratch: &mut StepScratch,
) -> StepStats {
    let alpha = cfg.learning_rate;
    let penalty = cfg.penalty;
    let neg_penalty = penalty / (cfg.negatives as f64 + 1.0);
    let dim = centers.dim();
    let c = pair.center as usize;
    let mut stats = StepStats::default();

    for (i, &o) in pair.context.iter().enumerate() {
        let o = o as usize;
        let zc = &mut scratch.zc[..dim];
        centers.copy_row(c, zc);
        let zc_norm = dot_slices(zc, zc).sqrt();

        let dot_o = contexts.dot_row(o, zc);
        let g = 1.0 - sigmoid(dot_o);
        stats.objective += ln_sigmoid(dot_o) - penalty * zc_norm;

        // e = alpha * (g * zhat_o - penalty * z_c / ||z_c||)
        let e = &mut scratch.accum[..dim];
        contexts.copy_row(o, &mut scratch.row[..dim]);
        let ag = alpha * g;
        for (ej, &rj) in e.iter_mut().zip(scratch.row.iter()) {
            *ej = ag * rj;
        }
        if penalty > 0.0 && zc_norm >= NORM_EPS {
            let s = alpha * penalty / zc_norm;
            for (ej, &zj) in e.iter_mut().zip(zc.iter()) {
                *ej -= s * zj;
            }
        }

        // zhat_o += alpha * g * z_c
        contexts.add_scaled_row(o, ag, zc);

        for &w in negatives.get(i).map(Vec::as_slice).unwrap_or(&[]) {
            let w = w as usize;
            let dot_w = contexts.dot_row(w, zc);
            let gw = -sigmoid(dot_w);
            contexts.copy_row(w, &mut scratch.row[..dim]);
            let w_norm = dot_slices(&scratch.row[..dim], &scratch.row[..dim]).sqrt();
            stats.objective += ln_sigmoid(-dot_w) - neg_penalty * w_norm;

            let agw = alpha * gw;
            for (ej, &rj) in e.iter_mut().zip(scratch.row.iter()) {
                *ej += agw * rj;
            }

            // zhat_w += alpha * (gw * z_c - neg_penalty * zhat_w / ||zhat_w||)
            if penalty > 0.0 && w_norm >= NORM_EPS {
                let s = neg_penalty / w_norm;
                for (rj, &zj) in scratch.row.iter_mut().zip(zc.iter()) {
                    *rj = gw * zj - s * *rj;
                }
                contexts.add_scaled_row(w, alpha, &scratch.row[..dim]);
            } else {
                contexts.add_scaled_row(w, agw, zc);
            }
        }

        // z_c += e
        centers.add_scaled_row(c, 1.0, e);
        stats.instances += 1;
    }
    stats
}

/// Progress record of one training run.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub pairs: u64,
    pub instances: u64,
    /// `(pairs seen, mean objective per instance)` sampled every 10^4 pairs.
    pub mean_objective: Vec<(u64, f64)>,
    /// Sum of per-instance objectives over the whole run.
    pub objective_total: f64,
    pub final_mean_objective: f64,
    /// Set when the vocabulary was too small to train (single symbol).
    pub degenerate: bool,
    pub seconds: f64,
}

const LOG_EVERY_PAIRS: u64 = 10_000;

/// Train a model on one symbol volume in deterministic single-writer mode.
pub fn train(sv: &SymbolVolume, cfg: &TrainConfig) -> Result<(EmbeddingModel, TrainLog)> {
    train_with_threads(sv, cfg, 1)
}

/// Train with `threads` workers. One worker is deterministic; more trade
/// bit-reproducibility for throughput by updating the shared matrices
/// without locks.
pub fn train_with_threads(
    sv: &SymbolVolume,
    cfg: &TrainConfig,
    threads: usize,
) -> Result<(EmbeddingModel, TrainLog)> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = init_model(Arc::clone(sv.table()), cfg.dimension, &mut rng)?;
    let mut log = TrainLog::default();

    if sv.table().len() < 2 {
        log.degenerate = true;
        log.seconds = started.elapsed().as_secs_f64();
        return Ok((model, log));
    }

    let threads = threads.max(1);
    for epoch in 0..cfg.epochs {
        let stream = VoxelStream::new(sv, cfg, &mut rng);
        if threads == 1 {
            // Sole thread for the duration of the epoch: the plain view is
            // sound and lets the row arithmetic vectorize.
            let centers = unsafe { PlainRows::new(&model.centers) };
            let contexts = unsafe { PlainRows::new(&model.contexts) };
            run_epoch_single(centers, contexts, sv, cfg, stream, &mut rng, &mut log);
        } else {
            run_epoch_hogwild(&model, sv, cfg, &stream, threads, epoch, &mut log);
        }
        model.set_trained_epochs(epoch + 1);
    }

    if !(model.centers.is_finite() && model.contexts.is_finite()) {
        return Err(Error::Internal("non-finite embedding after training".into()));
    }
    log.final_mean_objective = if log.instances > 0 {
        log.objective_total / log.instances as f64
    } else {
        0.0
    };
    log.seconds = started.elapsed().as_secs_f64();
    Ok((model, log))
}

fn run_epoch_single<R: Rows>(
    centers: R,
    contexts: R,
    sv: &SymbolVolume,
    cfg: &TrainConfig,
    stream: VoxelStream<'_>,
    rng: &mut ChaCha8Rng,
    log: &mut TrainLog,
) {
    let mut dist = NegativeDistribution::new(sv.frequencies(), cfg);
    let mut state = SelfPacedState::new(cfg);
    let mut scratch = StepScratch::new(cfg.dimension);
    let mut negatives: Vec<Vec<u32>> = Vec::new();
    let mut window_obj = 0.0;
    let mut window_n = 0u64;

    for pair in stream {
        draw_for_pair(centers, contexts, &pair, cfg, &mut dist, &state, rng, &mut negatives);
        let stats = step_impl(centers, contexts, &pair, &negatives, cfg, &mut scratch);
        log.pairs += 1;
        log.instances += stats.instances;
        log.objective_total += stats.objective;
        window_obj += stats.objective;
        window_n += stats.instances;
        if log.pairs % LOG_EVERY_PAIRS == 0 {
            let mean = if window_n > 0 { window_obj / window_n as f64 } else { 0.0 };
            log.mean_objective.push((log.pairs, mean));
            window_obj = 0.0;
            window_n = 0;
        }
        if log.pairs % cfg.batch_size == 0 {
            state.advance();
        }
    }
}

fn run_epoch_hogwild(
    model: &EmbeddingModel,
    sv: &SymbolVolume,
    cfg: &TrainConfig,
    stream: &VoxelStream<'_>,
    threads: usize,
    epoch: u32,
    log: &mut TrainLog,
) {
    let pair_counter = AtomicU64::new(log.pairs);
    let instance_counter = AtomicU64::new(0);
    let slots = stream.len();
    let mut worker_objectives = vec![0.0f64; threads];

    std::thread::scope(|scope| {
        for (worker, obj_slot) in worker_objectives.iter_mut().enumerate() {
            let counter = &pair_counter;
            let instances = &instance_counter;
            scope.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cfg.seed
                        ^ (worker as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                        ^ u64::from(epoch).wrapping_mul(0xA24B_AED4_963E_E407),
                );
                let mut dist = NegativeDistribution::new(sv.frequencies(), cfg);
                let mut scratch = StepScratch::new(cfg.dimension);
                let mut ctx_scratch = Vec::new();
                let mut negatives: Vec<Vec<u32>> = Vec::new();
                let mut local_obj = 0.0;
                let mut local_instances = 0u64;
                let centers = AtomicRows::new(&model.centers);
                let contexts = AtomicRows::new(&model.contexts);
                let mut slot = worker;
                while slot < slots {
                    let pair = stream.pair_at(slot, &mut ctx_scratch);
                    let pairs_done = counter.fetch_add(1, Ordering::Relaxed);
                    let state = SelfPacedState::at_batch(cfg, 1 + pairs_done / cfg.batch_size);
                    draw_for_pair(
                        centers, contexts, &pair, cfg, &mut dist, &state, &mut rng,
                        &mut negatives,
                    );
                    let stats = step_impl(centers, contexts, &pair, &negatives, cfg, &mut scratch);
                    local_obj += stats.objective;
                    local_instances += stats.instances;
                    slot += threads;
                }
                *obj_slot = local_obj;
                instances.fetch_add(local_instances, Ordering::Relaxed);
            });
        }
    });

    log.pairs = pair_counter.load(Ordering::Relaxed);
    log.instances += instance_counter.load(Ordering::Relaxed);
    log.objective_total += worker_objectives.iter().sum::<f64>();
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn draw_for_pair<R: Rows>(
    centers: R,
    contexts: R,
    pair: &TrainingPair,
    cfg: &TrainConfig,
    dist: &mut NegativeDistribution,
    state: &SelfPacedState,
    rng: &mut ChaCha8Rng,
    negatives: &mut Vec<Vec<u32>>,
) {
    negatives.resize_with(pair.context.len(), Vec::new);
    dist.set_exclusions(pair.center, &pair.context);
    for (i, _) in pair.context.iter().enumerate() {
        let slot = &mut negatives[i];
        slot.clear();
        crate::negative::draw_impl(pair.center, cfg.negatives, centers, contexts, dist, state, rng, slot);
    }
    dist.clear_exclusions();
}

/// Prediction scores for a center symbol given a context multiset: the
/// componentwise mean over context symbols of `sigmoid(score)` against every
/// candidate. Entries live in (0, 1) and are not normalized; consumers take
/// the argmax (ties resolve to the lowest symbol id).
pub fn predict_distribution(model: &EmbeddingModel, context: &[u32]) -> Result<Vec<f64>> {
    predict_distribution_with(model, context, PredictScoring::ContextCentersVsCandidates)
}

/// Which rows score candidates during prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictScoring {
    /// Each context symbol's center vector is scored against every
    /// candidate's context vector.
    #[default]
    ContextCentersVsCandidates,
    /// The mirrored alternative: each context symbol's context vector scored
    /// against every candidate's center vector.
    ContextContextsVsCandidates,
}

pub fn predict_distribution_with(
    model: &EmbeddingModel,
    context: &[u32],
    scoring: PredictScoring,
) -> Result<Vec<f64>> {
    if context.is_empty() {
        return Err(Error::Parameter("prediction context is empty".into()));
    }
    let n = model.symbol_count();
    let dim = model.dim();
    let (lhs, rhs) = match scoring {
        PredictScoring::ContextCentersVsCandidates => (&model.centers, &model.contexts),
        PredictScoring::ContextContextsVsCandidates => (&model.contexts, &model.centers),
    };
    let mut probs = vec![0.0; n];
    let mut buf = vec![0.0; dim];
    for &o in context {
        lhs.copy_row(o as usize, &mut buf);
        for (cand, p) in probs.iter_mut().enumerate() {
            *p += sigmoid(rhs.dot_row(cand, &buf));
        }
    }
    let inv = 1.0 / context.len() as f64;
    for p in &mut probs {
        *p *= inv;
    }
    Ok(probs)
}
