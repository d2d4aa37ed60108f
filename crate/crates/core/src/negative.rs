//! Negative sampling with two refinements over plain frequency sampling:
//! adaptive exclusion of the current center and context plus an L2 norm
//! penalty on the updated vectors (applied in the model step), and a
//! self-paced curriculum that filters hard negatives early and re-weights
//! candidates by their current informativeness.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::model::{sigmoid, AtomicRows, EmbeddingModel, Rows};

/// Walker alias table for O(1) draws from a fixed discrete distribution.
#[derive(Debug, Clone)]
struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(probabilities: &[f64]) -> Self {
        let n = probabilities.len();
        let mut prob = vec![0.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small = Vec::new();
        let mut large = Vec::new();
        let scaled: Vec<f64> = probabilities.iter().map(|p| p * n as f64).collect();
        let mut work = scaled;
        for (i, &w) in work.iter().enumerate() {
            if w < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            prob[s] = work[s];
            alias[s] = l as u32;
            work[l] = (work[l] + work[s]) - 1.0;
            if work[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        for i in large {
            prob[i] = 1.0;
        }
        for i in small {
            prob[i] = 1.0;
        }
        AliasTable { prob, alias }
    }

    #[inline]
    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        let n = self.prob.len();
        let slot = rng.random_range(0..n);
        if rng.random::<f64>() < self.prob[slot] {
            slot as u32
        } else {
            self.alias[slot]
        }
    }
}

/// Base negative distribution: unigram frequencies raised to the 3/4 power
/// and normalized, with a per-pair exclusion scratch set.
#[derive(Debug, Clone)]
pub struct NegativeDistribution {
    probs: Vec<f64>,
    alias: AliasTable,
    excluded: Vec<bool>,
    excluded_list: Vec<u32>,
    exclude_context: bool,
    self_paced: bool,
    // Reusable buffers for the pool-sampling path.
    pool_scratch: Vec<u32>,
    zc_scratch: Vec<f64>,
    score_scratch: Vec<f64>,
}

impl NegativeDistribution {
    pub fn new(frequencies: &[u64], cfg: &TrainConfig) -> Self {
        let weights: Vec<f64> = frequencies.iter().map(|&f| (f as f64).powf(0.75)).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = if total > 0.0 {
            weights.iter().map(|w| w / total).collect()
        } else {
            weights
        };
        let alias = AliasTable::new(&probs);
        NegativeDistribution {
            excluded: vec![false; probs.len()],
            excluded_list: Vec::new(),
            probs,
            alias,
            exclude_context: cfg.exclude_context,
            self_paced: cfg.self_paced,
            pool_scratch: Vec::new(),
            zc_scratch: Vec::new(),
            score_scratch: Vec::new(),
        }
    }

    /// Normalized base probability per symbol.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Mark the current center and context as ineligible. When context
    /// exclusion is disabled (ablation), only the center itself is excluded.
    pub fn set_exclusions(&mut self, center: u32, context: &[u32]) {
        self.clear_exclusions();
        self.mark(center);
        if self.exclude_context {
            for &o in context {
                self.mark(o);
            }
        }
    }

    fn mark(&mut self, symbol: u32) {
        let slot = &mut self.excluded[symbol as usize];
        if !*slot {
            *slot = true;
            self.excluded_list.push(symbol);
        }
    }

    pub fn clear_exclusions(&mut self) {
        for &s in &self.excluded_list {
            self.excluded[s as usize] = false;
        }
        self.excluded_list.clear();
    }

    #[inline]
    fn eligible(&self, symbol: u32) -> bool {
        !self.excluded[symbol as usize] && self.probs[symbol as usize] > 0.0
    }

    /// All symbols currently drawable from the base distribution.
    fn eligible_symbols(&self) -> Vec<u32> {
        (0..self.probs.len() as u32).filter(|&s| self.eligible(s)).collect()
    }
}

/// `min(4 eta^2 / batch^2 + 1 / batch, 1)`: the curriculum threshold, small
/// early so only easy negatives pass, growing to 1 as batches accumulate.
pub fn threshold_value(batch_index: u64, batch_size: u64) -> f64 {
    let eta = batch_index as f64;
    let b = batch_size as f64;
    (4.0 * eta * eta / (b * b) + 1.0 / b).min(1.0)
}

/// Curriculum position: the batch counter and the filter threshold derived
/// from it.
#[derive(Debug, Clone)]
pub struct SelfPacedState {
    batch_index: u64,
    batch_size: u64,
    literal_max: bool,
}

impl SelfPacedState {
    pub fn new(cfg: &TrainConfig) -> Self {
        SelfPacedState::at_batch(cfg, 1)
    }

    /// Position the schedule at an arbitrary batch counter (used by
    /// throughput-mode workers that derive the counter from shared progress).
    pub fn at_batch(cfg: &TrainConfig, batch_index: u64) -> Self {
        SelfPacedState {
            batch_index: batch_index.max(1),
            batch_size: cfg.batch_size,
            literal_max: cfg.threshold_literal_max,
        }
    }

    pub fn batch_index(&self) -> u64 {
        self.batch_index
    }

    /// Threshold at the current batch; nondecreasing, in (0, 1].
    pub fn threshold(&self) -> f64 {
        if self.literal_max {
            // Debug variant: the unclamped growth term bounded below by 1.
            let eta = self.batch_index as f64;
            let b = self.batch_size as f64;
            (4.0 * eta * eta / (b * b) + 1.0 / b).max(1.0)
        } else {
            threshold_value(self.batch_index, self.batch_size)
        }
    }

    pub fn advance(&mut self) {
        self.batch_index += 1;
    }
}

/// Candidate pool size as a multiple of the requested draw count.
const POOL_FACTOR: usize = 8;
/// Rejection attempts allowed per pool slot before scanning exhaustively.
const REJECTION_BUDGET_FACTOR: usize = 32;

/// Draw up to `k` negative symbols for the current center.
///
/// Exclusions must have been staged on `dist` for the current pair. With the
/// curriculum enabled and past warm-up, a pool of `8k` base-distribution
/// candidates is scored against the center; candidates whose sigmoid score
/// reaches the threshold are dropped, and `k` are picked from the survivors
/// with softmax weights on the scores. During warm-up — while the threshold
/// is at or below the 0.5 score of an untrained pair, where literal
/// filtering would discard every candidate — draws come straight from the
/// excluded base distribution, as they do when the curriculum is disabled.
///
/// Fewer than `k` results (possibly none) signal a degenerate eligible set;
/// callers skip the missing negatives.
pub fn draw_negatives(
    center: u32,
    k: usize,
    model: &EmbeddingModel,
    dist: &mut NegativeDistribution,
    state: &SelfPacedState,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<u32>,
) {
    draw_impl(
        center,
        k,
        AtomicRows::new(model.centers()),
        AtomicRows::new(model.contexts()),
        dist,
        state,
        rng,
        out,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn draw_impl<R: Rows>(
    center: u32,
    k: usize,
    centers: R,
    contexts: R,
    dist: &mut NegativeDistribution,
    state: &SelfPacedState,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<u32>,
) {
    out.clear();
    let threshold = state.threshold();
    if !dist.self_paced || threshold <= 0.5 {
        draw_plain(k, dist, rng, out);
        return;
    }

    let m = POOL_FACTOR * k.max(1);
    let mut pool = std::mem::take(&mut dist.pool_scratch);
    let mut zc = std::mem::take(&mut dist.zc_scratch);
    let mut scores = std::mem::take(&mut dist.score_scratch);
    pool.clear();
    fill_pool(m, dist, rng, &mut pool);
    if !pool.is_empty() {
        // Score each candidate against the current center vector.
        zc.resize(centers.dim(), 0.0);
        centers.copy_row(center as usize, &mut zc);
        scores.clear();
        scores.extend(pool.iter().map(|&w| contexts.dot_row(w as usize, &zc)));

        if threshold < 1.0 {
            // Curriculum filter (a threshold of 1 can never trigger: sigmoid < 1).
            let mut kept = 0;
            for i in 0..pool.len() {
                if sigmoid(scores[i]) < threshold {
                    pool[kept] = pool[i];
                    scores[kept] = scores[i];
                    kept += 1;
                }
            }
            pool.truncate(kept);
            scores.truncate(kept);
        }

        if !pool.is_empty() {
            // Softmax weights over the pool (scores turn into weights in
            // place), then k picks without slot replacement.
            let max_score = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for s in scores.iter_mut() {
                *s = (*s - max_score).exp();
            }
            let weights = &mut scores;
            let mut remaining: f64 = weights.iter().sum();
            for _ in 0..k.min(pool.len()) {
                let mut pick = rng.random::<f64>() * remaining;
                let mut chosen = pool.len() - 1;
                for (i, &w) in weights.iter().enumerate() {
                    if w <= 0.0 {
                        continue;
                    }
                    if pick < w {
                        chosen = i;
                        break;
                    }
                    pick -= w;
                }
                out.push(pool[chosen]);
                remaining -= weights[chosen];
                weights[chosen] = 0.0;
                if remaining <= 0.0 {
                    break;
                }
            }
        }
    }
    dist.pool_scratch = pool;
    dist.zc_scratch = zc;
    dist.score_scratch = scores;
}

/// Strategy-1-only drawing: k independent draws from the renormalized base
/// distribution restricted to the eligible set.
fn draw_plain(k: usize, dist: &mut NegativeDistribution, rng: &mut ChaCha8Rng, out: &mut Vec<u32>) {
    let budget = REJECTION_BUDGET_FACTOR * k.max(1);
    let mut attempts = 0;
    while out.len() < k && attempts < budget {
        let s = dist.alias.sample(rng);
        attempts += 1;
        if dist.eligible(s) {
            out.push(s);
        }
    }
    if out.len() < k {
        let eligible = dist.eligible_symbols();
        if eligible.is_empty() {
            return;
        }
        let total: f64 = eligible.iter().map(|&s| dist.probs[s as usize]).sum();
        while out.len() < k {
            out.push(weighted_pick(&eligible, &dist.probs, total, rng));
        }
    }
}

fn fill_pool(m: usize, dist: &mut NegativeDistribution, rng: &mut ChaCha8Rng, pool: &mut Vec<u32>) {
    let budget = REJECTION_BUDGET_FACTOR * m;
    let mut attempts = 0;
    while pool.len() < m && attempts < budget {
        let s = dist.alias.sample(rng);
        attempts += 1;
        if dist.eligible(s) {
            pool.push(s);
        }
    }
    if pool.len() < m {
        let eligible = dist.eligible_symbols();
        if eligible.is_empty() {
            return;
        }
        let total: f64 = eligible.iter().map(|&s| dist.probs[s as usize]).sum();
        while pool.len() < m {
            pool.push(weighted_pick(&eligible, &dist.probs, total, rng));
        }
    }
}

fn weighted_pick(eligible: &[u32], probs: &[f64], total: f64, rng: &mut ChaCha8Rng) -> u32 {
    let mut pick = rng.random::<f64>() * total;
    for &s in eligible {
        let w = probs[s as usize];
        if pick < w {
            return s;
        }
        pick -= w;
    }
    *eligible.last().expect("eligible set checked non-empty")
}
