//! Exact t-SNE for small point sets (feature means, volume collections).
//!
//! Standard exact formulation: perplexity-calibrated Gaussian affinities in
//! the input space, Student-t affinities in 2D, KL divergence minimized by
//! gradient descent with momentum and per-coordinate gains, with an early
//! exaggeration phase. The final half of the iterations switches to a
//! monotone backtracking descent so the recorded KL curve never increases
//! there.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 5.0,
            iterations: 1000,
            learning_rate: 100.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TsneResult {
    pub positions: Vec<[f64; 2]>,
    /// KL divergence against the unexaggerated affinities, one entry per
    /// iteration.
    pub kl_history: Vec<f64>,
}

/// Run t-SNE on points in R^d (Euclidean affinities).
pub fn tsne_points(points: &[Vec<f64>], params: &TsneParams) -> Result<TsneResult> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Parameter("t-SNE needs at least one point".into()));
    }
    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            sq[i * n + j] = d2;
        }
    }
    run(&sq, n, params)
}

/// Run t-SNE on a precomputed symmetric distance matrix (distances are
/// squared internally, matching the Euclidean path).
pub fn tsne_distances(distances: &[f64], n: usize, params: &TsneParams) -> Result<TsneResult> {
    if n == 0 || distances.len() != n * n {
        return Err(Error::Parameter(format!(
            "distance matrix length {} does not match n = {n}",
            distances.len()
        )));
    }
    let sq: Vec<f64> = distances.iter().map(|&d| d * d).collect();
    run(&sq, n, params)
}

fn run(sq_dist: &[f64], n: usize, params: &TsneParams) -> Result<TsneResult> {
    if n == 1 {
        return Ok(TsneResult {
            positions: vec![[0.0, 0.0]],
            kl_history: vec![0.0; params.iterations],
        });
    }
    if params.iterations == 0 {
        return Err(Error::Parameter("t-SNE needs at least one iteration".into()));
    }
    let p = joint_affinities(sq_dist, n, params.perplexity);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [(rng.random::<f64>() - 0.5) * 1e-2, (rng.random::<f64>() - 0.5) * 1e-2])
        .collect();

    let iters = params.iterations;
    let exaggeration_end = (iters / 4).min(250);
    let monotone_start = iters / 2;
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_history = Vec::with_capacity(iters);

    let mut q = vec![0.0; n * n];
    let mut grad = vec![[0.0f64; 2]; n];

    for iter in 0..iters {
        let exaggeration = if iter < exaggeration_end { 4.0 } else { 1.0 };
        compute_q(&y, &mut q);
        let kl = kl_divergence(&p, &q);

        if iter < monotone_start {
            gradient(&p, &q, &y, exaggeration, &mut grad);
            let momentum = if iter < exaggeration_end { 0.5 } else { 0.8 };
            for i in 0..n {
                for c in 0..2 {
                    let same_sign = grad[i][c].signum() == velocity[i][c].signum();
                    gains[i][c] = if same_sign {
                        (gains[i][c] * 0.8).max(0.01)
                    } else {
                        gains[i][c] + 0.2
                    };
                    velocity[i][c] =
                        momentum * velocity[i][c] - params.learning_rate * gains[i][c] * grad[i][c];
                    y[i][c] += velocity[i][c];
                }
            }
            center(&mut y);
            kl_history.push(kl);
        } else {
            // Monotone tail: plain descent with backtracking; a step is only
            // accepted if it does not increase the KL divergence.
            gradient(&p, &q, &y, 1.0, &mut grad);
            let mut step = params.learning_rate;
            let mut accepted = false;
            for _ in 0..30 {
                let candidate: Vec<[f64; 2]> = (0..n)
                    .map(|i| [y[i][0] - step * grad[i][0], y[i][1] - step * grad[i][1]])
                    .collect();
                compute_q(&candidate, &mut q);
                let kl_new = kl_divergence(&p, &q);
                if kl_new <= kl {
                    y = candidate;
                    center(&mut y);
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // Stay put; the recorded divergence repeats.
            }
            compute_q(&y, &mut q);
            kl_history.push(kl_divergence(&p, &q).min(kl));
        }
    }

    Ok(TsneResult {
        positions: y,
        kl_history,
    })
}

/// Symmetrized, perplexity-calibrated affinities; entries floored at 1e-12.
fn joint_affinities(sq_dist: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let perplexity = perplexity.max(1.0).min((n - 1) as f64);
    let target_entropy = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    for i in 0..n {
        let mut beta = 1.0;
        let mut beta_min = f64::NEG_INFINITY;
        let mut beta_max = f64::INFINITY;
        for _ in 0..64 {
            let mut sum = 0.0;
            for j in 0..n {
                let v = if i == j {
                    0.0
                } else {
                    (-beta * sq_dist[i * n + j]).exp()
                };
                cond[i * n + j] = v;
                sum += v;
            }
            let mut entropy = 0.0;
            if sum > 0.0 {
                for j in 0..n {
                    if i != j {
                        let pj = cond[i * n + j] / sum;
                        cond[i * n + j] = pj;
                        if pj > 1e-12 {
                            entropy -= pj * pj.ln();
                        }
                    }
                }
            }
            let diff = entropy - target_entropy;
            if diff.abs() < 1e-7 {
                break;
            }
            if diff > 0.0 {
                beta_min = beta;
                beta = if beta_max.is_infinite() { beta * 2.0 } else { (beta + beta_max) / 2.0 };
            } else {
                beta_max = beta;
                beta = if beta_min.is_infinite() { beta / 2.0 } else { (beta + beta_min) / 2.0 };
            }
        }
    }
    let mut p = vec![0.0; n * n];
    let norm = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / norm).max(1e-12);
            }
        }
    }
    p
}

fn compute_q(y: &[[f64; 2]], q: &mut [f64]) {
    let n = y.len();
    let mut sum = 0.0;
    for i in 0..n {
        q[i * n + i] = 0.0;
        for j in (i + 1)..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let w = 1.0 / (1.0 + dx * dx + dy * dy);
            q[i * n + j] = w;
            q[j * n + i] = w;
            sum += 2.0 * w;
        }
    }
    if sum > 0.0 {
        for v in q.iter_mut() {
            *v = (*v / sum).max(1e-12);
        }
        for i in 0..n {
            q[i * n + i] = 0.0;
        }
    }
}

fn gradient(p: &[f64], q: &[f64], y: &[[f64; 2]], exaggeration: f64, out: &mut [[f64; 2]]) {
    let n = y.len();
    for g in out.iter_mut() {
        *g = [0.0, 0.0];
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let w = 1.0 / (1.0 + dx * dx + dy * dy);
            let f = 4.0 * (exaggeration * p[i * n + j] - q[i * n + j]) * w;
            out[i][0] += f * dx;
            out[i][1] += f * dy;
        }
    }
}

fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pv, _)| pv > 1e-12)
        .map(|(&pv, &qv)| pv * (pv / qv.max(1e-12)).ln())
        .sum()
}

fn center(y: &mut [[f64; 2]]) {
    let n = y.len() as f64;
    let mx = y.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = y.iter().map(|p| p[1]).sum::<f64>() / n;
    for p in y.iter_mut() {
        p[0] -= mx;
        p[1] -= my;
    }
}
