//! Scalar-value similarity maps: clamped cosine similarity between center
//! vectors, over all symbol pairs.

use std::path::Path;

use rayon::prelude::*;

use crate::fmt::sig_digits;
use crate::model::{EmbeddingModel, NORM_EPS};
use crate::volume::write_atomic;
use crate::Result;

/// Symmetric matrix of clamped cosine similarities in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SimilarityMap {
    size: usize,
    values: Vec<f64>,
    /// Symbols whose center vector had (near-)zero norm; their similarity is
    /// 0 against everything, themselves included.
    zero_norm: Vec<u32>,
    labels: Vec<String>,
}

impl SimilarityMap {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.size + y]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zero_norm_symbols(&self) -> &[u32] {
        &self.zero_norm
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// CSV export: a header row of symbol labels, then one row of floats per
    /// symbol at 6 significant digits. Zero-norm symbols, if any, are listed
    /// in a leading `#` comment line.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        if !self.zero_norm.is_empty() {
            out.push_str("# zero_norm_symbols: ");
            out.push_str(
                &self
                    .zero_norm
                    .iter()
                    .map(|s| self.labels[*s as usize].clone())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out.push_str(&self.labels.join(","));
        out.push('\n');
        for x in 0..self.size {
            let row = &self.values[x * self.size..(x + 1) * self.size];
            let mut first = true;
            for &v in row {
                if !first {
                    out.push(',');
                }
                out.push_str(&sig_digits(v, 6));
                first = false;
            }
            out.push('\n');
        }
        write_atomic(path, out.as_bytes())
    }
}

/// Clamped cosine similarity of two center vectors: `max(cos, 0)`, and 0
/// whenever either vector has (near-)zero norm. A symbol against itself is
/// exactly 1 (the cosine of identical vectors, free of rounding).
pub fn similarity(model: &EmbeddingModel, x: u32, y: u32) -> f64 {
    let dim = model.dim();
    let mut a = vec![0.0; dim];
    model.centers().copy_row(x as usize, &mut a);
    if x == y {
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        return if norm < NORM_EPS { 0.0 } else { 1.0 };
    }
    let mut b = vec![0.0; dim];
    model.centers().copy_row(y as usize, &mut b);
    cosine_clamped(&a, &b)
}

pub(crate) fn cosine_clamped(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let na = na.sqrt();
    let nb = nb.sqrt();
    if na < NORM_EPS || nb < NORM_EPS {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// The full symmetric map over all symbol pairs, parallel across rows.
pub fn similarity_map(model: &EmbeddingModel) -> SimilarityMap {
    let n = model.symbol_count();
    let rows: Vec<Vec<f64>> = (0..n).map(|r| model.centers().row_vec(r)).collect();
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut values = vec![0.0; n * n];
    values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(x, row_out)| {
            if norms[x] < NORM_EPS {
                return;
            }
            let rx = &rows[x];
            for (y, out) in row_out.iter_mut().enumerate() {
                if norms[y] < NORM_EPS {
                    continue;
                }
                if y == x {
                    *out = 1.0;
                    continue;
                }
                let dot: f64 = rx.iter().zip(&rows[y]).map(|(&a, &b)| a * b).sum();
                *out = (dot / (norms[x] * norms[y])).clamp(0.0, 1.0);
            }
        });
    // Mirror the upper triangle so symmetry holds bit-exactly.
    for x in 0..n {
        for y in (x + 1)..n {
            let v = values[x * n + y];
            values[y * n + x] = v;
        }
    }
    let zero_norm = (0..n as u32).filter(|&s| norms[s as usize] < NORM_EPS).collect();
    let labels = (0..n as u32).map(|id| model.table().label(id)).collect();
    SimilarityMap {
        size: n,
        values,
        zero_norm,
        labels,
    }
}
