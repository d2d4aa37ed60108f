//! Training-pair generation: 3D context windows and the subsampled voxel
//! stream.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::error::Error;
use crate::symbol::SymbolVolume;
use crate::Result;

/// One training pair: a center symbol and the multiset of symbols in its
/// context window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub center: u32,
    pub context: Vec<u32>,
}

/// Collect the symbols of all in-bounds neighbors within Chebyshev radius
/// `window` of `voxel`, excluding the voxel itself. Boundary voxels yield
/// smaller contexts.
pub fn context_of(sv: &SymbolVolume, voxel: (usize, usize, usize), window: usize) -> Result<Vec<u32>> {
    let dims = sv.dims();
    let (x, y, z) = voxel;
    if !dims.contains(x, y, z) {
        return Err(Error::Parameter(format!(
            "voxel ({x}, {y}, {z}) out of bounds for {dims}"
        )));
    }
    let mut out = Vec::with_capacity((2 * window + 1).pow(3) - 1);
    collect_context(sv, dims.index(x, y, z), window, &mut out);
    Ok(out)
}

/// Context collection on a linear index, reusing the output buffer.
#[inline]
pub(crate) fn collect_context(sv: &SymbolVolume, idx: usize, window: usize, out: &mut Vec<u32>) {
    let dims = sv.dims();
    let (x, y, z) = dims.coords(idx);
    let w = window as isize;
    let x0 = x as isize;
    let y0 = y as isize;
    let z0 = z as isize;
    out.clear();
    for dz in -w..=w {
        let zz = z0 + dz;
        if zz < 0 || zz >= dims.nz as isize {
            continue;
        }
        for dy in -w..=w {
            let yy = y0 + dy;
            if yy < 0 || yy >= dims.ny as isize {
                continue;
            }
            for dx in -w..=w {
                let xx = x0 + dx;
                if xx < 0 || xx >= dims.nx as isize || (dx == 0 && dy == 0 && dz == 0) {
                    continue;
                }
                out.push(sv.id_at(dims.index(xx as usize, yy as usize, zz as usize)));
            }
        }
    }
}

/// One epoch's worth of training pairs.
///
/// Voxels are visited in a seeded random permutation. Each visit survives
/// frequency subsampling keyed to the center symbol; afterwards a forced
/// pass tops up symbols that fell short of `min_samples_per_symbol`
/// appearances (symbols with a single voxel are revisited as needed).
pub struct VoxelStream<'a> {
    sv: &'a SymbolVolume,
    visits: Vec<u32>,
    pos: usize,
    window: usize,
    scratch: Vec<u32>,
}

impl<'a> VoxelStream<'a> {
    pub fn new(sv: &'a SymbolVolume, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Self {
        let t = sv.len();
        let freq = sv.frequencies();
        let total = t as f64;

        let mut visits: Vec<u32> = (0..t as u32).collect();
        visits.shuffle(rng);

        // Subsampling pass: keep probability min(1, sqrt(rho * T / freq(c))).
        let rho = cfg.subsample_threshold;
        let keep: Vec<f64> = freq
            .iter()
            .map(|&f| {
                if f == 0 {
                    0.0
                } else {
                    (rho * total / f as f64).sqrt().min(1.0)
                }
            })
            .collect();
        let mut emitted = vec![0u64; freq.len()];
        visits.retain(|&idx| {
            let sym = sv.id_at(idx as usize) as usize;
            let p = keep[sym];
            let kept = p >= 1.0 || rng.random::<f64>() < p;
            if kept {
                emitted[sym] += 1;
            }
            kept
        });

        // Forced-inclusion pass for under-sampled symbols.
        let floor = cfg.min_samples_per_symbol;
        let deficient: Vec<u32> = (0..freq.len() as u32)
            .filter(|&s| freq[s as usize] > 0 && emitted[s as usize] < floor)
            .collect();
        if !deficient.is_empty() {
            let mut owned: Vec<Vec<u32>> = vec![Vec::new(); freq.len()];
            let mut wanted = vec![false; freq.len()];
            for &s in &deficient {
                wanted[s as usize] = true;
            }
            for idx in 0..t {
                let sym = sv.id_at(idx) as usize;
                if wanted[sym] {
                    owned[sym].push(idx as u32);
                }
            }
            for &s in &deficient {
                let pool = &owned[s as usize];
                let mut need = floor - emitted[s as usize];
                while need > 0 {
                    let pick = pool[rng.random_range(0..pool.len())];
                    visits.push(pick);
                    need -= 1;
                }
            }
        }

        VoxelStream {
            sv,
            visits,
            pos: 0,
            window: cfg.context_window,
            scratch: Vec::new(),
        }
    }

    /// Number of pairs this epoch will emit.
    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    /// Linear voxel indices in visit order (used to shard work across
    /// throughput-mode workers).
    pub fn visits(&self) -> &[u32] {
        &self.visits
    }

    /// Produce the pair for an arbitrary visit slot.
    pub fn pair_at(&self, slot: usize, scratch: &mut Vec<u32>) -> TrainingPair {
        let idx = self.visits[slot] as usize;
        collect_context(self.sv, idx, self.window, scratch);
        TrainingPair {
            center: self.sv.id_at(idx),
            context: scratch.clone(),
        }
    }
}

impl<'a> Iterator for VoxelStream<'a> {
    type Item = TrainingPair;

    fn next(&mut self) -> Option<TrainingPair> {
        if self.pos >= self.visits.len() {
            return None;
        }
        let idx = self.visits[self.pos] as usize;
        self.pos += 1;
        collect_context(self.sv, idx, self.window, &mut self.scratch);
        Some(TrainingPair {
            center: self.sv.id_at(idx),
            context: self.scratch.clone(),
        })
    }
}
