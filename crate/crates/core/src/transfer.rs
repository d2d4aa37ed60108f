//! Volume-to-volume association via transfer prediction.
//!
//! A model trained on volume `j` predicts every voxel of volume `i` from its
//! context window; the exact-match fraction of predicted symbols, averaged
//! over both directions, quantifies how similar the two volumes' context
//! distributions are.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Error;
use crate::fmt::sig_digits;
use crate::model::{argmax_lowest, sigmoid, EmbeddingModel, PredictScoring};
use crate::render::render_heatmap;
use crate::sampler::collect_context;
use crate::symbol::SymbolVolume;
use crate::tsne::{tsne_distances, TsneParams, TsneResult};
use crate::volume::write_atomic;
use crate::Result;

/// Options shared by the transfer operations.
#[derive(Debug, Clone, Copy)]
pub struct TransferOptions {
    /// Context window radius; must match the radius used in training.
    pub window: usize,
    pub scoring: PredictScoring,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            window: 1,
            scoring: PredictScoring::default(),
        }
    }
}

/// Precomputed `sigmoid(score)` of every (context symbol, candidate) pair.
/// Entry `[o * n + w]` is the probability contribution of context symbol `o`
/// to candidate `w`.
struct ScoreTable {
    n: usize,
    sig: Vec<f64>,
}

impl ScoreTable {
    fn build(model: &EmbeddingModel, scoring: PredictScoring) -> Self {
        let n = model.symbol_count();
        let dim = model.dim();
        let (lhs, rhs) = match scoring {
            PredictScoring::ContextCentersVsCandidates => (model.centers(), model.contexts()),
            PredictScoring::ContextContextsVsCandidates => (model.contexts(), model.centers()),
        };
        let mut sig = vec![0.0; n * n];
        sig.par_chunks_mut(n).enumerate().for_each(|(o, row)| {
            let mut buf = vec![0.0; dim];
            lhs.copy_row(o, &mut buf);
            for (w, out) in row.iter_mut().enumerate() {
                *out = sigmoid(rhs.dot_row(w, &buf));
            }
        });
        ScoreTable { n, sig }
    }

    #[inline]
    fn row(&self, o: u32) -> &[f64] {
        let o = o as usize;
        &self.sig[o * self.n..(o + 1) * self.n]
    }
}

/// Predict every voxel of `volume` under `model`: for each voxel, the
/// candidate with the highest mean sigmoid score over the voxel's context
/// symbols (ties to the lowest id). Boundary voxels use truncated contexts.
pub fn transfer_predict(
    model: &EmbeddingModel,
    volume: &SymbolVolume,
    options: &TransferOptions,
) -> Result<SymbolVolume> {
    if !model.table().same_combinations(volume.table()) {
        return Err(Error::Data(
            "model and volume disagree on the symbol table".into(),
        ));
    }
    if volume.len() < 2 {
        return Err(Error::Parameter(
            "transfer prediction needs at least two voxels for a non-empty context".into(),
        ));
    }
    let table = ScoreTable::build(model, options.scoring);
    let dims = volume.dims();
    let n = table.n;
    let slab = dims.nx * dims.ny;
    let mut ids = vec![0u32; volume.len()];
    ids.par_chunks_mut(slab).enumerate().for_each(|(z, out)| {
        let mut ctx: Vec<u32> = Vec::new();
        let mut probs = vec![0.0f64; n];
        let base = z * slab;
        for (off, slot) in out.iter_mut().enumerate() {
            collect_context(volume, base + off, options.window, &mut ctx);
            probs.fill(0.0);
            for &o in &ctx {
                let row = table.row(o);
                for (p, &s) in probs.iter_mut().zip(row) {
                    *p += s;
                }
            }
            let inv = 1.0 / ctx.len() as f64;
            for p in &mut probs {
                *p *= inv;
            }
            *slot = argmax_lowest(&probs) as u32;
        }
    });
    SymbolVolume::from_ids(dims, ids, Arc::clone(volume.table()))
}

/// Exact-match fraction of two symbol volumes: `1 - (#differing voxels) / T`.
pub fn prediction_similarity(a: &SymbolVolume, b: &SymbolVolume) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Parameter(format!(
            "volume dims differ: {} vs {}",
            a.dims(),
            b.dims()
        )));
    }
    let differing = a
        .ids()
        .iter()
        .zip(b.ids())
        .filter(|(x, y)| x != y)
        .count();
    Ok(1.0 - differing as f64 / a.len() as f64)
}

/// One member of a time-varying or ensemble collection.
pub struct CollectionMember {
    pub label: String,
    pub volume: SymbolVolume,
    pub model: EmbeddingModel,
}

/// An ordered collection of symbol volumes sharing one symbol table, each
/// with its own trained model.
pub struct VolumeCollection {
    members: Vec<CollectionMember>,
}

impl VolumeCollection {
    pub fn new(members: Vec<CollectionMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Parameter("collection is empty".into()));
        }
        let table = members[0].volume.table();
        let dims = members[0].volume.dims();
        for m in &members {
            if !m.volume.table().same_combinations(table)
                || !m.model.table().same_combinations(table)
            {
                return Err(Error::Data(format!(
                    "member {} does not share the collection symbol table",
                    m.label
                )));
            }
            if m.volume.dims() != dims {
                return Err(Error::Data(format!(
                    "member {} dims {} differ from {}",
                    m.label,
                    m.volume.dims(),
                    dims
                )));
            }
        }
        Ok(VolumeCollection { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[CollectionMember] {
        &self.members
    }

    pub fn labels(&self) -> Vec<String> {
        self.members.iter().map(|m| m.label.clone()).collect()
    }
}

/// Symmetric association between members `i` and `j`: the two transfer
/// predictions' exact-match fractions averaged. `association(i, i)` is the
/// self-association (one prediction).
pub fn association(
    collection: &VolumeCollection,
    i: usize,
    j: usize,
    options: &TransferOptions,
) -> Result<f64> {
    let mi = &collection.members[i];
    let mj = &collection.members[j];
    if i == j {
        let predicted = transfer_predict(&mi.model, &mi.volume, options)?;
        return prediction_similarity(&mi.volume, &predicted);
    }
    let i_under_j = transfer_predict(&mj.model, &mi.volume, options)?;
    let j_under_i = transfer_predict(&mi.model, &mj.volume, options)?;
    Ok((prediction_similarity(&mi.volume, &i_under_j)?
        + prediction_similarity(&mj.volume, &j_under_i)?)
        / 2.0)
}

/// Symmetric matrix of member associations in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct AssociationMatrix {
    size: usize,
    values: Vec<f64>,
    labels: Vec<String>,
}

impl AssociationMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(
            &self
                .labels
                .iter()
                .map(|l| crate::fmt::csv_field(l))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for i in 0..self.size {
            let mut first = true;
            for j in 0..self.size {
                if !first {
                    out.push(',');
                }
                out.push_str(&sig_digits(self.get(i, j), 6));
                first = false;
            }
            out.push('\n');
        }
        write_atomic(path, out.as_bytes())
    }

    /// Heatmap PNG over `value_range` (associations are typically read over
    /// a narrowed range such as `[0.7, 1]`).
    pub fn export_heatmap(&self, path: &Path, value_range: (f64, f64), scale: u32) -> Result<()> {
        render_heatmap(&self.values, self.size, path, value_range, scale)
    }
}

/// Compute all pairwise associations (upper triangle, mirrored), parallel
/// over pairs.
pub fn association_matrix(
    collection: &VolumeCollection,
    options: &TransferOptions,
) -> Result<AssociationMatrix> {
    let m = collection.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i..m).map(move |j| (i, j)))
        .collect();
    let computed: Vec<Result<((usize, usize), f64)>> = pairs
        .par_iter()
        .map(|&(i, j)| association(collection, i, j, options).map(|v| ((i, j), v)))
        .collect();
    let mut values = vec![0.0; m * m];
    for entry in computed {
        let ((i, j), v) = entry?;
        values[i * m + j] = v;
        values[j * m + i] = v;
    }
    Ok(AssociationMatrix {
        size: m,
        values,
        labels: collection.labels(),
    })
}

/// Project collection members into 2D with exact t-SNE on the distance
/// matrix `1 - association`.
pub fn ensemble_projection(assoc: &AssociationMatrix, params: &TsneParams) -> Result<TsneResult> {
    if assoc.size() < 2 {
        return Err(Error::Parameter(
            "ensemble projection needs at least two members".into(),
        ));
    }
    let n = assoc.size();
    let mut distances = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                distances[i * n + j] = (1.0 - assoc.get(i, j)).max(0.0);
            }
        }
    }
    tsne_distances(&distances, n, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TrainConfig;
    use crate::model::{init_model, train};
    use crate::symbol::symbolize_collection;
    use crate::volume::{Dims, QuantizedVolume};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sv_from_levels(dims: (usize, usize, usize), levels: Vec<u16>, r: u16) -> SymbolVolume {
        let q = QuantizedVolume::from_levels(
            Dims::new(dims.0, dims.1, dims.2).unwrap(),
            levels,
            r,
        )
        .unwrap();
        crate::symbol::symbolize(&[&q]).unwrap().1
    }

    #[test]
    fn single_symbol_collection_predicts_itself() {
        let sv = sv_from_levels((3, 3, 3), vec![0; 27], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = init_model(Arc::clone(sv.table()), 4, &mut rng).unwrap();
        let predicted = transfer_predict(&model, &sv, &TransferOptions::default()).unwrap();
        assert_eq!(predicted.ids(), sv.ids());
        assert_eq!(prediction_similarity(&sv, &predicted).unwrap(), 1.0);
    }

    #[test]
    fn fresh_model_predicts_symbol_zero_everywhere() {
        let levels: Vec<u16> = (0..27).map(|i| (i % 3) as u16).collect();
        let sv = sv_from_levels((3, 3, 3), levels, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = init_model(Arc::clone(sv.table()), 4, &mut rng).unwrap();
        // Contexts are all zero, every score is 0.5, ties resolve to id 0.
        let predicted = transfer_predict(&model, &sv, &TransferOptions::default()).unwrap();
        assert!(predicted.ids().iter().all(|&id| id == 0));
    }

    #[test]
    fn table_path_matches_direct_prediction() {
        let levels: Vec<u16> = (0..64).map(|i| (i % 5) as u16).collect();
        let sv = sv_from_levels((4, 4, 4), levels, 5);
        let (model, _) = train(&sv, &TrainConfig {
            dimension: 6,
            ..TrainConfig::default()
        })
        .unwrap();
        let opts = TransferOptions::default();
        let predicted = transfer_predict(&model, &sv, &opts).unwrap();
        // Spot-check voxels against the public prediction op.
        for idx in [0usize, 13, 31, 63] {
            let (x, y, z) = sv.dims().coords(idx);
            let ctx = crate::sampler::context_of(&sv, (x, y, z), opts.window).unwrap();
            let p = crate::model::predict_distribution(&model, &ctx).unwrap();
            assert_eq!(predicted.id_at(idx), argmax_lowest(&p) as u32, "voxel {idx}");
        }
    }

    #[test]
    fn one_voxel_volume_rejected() {
        let sv = sv_from_levels((1, 1, 1), vec![0], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = init_model(Arc::clone(sv.table()), 2, &mut rng).unwrap();
        assert!(transfer_predict(&model, &sv, &TransferOptions::default()).is_err());
    }

    #[test]
    fn prediction_similarity_counts_matches() {
        let a = sv_from_levels((2, 2, 1), vec![0, 1, 0, 1], 2);
        let table = Arc::clone(a.table());
        let b = SymbolVolume::from_ids(a.dims(), vec![1, 0, 1, 0], Arc::clone(&table)).unwrap();
        let half = SymbolVolume::from_ids(a.dims(), vec![0, 1, 1, 0], table).unwrap();
        assert_eq!(prediction_similarity(&a, &a).unwrap(), 1.0);
        assert_eq!(prediction_similarity(&a, &b).unwrap(), 0.0);
        assert_eq!(prediction_similarity(&a, &half).unwrap(), 0.5);
    }

    #[test]
    fn dim_mismatch_rejected() {
        let a = sv_from_levels((2, 2, 1), vec![0, 1, 0, 1], 2);
        let b = sv_from_levels((4, 1, 1), vec![0, 1, 0, 1], 2);
        assert!(prediction_similarity(&a, &b).is_err());
    }

    fn tiny_collection(seed: u64) -> VolumeCollection {
        // Three members over one shared table: two similar ramps and a
        // checkerboard-like field.
        let dims = Dims::new(6, 6, 6).unwrap();
        let mk = |f: &dyn Fn(usize, usize, usize) -> u16| -> QuantizedVolume {
            let levels: Vec<u16> = (0..dims.len())
                .map(|i| {
                    let (x, y, z) = dims.coords(i);
                    f(x, y, z)
                })
                .collect();
            QuantizedVolume::from_levels(dims, levels, 4).unwrap()
        };
        let a = mk(&|_, _, z| (z * 4 / 6) as u16);
        let b = mk(&|_, _, z| (z * 4 / 6) as u16);
        let c = mk(&|x, y, z| ((x + y + z) % 4) as u16);
        let (_, volumes) = symbolize_collection(&[&[&a][..], &[&b][..], &[&c][..]]).unwrap();
        let mut members = Vec::new();
        for (idx, volume) in volumes.into_iter().enumerate() {
            let cfg = TrainConfig {
                dimension: 8,
                seed: seed.wrapping_add(idx as u64),
                ..TrainConfig::default()
            };
            let (model, _) = train(&volume, &cfg).unwrap();
            members.push(CollectionMember {
                label: format!("m{idx}"),
                volume,
                model,
            });
        }
        VolumeCollection::new(members).unwrap()
    }

    #[test]
    fn matrix_is_symmetric_in_range_and_label_equivariant() {
        let collection = tiny_collection(7);
        let opts = TransferOptions::default();
        let matrix = association_matrix(&collection, &opts).unwrap();
        let m = matrix.size();
        for i in 0..m {
            for j in 0..m {
                let v = matrix.get(i, j);
                assert!((0.0..=1.0).contains(&v));
                assert_eq!(v, matrix.get(j, i));
            }
        }

        // Permuting members permutes rows/columns identically.
        let mut members: Vec<CollectionMember> = collection.members.into_iter().collect();
        members.rotate_left(1);
        let rotated = VolumeCollection::new(members).unwrap();
        let rotated_matrix = association_matrix(&rotated, &opts).unwrap();
        let perm = [1usize, 2, 0]; // rotated index -> original index
        for i in 0..m {
            for j in 0..m {
                assert_eq!(rotated_matrix.get(i, j), matrix.get(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn identical_members_have_equal_entries() {
        // A collection of identical volumes and identically seeded models:
        // every entry equals the common self-association.
        let dims = Dims::new(5, 5, 5).unwrap();
        let levels: Vec<u16> = (0..dims.len()).map(|i| (i % 3) as u16).collect();
        let q = QuantizedVolume::from_levels(dims, levels, 3).unwrap();
        let (_, volumes) =
            symbolize_collection(&[&[&q][..], &[&q][..], &[&q][..]]).unwrap();
        let cfg = TrainConfig {
            dimension: 6,
            ..TrainConfig::default()
        };
        let members: Vec<CollectionMember> = volumes
            .into_iter()
            .enumerate()
            .map(|(idx, volume)| {
                let (model, _) = train(&volume, &cfg).unwrap();
                CollectionMember {
                    label: format!("m{idx}"),
                    volume,
                    model,
                }
            })
            .collect();
        let collection = VolumeCollection::new(members).unwrap();
        let matrix = association_matrix(&collection, &TransferOptions::default()).unwrap();
        let self_assoc = matrix.get(0, 0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(matrix.get(i, j), self_assoc);
            }
        }
    }

    #[test]
    fn transfer_is_deterministic_across_calls() {
        let collection = tiny_collection(11);
        let opts = TransferOptions::default();
        let a = transfer_predict(&collection.members()[0].model, &collection.members()[1].volume, &opts)
            .unwrap();
        let b = transfer_predict(&collection.members()[0].model, &collection.members()[1].volume, &opts)
            .unwrap();
        assert_eq!(a.ids(), b.ids());
    }

    #[test]
    fn single_member_matrix_is_self_association() {
        let collection = tiny_collection(13);
        let first = VolumeCollection::new(vec![CollectionMember {
            label: "only".into(),
            volume: collection.members()[0].volume.clone(),
            model: EmbeddingModel::from_parts(
                Arc::clone(collection.members()[0].model.table()),
                collection.members()[0].model.dim(),
                (0..collection.members()[0].model.symbol_count())
                    .map(|r| collection.members()[0].model.centers().row_vec(r))
                    .collect(),
                (0..collection.members()[0].model.symbol_count())
                    .map(|r| collection.members()[0].model.contexts().row_vec(r))
                    .collect(),
                1,
            )
            .unwrap(),
        }])
        .unwrap();
        let opts = TransferOptions::default();
        let matrix = association_matrix(&first, &opts).unwrap();
        assert_eq!(matrix.size(), 1);
        let direct = association(&first, 0, 0, &opts).unwrap();
        assert_eq!(matrix.get(0, 0), direct);
    }

    #[test]
    fn projection_reflects_association_ordering() {
        // ass(0,1) high, both low vs member 2: 0 and 1 land closer together.
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let values = vec![
            1.0, 0.99, 0.5, //
            0.99, 1.0, 0.5, //
            0.5, 0.5, 1.0,
        ];
        let assoc = AssociationMatrix {
            size: 3,
            values,
            labels,
        };
        let mut params = TsneParams::default();
        params.iterations = 500;
        let r = ensemble_projection(&assoc, &params).unwrap();
        let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let d01 = dist(r.positions[0], r.positions[1]);
        let d02 = dist(r.positions[0], r.positions[2]);
        let d12 = dist(r.positions[1], r.positions[2]);
        assert!(d01 < d02 && d01 < d12);
    }
}
