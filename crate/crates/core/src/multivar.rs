//! Automatic feature classification for multivariate data: cluster symbol
//! embeddings, materialize per-feature voxel masks, and lay the features out
//! in 2D with non-overlapping discs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dbscan::{dbscan, Metric, NOISE};
use crate::error::Error;
use crate::model::EmbeddingModel;
use crate::render::{palette_color, render_scatter, ScatterPoint, FILTERED_GRAY};
use crate::symbol::SymbolVolume;
use crate::tsne::{tsne_points, TsneParams};
use crate::volume::{write_atomic, write_raw_u16};
use crate::Result;

/// Reserved label-volume value for noise voxels.
pub const NOISE_LABEL: u16 = u16::MAX;

/// Which per-symbol points feed the clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterInput {
    /// The learned center vectors.
    #[default]
    Embeddings,
    /// The raw level combinations themselves (ablation baseline).
    RawCombinations,
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub eps: f64,
    pub min_points: usize,
    /// Features below this voxel count are flagged as filtered (kept in the
    /// data, grayed in displays). `None` uses 0.1% of the voxel count.
    pub min_voxels: Option<u64>,
    pub metric: Metric,
    pub input: ClusterInput,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            eps: 0.85,
            min_points: 4,
            min_voxels: None,
            metric: Metric::Cosine,
            input: ClusterInput::Embeddings,
        }
    }
}

/// One cluster of symbols materialized as a voxel feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Feature {
    pub id: u32,
    /// Member symbol ids.
    pub symbols: Vec<u32>,
    pub voxel_count: u64,
    /// Voxel-count-weighted mean of the member center vectors.
    #[serde(skip)]
    pub mean_vector: Vec<f64>,
    pub position: [f64; 2],
    pub radius: f64,
    pub filtered: bool,
}

/// Clustering result over one symbol volume.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    /// Per-symbol cluster label, -1 for noise.
    pub labels: Vec<i32>,
    pub features: Vec<Feature>,
    pub noise_voxels: u64,
    pub total_voxels: u64,
    /// False when overlap resolution hit its iteration cap.
    pub layout_converged: bool,
}

impl FeatureSet {
    pub fn feature_count(&self) -> usize {
        self.features.len()
    }
}

/// Cluster the symbols of a trained model and group their voxels into
/// features.
pub fn classify_features(
    model: &EmbeddingModel,
    sv: &SymbolVolume,
    options: &ClassifyOptions,
) -> Result<FeatureSet> {
    if model.trained_epochs() == 0 {
        return Err(Error::Parameter("model has not been trained".into()));
    }
    if !model.table().same_combinations(sv.table()) {
        return Err(Error::Data(
            "model and volume disagree on the symbol table".into(),
        ));
    }
    if options.eps <= 0.0 || options.min_points == 0 {
        return Err(Error::Parameter("eps must be > 0 and min_points >= 1".into()));
    }
    let n = model.symbol_count();
    let points: Vec<Vec<f64>> = match options.input {
        ClusterInput::Embeddings => (0..n).map(|r| model.centers().row_vec(r)).collect(),
        ClusterInput::RawCombinations => (0..n as u32)
            .map(|id| {
                model
                    .table()
                    .combination(id)
                    .iter()
                    .map(|&l| f64::from(l))
                    .collect()
            })
            .collect(),
    };
    let labels = dbscan(&points, options.eps, options.min_points, options.metric);

    let total_voxels = sv.len() as u64;
    let min_voxels = options
        .min_voxels
        .unwrap_or_else(|| (total_voxels as f64 * 0.001).ceil() as u64);

    let cluster_total = labels.iter().copied().max().unwrap_or(NOISE) + 1;
    let dim = model.dim();
    let mut features = Vec::with_capacity(cluster_total.max(0) as usize);
    for cluster in 0..cluster_total {
        let symbols: Vec<u32> = (0..n as u32)
            .filter(|&s| labels[s as usize] == cluster)
            .collect();
        let voxel_count: u64 = symbols.iter().map(|&s| sv.frequencies()[s as usize]).sum();
        let mut mean = vec![0.0; dim];
        let mut weight_total = 0.0;
        for &s in &symbols {
            let w = sv.frequencies()[s as usize] as f64;
            let row = model.centers().row_vec(s as usize);
            for (m, x) in mean.iter_mut().zip(&row) {
                *m += w * x;
            }
            weight_total += w;
        }
        if weight_total > 0.0 {
            for m in &mut mean {
                *m /= weight_total;
            }
        }
        features.push(Feature {
            id: cluster as u32,
            symbols,
            voxel_count,
            mean_vector: mean,
            position: [0.0, 0.0],
            radius: 0.0,
            filtered: voxel_count < min_voxels,
        });
    }

    let noise_voxels = (0..n as u32)
        .filter(|&s| labels[s as usize] == NOISE)
        .map(|s| sv.frequencies()[s as usize])
        .sum();

    Ok(FeatureSet {
        labels,
        features,
        noise_voxels,
        total_voxels,
        layout_converged: true,
    })
}

const OVERLAP_ITERATIONS: usize = 500;

/// Lay features out in 2D: exact t-SNE on the weighted mean vectors, disc
/// radius proportional to the square root of the voxel count, and an
/// iterative pass that pushes overlapping discs apart along their center
/// line until no pair overlaps (or the iteration cap is reached, recorded in
/// `layout_converged`).
pub fn project_features(set: &mut FeatureSet, params: &TsneParams) -> Result<()> {
    if set.features.is_empty() {
        return Err(Error::Parameter("no features to project".into()));
    }
    let means: Vec<Vec<f64>> = set.features.iter().map(|f| f.mean_vector.clone()).collect();
    let layout = tsne_points(&means, params)?;
    for (f, pos) in set.features.iter_mut().zip(&layout.positions) {
        f.position = *pos;
    }

    // Radii: sqrt(count), scaled so the largest disc is a modest fraction of
    // the layout span.
    let max_r_raw = set
        .features
        .iter()
        .map(|f| (f.voxel_count as f64).sqrt())
        .fold(0.0, f64::max)
        .max(1.0);
    let span = layout_span(&set.features).max(1e-6);
    let scale = 0.08 * span / max_r_raw;
    for f in &mut set.features {
        f.radius = ((f.voxel_count as f64).sqrt() * scale).max(1e-3 * span);
    }

    set.layout_converged = resolve_overlaps(&mut set.features);
    Ok(())
}

fn layout_span(features: &[Feature]) -> f64 {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for f in features {
        for c in 0..2 {
            min[c] = min[c].min(f.position[c]);
            max[c] = max[c].max(f.position[c]);
        }
    }
    ((max[0] - min[0]).max(max[1] - min[1])).max(0.0)
}

fn resolve_overlaps(features: &mut [Feature]) -> bool {
    for iteration in 0..OVERLAP_ITERATIONS {
        let mut any = false;
        for i in 0..features.len() {
            for j in (i + 1)..features.len() {
                let dx = features[j].position[0] - features[i].position[0];
                let dy = features[j].position[1] - features[i].position[1];
                let dist = (dx * dx + dy * dy).sqrt();
                let needed = features[i].radius + features[j].radius;
                if dist >= needed {
                    continue;
                }
                any = true;
                let (ux, uy) = if dist > 1e-12 {
                    (dx / dist, dy / dist)
                } else {
                    // Coincident centers: deterministic direction per pair.
                    let angle = (i * features.len() + j) as f64;
                    (angle.cos(), angle.sin())
                };
                let push = 0.5 * (needed - dist) + 1e-9 + 1e-4 * needed;
                features[i].position[0] -= ux * push;
                features[i].position[1] -= uy * push;
                features[j].position[0] += ux * push;
                features[j].position[1] += uy * push;
            }
        }
        if !any {
            let _ = iteration;
            return true;
        }
    }
    false
}

/// Per-voxel feature ids: the voxel's symbol's cluster, or `NOISE_LABEL`.
pub fn label_voxels(set: &FeatureSet, sv: &SymbolVolume) -> Result<Vec<u16>> {
    if set.features.len() >= usize::from(NOISE_LABEL) {
        return Err(Error::Data(format!(
            "{} features exceed the u16 label space",
            set.features.len()
        )));
    }
    Ok(sv
        .ids()
        .iter()
        .map(|&s| match set.labels[s as usize] {
            NOISE => NOISE_LABEL,
            c => c as u16,
        })
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct LegendFeature {
    id: u32,
    symbols: Vec<String>,
    voxel_count: u64,
    position: [f64; 2],
    radius: f64,
    color: String,
    filtered: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Legend {
    dims: [usize; 3],
    noise_label: u16,
    noise_voxels: u64,
    total_voxels: u64,
    features: Vec<LegendFeature>,
}

fn color_hex(rgb: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

/// Write the voxel-wise feature-id volume (u16 raw, little-endian, same
/// dims) and a JSON legend describing each feature.
pub fn export_label_volume(
    set: &FeatureSet,
    sv: &SymbolVolume,
    volume_path: &Path,
    legend_path: &Path,
) -> Result<()> {
    let labels = label_voxels(set, sv)?;
    write_raw_u16(volume_path, &labels)?;
    let dims = sv.dims();
    let legend = Legend {
        dims: [dims.nx, dims.ny, dims.nz],
        noise_label: NOISE_LABEL,
        noise_voxels: set.noise_voxels,
        total_voxels: set.total_voxels,
        features: set
            .features
            .iter()
            .map(|f| LegendFeature {
                id: f.id,
                symbols: f.symbols.iter().map(|&s| sv.table().label(s)).collect(),
                voxel_count: f.voxel_count,
                position: f.position,
                radius: f.radius,
                color: color_hex(if f.filtered {
                    FILTERED_GRAY
                } else {
                    palette_color(f.id as usize)
                }),
                filtered: f.filtered,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&legend)
        .map_err(|e| Error::Internal(format!("legend serialization: {e}")))?;
    write_atomic(legend_path, json.as_bytes())
}

/// Scatter PNG: one disc per feature at its layout position, radius from the
/// layout, filtered features in gray.
pub fn export_feature_scatter(set: &FeatureSet, path: &Path, canvas: u32) -> Result<()> {
    let points: Vec<ScatterPoint> = set
        .features
        .iter()
        .map(|f| ScatterPoint {
            x: f.position[0],
            y: f.position[1],
            radius: f.radius,
            color: if f.filtered {
                FILTERED_GRAY
            } else {
                palette_color(f.id as usize)
            },
            label: Some(format!("F{}", f.id)),
        })
        .collect();
    render_scatter(&points, path, canvas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{symbolize, SymbolTable};
    use crate::volume::{Dims, QuantizedVolume};
    use std::sync::Arc;

    fn model_with_centers(rows: Vec<Vec<f64>>, radix: u16) -> EmbeddingModel {
        let n = rows.len();
        let dim = rows[0].len();
        let table = Arc::new(
            SymbolTable::from_combinations(1, vec![radix], (0..n as u16).collect::<Vec<u16>>())
                .unwrap(),
        );
        let contexts = vec![vec![0.0; dim]; n];
        EmbeddingModel::from_parts(table, dim, rows, contexts, 1).unwrap()
    }

    fn sv_from_levels(dims: (usize, usize, usize), levels: Vec<u16>, r: u16) -> SymbolVolume {
        let q = QuantizedVolume::from_levels(
            Dims::new(dims.0, dims.1, dims.2).unwrap(),
            levels,
            r,
        )
        .unwrap();
        symbolize(&[&q]).unwrap().1
    }

    #[test]
    fn one_ball_one_feature() {
        // Four nearly identical directions: a single cosine cluster.
        let rows = vec![
            vec![1.0, 0.0],
            vec![0.99, 0.01],
            vec![0.98, 0.02],
            vec![0.97, 0.03],
        ];
        let model = model_with_centers(rows, 4);
        let sv = sv_from_levels((4, 1, 1), vec![0, 1, 2, 3], 4);
        let set = classify_features(&model, &sv, &ClassifyOptions::default()).unwrap();
        assert_eq!(set.feature_count(), 1);
        assert_eq!(set.features[0].voxel_count, 4);
        assert_eq!(set.noise_voxels, 0);
    }

    #[test]
    fn untrained_model_rejected() {
        let table = Arc::new(SymbolTable::from_combinations(1, vec![2], vec![0, 1]).unwrap());
        let model =
            EmbeddingModel::from_parts(table, 2, vec![vec![1.0, 0.0]; 2], vec![vec![0.0; 2]; 2], 0)
                .unwrap();
        let sv = sv_from_levels((2, 1, 1), vec![0, 1], 2);
        assert!(classify_features(&model, &sv, &ClassifyOptions::default()).is_err());
    }

    #[test]
    fn weighted_mean_uses_voxel_counts() {
        // Symbol 0 appears 3 times, symbol 1 once; mean = (3 a + b) / 4.
        let rows = vec![vec![1.0, 0.0], vec![0.9, 0.1]];
        let model = model_with_centers(rows, 2);
        let sv = sv_from_levels((4, 1, 1), vec![0, 0, 0, 1], 2);
        let mut opts = ClassifyOptions::default();
        opts.min_points = 1;
        let set = classify_features(&model, &sv, &opts).unwrap();
        assert_eq!(set.feature_count(), 1);
        let m = &set.features[0].mean_vector;
        assert!((m[0] - (3.0 * 1.0 + 0.9) / 4.0).abs() < 1e-12);
        assert!((m[1] - 0.1 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn voxel_counts_partition_total() {
        let rows = vec![
            vec![1.0, 0.0],
            vec![0.99, 0.0],
            vec![-1.0, 0.0],
            vec![-0.99, 0.0],
            vec![0.0, 1.0], // lone direction becomes noise at min_points 2
        ];
        let model = model_with_centers(rows, 8);
        let sv = sv_from_levels((10, 1, 1), vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4], 8);
        let mut opts = ClassifyOptions::default();
        opts.eps = 0.1;
        opts.min_points = 2;
        let set = classify_features(&model, &sv, &opts).unwrap();
        let feature_total: u64 = set.features.iter().map(|f| f.voxel_count).sum();
        assert_eq!(feature_total + set.noise_voxels, set.total_voxels);
        assert_eq!(set.noise_voxels, 2);
    }

    #[test]
    fn projection_single_feature_at_origin() {
        let rows = vec![vec![1.0, 0.0], vec![0.99, 0.01]];
        let model = model_with_centers(rows, 2);
        let sv = sv_from_levels((2, 1, 1), vec![0, 1], 2);
        let mut opts = ClassifyOptions::default();
        opts.min_points = 1;
        let mut set = classify_features(&model, &sv, &opts).unwrap();
        assert_eq!(set.feature_count(), 1);
        project_features(&mut set, &TsneParams::default()).unwrap();
        assert_eq!(set.features[0].position, [0.0, 0.0]);
        assert!(set.layout_converged);
    }

    #[test]
    fn identical_means_get_separated() {
        // Two clusters with identical mean vectors: discs must end apart.
        let rows = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let model = model_with_centers(rows, 2);
        let sv = sv_from_levels((8, 1, 1), vec![0, 0, 0, 0, 1, 1, 1, 1], 2);
        let mut opts = ClassifyOptions::default();
        opts.min_points = 1;
        opts.eps = 0.1;
        let mut set = classify_features(&model, &sv, &opts).unwrap();
        assert_eq!(set.feature_count(), 2);
        // Force identical means to exercise the coincident-center path.
        set.features[1].mean_vector = set.features[0].mean_vector.clone();
        let mut params = TsneParams::default();
        params.iterations = 150;
        project_features(&mut set, &params).unwrap();
        let a = set.features[0].position;
        let b = set.features[1].position;
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        assert!(
            d >= set.features[0].radius + set.features[1].radius - 1e-9,
            "discs still overlap: d = {d}"
        );
        assert!(set.layout_converged);
    }

    #[test]
    fn label_volume_round_trip() {
        // Checkerboard of two 2-symbol features plus one isolated noise voxel.
        let dims = Dims::new(4, 4, 1).unwrap();
        let mut levels: Vec<u16> = (0..dims.len())
            .map(|i| {
                let (x, y, z) = dims.coords(i);
                (2 * ((x + y + z) % 2) + (x % 2)) as u16
            })
            .collect();
        levels[5] = 4; // single voxel of an isolated symbol
        let sv = sv_from_levels((4, 4, 1), levels.clone(), 5);
        let direction = |l: u16| -> Vec<f64> {
            match l {
                0 => vec![1.0, 0.0],
                1 => vec![0.999, 0.01],
                2 => vec![-1.0, 0.0],
                3 => vec![-0.999, -0.01],
                _ => vec![0.0, 1.0],
            }
        };
        let n = sv.table().len();
        let rows: Vec<Vec<f64>> = (0..n as u32)
            .map(|id| direction(sv.table().combination(id)[0]))
            .collect();
        let model = EmbeddingModel::from_parts(
            Arc::clone(sv.table()),
            2,
            rows,
            vec![vec![0.0; 2]; n],
            1,
        )
        .unwrap();
        let mut opts = ClassifyOptions::default();
        opts.min_points = 2;
        opts.eps = 0.1;
        let set = classify_features(&model, &sv, &opts).unwrap();
        assert_eq!(set.feature_count(), 2);
        let noise_symbol = (0..n as u32)
            .find(|&id| sv.table().combination(id)[0] == 4)
            .unwrap();
        assert_eq!(set.labels[noise_symbol as usize], NOISE);

        let dir = tempfile::tempdir().unwrap();
        let vol_path = dir.path().join("labels.raw");
        let leg_path = dir.path().join("legend.json");
        export_label_volume(&set, &sv, &vol_path, &leg_path).unwrap();

        let bytes = std::fs::read(&vol_path).unwrap();
        assert_eq!(bytes.len(), dims.len() * 2);
        let read_labels: Vec<u16> = bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        // The exported labels reproduce the checkerboard parity.
        for idx in 0..dims.len() {
            let (x, y, z) = dims.coords(idx);
            if levels[idx] == 4 {
                assert_eq!(read_labels[idx], NOISE_LABEL);
            } else {
                let expected_parity = ((x + y + z) % 2) as u16;
                let companion = dims.index((x + 2) % 4, y, z);
                if levels[companion] != 4 {
                    let same = (x + y + z) % 2 == {
                        let (cx, cy, cz) = dims.coords(companion);
                        (cx + cy + cz) % 2
                    };
                    assert_eq!(same, read_labels[idx] == read_labels[companion]);
                }
                let _ = expected_parity;
            }
        }
        // Recount per-feature voxels from the file and compare.
        for f in &set.features {
            let count = read_labels.iter().filter(|&&l| l == f.id as u16).count() as u64;
            assert_eq!(count, f.voxel_count, "feature {}", f.id);
        }
        let noise_count = read_labels.iter().filter(|&&l| l == NOISE_LABEL).count() as u64;
        assert_eq!(noise_count, set.noise_voxels);
        assert_eq!(noise_count, 1);

        let legend: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&leg_path).unwrap()).unwrap();
        assert_eq!(legend["noise_label"], 65535);
        assert_eq!(
            legend["features"].as_array().unwrap().len(),
            set.features.len()
        );
    }
}
