//! End-to-end pipeline checks on synthetic volumes with known structure.

use std::sync::Arc;

use voxel2vec_core::abc::{gen_abc_flow, gen_abc_s1, AbcParams};
use voxel2vec_core::dbscan::Metric;
use voxel2vec_core::model::{train, EmbeddingModel};
use voxel2vec_core::multivar::{classify_features, ClassifyOptions, ClusterInput};
use voxel2vec_core::similarity::similarity_map;
use voxel2vec_core::symbol::{symbolize, SymbolVolume};
use voxel2vec_core::transfer::{prediction_similarity, transfer_predict, TransferOptions};
use voxel2vec_core::volume::{quantize, Dims, Volume};
use voxel2vec_core::TrainConfig;

/// Two spatially separated value ranges joined by a thin constant background
/// slab: blob A ramps over low values on one side, blob B over high values
/// on the other, so only same-blob symbols share contexts (plus the
/// background symbol touching both).
fn two_blob_volume(n: usize) -> Volume {
    let dims = Dims::new(n, n, n).unwrap();
    let data = (0..dims.len())
        .map(|i| {
            let (x, _, z) = dims.coords(i);
            let ramp = z as f64 / (n - 1) as f64;
            if x < (n * 45) / 100 {
                0.1 + 0.35 * ramp
            } else if x >= (n * 55) / 100 {
                0.55 + 0.40 * ramp
            } else {
                0.0
            }
        })
        .collect();
    Volume::new(dims, data).unwrap()
}

fn blob_of_symbol(sv: &SymbolVolume, id: u32) -> Option<u8> {
    let level = sv.table().combination(id)[0];
    if level == 0 {
        None // background
    } else if level <= 7 {
        Some(0)
    } else {
        Some(1)
    }
}

/// Mean within-blob similarity minus mean cross-blob similarity over the
/// trained map, background excluded.
fn blob_contrast(model: &EmbeddingModel, sv: &SymbolVolume) -> f64 {
    let map = similarity_map(model);
    let blobs: Vec<Option<u8>> = (0..sv.table().len() as u32)
        .map(|id| blob_of_symbol(sv, id))
        .collect();
    let mut within = (0.0, 0u64);
    let mut cross = (0.0, 0u64);
    for x in 0..blobs.len() {
        for y in (x + 1)..blobs.len() {
            match (blobs[x], blobs[y]) {
                (Some(a), Some(b)) if a == b => {
                    within.0 += map.get(x, y);
                    within.1 += 1;
                }
                (Some(_), Some(_)) => {
                    cross.0 += map.get(x, y);
                    cross.1 += 1;
                }
                _ => {}
            }
        }
    }
    within.0 / within.1 as f64 - cross.0 / cross.1 as f64
}

fn train_two_blob(seed: u64, full_strategies: bool) -> (EmbeddingModel, SymbolVolume) {
    let v = two_blob_volume(32);
    let q = quantize(&v, 16).unwrap();
    let (_, sv) = symbolize(&[&q]).unwrap();
    // The synthetic volume is small; keep every voxel so both arms of the
    // comparison see the full co-occurrence signal.
    let mut cfg = TrainConfig {
        quantization: 16,
        seed,
        subsample_threshold: 1.0,
        ..TrainConfig::default()
    };
    if !full_strategies {
        cfg.exclude_context = false;
        cfg.self_paced = false;
        cfg.penalty = 0.0;
    }
    let (model, log) = train(&sv, &cfg).unwrap();
    assert!(!log.degenerate);
    (model, sv)
}

#[test]
fn two_blob_separation_is_learned() {
    let (model, sv) = train_two_blob(1, true);
    let contrast = blob_contrast(&model, &sv);
    assert!(
        contrast > 0.03,
        "expected positive within/cross contrast, got {contrast}"
    );
}

#[test]
fn strategies_do_not_hurt_blob_contrast() {
    // Smaller-scale preview of the acceptance ablation: the full model's
    // contrast is at least the plain model's.
    for seed in [3u64, 4] {
        let (full, sv) = train_two_blob(seed, true);
        let (plain, _) = train_two_blob(seed, false);
        let c_full = blob_contrast(&full, &sv);
        let c_plain = blob_contrast(&plain, &sv);
        assert!(
            c_full >= c_plain,
            "seed {seed}: full {c_full} < plain {c_plain}"
        );
    }
}

#[test]
fn checkerboard_similarity_is_stable_across_seeds() {
    // Two-symbol checkerboard: sim(0,1) after one epoch stays within a
    // +-0.1 band across seeds.
    let dims = Dims::new(12, 12, 12).unwrap();
    let data: Vec<f64> = (0..dims.len())
        .map(|i| {
            let (x, y, z) = dims.coords(i);
            ((x + y + z) % 2) as f64
        })
        .collect();
    let v = Volume::new(dims, data).unwrap();
    let q = quantize(&v, 2).unwrap();
    let (_, sv) = symbolize(&[&q]).unwrap();
    let sims: Vec<f64> = (0..5u64)
        .map(|seed| {
            let cfg = TrainConfig {
                quantization: 2,
                seed,
                ..TrainConfig::default()
            };
            let (model, _) = train(&sv, &cfg).unwrap();
            voxel2vec_core::similarity::similarity(&model, 0, 1)
        })
        .collect();
    let lo = sims.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo <= 0.2, "sim(0,1) spread too wide: {sims:?}");
}

#[test]
fn multivariate_abc_feature_count_band() {
    // Bivariate (vx, s1) classification lands between 2 and 30 non-noise
    // features across seeds.
    let dims = Dims::new(64, 64, 64).unwrap();
    let (vx, _, _, s1) = gen_abc_flow(&AbcParams::classic(0.0), dims).unwrap();
    let qa = quantize(&vx, 16).unwrap();
    let qb = quantize(&s1, 16).unwrap();
    let (_, sv) = symbolize(&[&qa, &qb]).unwrap();
    for seed in 0..5u64 {
        let cfg = TrainConfig {
            quantization: 16,
            seed,
            ..TrainConfig::default()
        };
        let (model, _) = train(&sv, &cfg).unwrap();
        // Calibrated radius for this synthetic pair: smooth trigonometric
        // fields keep all combination embeddings in one connected component
        // at wide radii, while 0.2 resolves the stable mid-scale features.
        let opts = ClassifyOptions {
            eps: 0.2,
            ..ClassifyOptions::default()
        };
        let set = classify_features(&model, &sv, &opts).unwrap();
        let n = set.feature_count();
        assert!(
            (2..=30).contains(&n),
            "seed {seed}: {n} features outside the stability band"
        );
    }
}

/// Cluster purity against the known blob structure: fraction of non-noise
/// symbols whose cluster's majority blob matches their own.
fn blob_purity(labels: &[i32], blobs: &[Option<u8>]) -> f64 {
    use std::collections::HashMap;
    let mut per_cluster: HashMap<i32, (u64, u64)> = HashMap::new();
    for (s, &l) in labels.iter().enumerate() {
        if l < 0 {
            continue;
        }
        if let Some(b) = blobs[s] {
            let e = per_cluster.entry(l).or_default();
            if b == 0 {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    let mut correct = 0u64;
    let mut total = 0u64;
    for (a, b) in per_cluster.values() {
        correct += a.max(b);
        total += a + b;
    }
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

#[test]
fn embedding_metric_beats_raw_combination_clustering() {
    let (model, sv) = train_two_blob(9, true);
    let blobs: Vec<Option<u8>> = (0..sv.table().len() as u32)
        .map(|id| blob_of_symbol(&sv, id))
        .collect();

    let embed = classify_features(
        &model,
        &sv,
        &ClassifyOptions {
            eps: 0.2,
            ..ClassifyOptions::default()
        },
    )
    .unwrap();
    let raw = classify_features(
        &model,
        &sv,
        &ClassifyOptions {
            eps: 1.0,
            metric: Metric::Euclidean,
            input: ClusterInput::RawCombinations,
            min_points: 4,
            min_voxels: None,
        },
    )
    .unwrap();
    let p_embed = blob_purity(&embed.labels, &blobs);
    let p_raw = blob_purity(&raw.labels, &blobs);
    assert!(
        p_embed >= p_raw,
        "embedding purity {p_embed} below raw-combination purity {p_raw}"
    );
}

#[test]
fn self_prediction_beats_majority_baseline() {
    let dims = Dims::new(64, 64, 64).unwrap();
    let s1 = gen_abc_s1(&AbcParams::classic(0.0), dims).unwrap();
    let q = quantize(&s1, 32).unwrap();
    let (_, sv) = symbolize(&[&q]).unwrap();
    let cfg = TrainConfig {
        quantization: 32,
        ..TrainConfig::default()
    };
    let (model, _) = train(&sv, &cfg).unwrap();
    let predicted = transfer_predict(&model, &sv, &TransferOptions::default()).unwrap();
    let accuracy = prediction_similarity(&sv, &predicted).unwrap();
    let majority =
        *sv.frequencies().iter().max().unwrap() as f64 / sv.len() as f64;
    assert!(
        accuracy > majority,
        "self-prediction {accuracy:.4} does not beat majority baseline {majority:.4}"
    );
}

#[test]
fn throughput_mode_trains_a_usable_model() {
    // Lock-free parallel updates are not bit-reproducible, but the result
    // must stay finite and carry the same gross structure.
    let (_, sv) = {
        let v = two_blob_volume(24);
        let q = quantize(&v, 16).unwrap();
        symbolize(&[&q]).unwrap()
    };
    let cfg = TrainConfig {
        quantization: 16,
        subsample_threshold: 1.0,
        ..TrainConfig::default()
    };
    let (model, log) = voxel2vec_core::model::train_with_threads(&sv, &cfg, 3).unwrap();
    assert_eq!(log.pairs, sv.len() as u64);
    assert!(model.centers().is_finite() && model.contexts().is_finite());
    let contrast = blob_contrast(&model, &sv);
    assert!(contrast > 0.0, "hogwild training lost the blob structure: {contrast}");
}

#[test]
fn embeddings_stay_finite_after_a_million_updates() {
    // 64^3 at default settings performs well over 10^6 per-positive updates.
    let dims = Dims::new(64, 64, 64).unwrap();
    let s1 = gen_abc_s1(&AbcParams::classic(0.0), dims).unwrap();
    let q = quantize(&s1, 64).unwrap();
    let (table, sv) = symbolize(&[&q]).unwrap();
    let (model, log) = train(&sv, &TrainConfig::default()).unwrap();
    assert!(log.instances > 1_000_000, "only {} instances", log.instances);
    assert!(model.centers().is_finite() && model.contexts().is_finite());
    let _ = Arc::strong_count(&table);
}
