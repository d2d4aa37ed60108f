//! Feature classification: cluster a trained embedding's symbols and export
//! the label volume, legend, and 2D feature layout.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use voxel2vec_core::dbscan::Metric;
use voxel2vec_core::model_io::load_embedding;
use voxel2vec_core::multivar::{
    classify_features, export_feature_scatter, export_label_volume, project_features,
    ClassifyOptions, ClusterInput,
};
use voxel2vec_core::tsne::TsneParams;
use voxel2vec_core::{Error, Result};

use crate::manifest::RunManifest;
use crate::ClassifyArgs;

use super::train::select_member;
use super::{ensure_out_dir, load_symbolized, parse_vars};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyParams {
    pub embedding: PathBuf,
    pub input: PathBuf,
    pub vars: Vec<String>,
    pub quantization: u16,
    pub member: Option<String>,
    pub eps: f64,
    pub min_points: usize,
    pub metric: Metric,
    pub input_space: ClusterInput,
    pub min_voxels: Option<u64>,
    pub perplexity: f64,
    pub tsne_iterations: usize,
    pub seed: u64,
    pub canvas: u32,
}

pub fn parse_metric(name: &str) -> Result<Metric> {
    match name {
        "cosine" => Ok(Metric::Cosine),
        "euclidean" => Ok(Metric::Euclidean),
        other => Err(Error::Parameter(format!(
            "metric must be cosine or euclidean, got '{other}'"
        ))),
    }
}

pub fn run_from_args(args: ClassifyArgs) -> Result<()> {
    let params = ClassifyParams {
        embedding: args
            .embedding
            .canonicalize()
            .map_err(|e| Error::io(&args.embedding, e))?,
        input: args
            .input
            .canonicalize()
            .map_err(|e| Error::io(&args.input, e))?,
        vars: parse_vars(&args.vars)?,
        quantization: args.quantization,
        member: args.member.clone(),
        eps: args.eps,
        min_points: args.minpts,
        metric: parse_metric(&args.metric)?,
        input_space: if args.raw_combinations {
            ClusterInput::RawCombinations
        } else {
            ClusterInput::Embeddings
        },
        min_voxels: args.min_voxels,
        perplexity: args.perplexity,
        tsne_iterations: args.tsne_iterations,
        seed: args.seed,
        canvas: args.canvas,
    };
    run(params, &args.out_dir)
}

pub fn run(params: ClassifyParams, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let started = Instant::now();
    let mut manifest = RunManifest::new(
        "classify",
        params.seed,
        true,
        serde_json::to_value(&params).map_err(|e| Error::Internal(e.to_string()))?,
    );
    manifest.record_input(&params.embedding)?;
    let model = load_embedding(&params.embedding)?;

    let (_, dataset) = load_symbolized(
        &params.input,
        &params.vars,
        params.quantization,
        &mut manifest,
    )?;
    let (label, sv) = select_member(&dataset.members, &params.member)?;
    if !model.table().same_combinations(sv.table()) {
        return Err(Error::Data(
            "embedding symbol table does not match the re-symbolized volume; \
             check --vars and --R against the training run"
                .into(),
        ));
    }

    let mut set = classify_features(
        &model,
        sv,
        &ClassifyOptions {
            eps: params.eps,
            min_points: params.min_points,
            min_voxels: params.min_voxels,
            metric: params.metric,
            input: params.input_space,
        },
    )?;
    if set.features.is_empty() {
        eprintln!("warning: every symbol is noise; no features to lay out");
    } else {
        project_features(
            &mut set,
            &TsneParams {
                perplexity: params.perplexity,
                iterations: params.tsne_iterations,
                seed: params.seed,
                ..TsneParams::default()
            },
        )?;
        if !set.layout_converged {
            eprintln!("warning: feature layout still overlaps after the iteration cap");
        }
        let scatter_path = out_dir.join("features_scatter.png");
        export_feature_scatter(&set, &scatter_path, params.canvas)?;
        manifest.record_output(out_dir, &scatter_path);
    }

    let volume_path = out_dir.join("label_volume.raw");
    let legend_path = out_dir.join("legend.json");
    export_label_volume(&set, sv, &volume_path, &legend_path)?;
    manifest.record_output(out_dir, &volume_path);
    manifest.record_output(out_dir, &legend_path);

    manifest.record_timing("total", started.elapsed().as_secs_f64());
    manifest.save(out_dir)?;
    println!(
        "classified '{label}': {} features, {} noise voxels -> {}",
        set.feature_count(),
        set.noise_voxels,
        legend_path.display()
    );
    Ok(())
}
