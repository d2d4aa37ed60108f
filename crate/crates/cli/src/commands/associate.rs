//! Association analysis over time-varying and ensemble collections.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use voxel2vec_core::config::TrainConfig;
use voxel2vec_core::dataset::DatasetKind;
use voxel2vec_core::fmt::sig_digits;
use voxel2vec_core::model::{train_with_threads, PredictScoring};
use voxel2vec_core::render::render_heatmap_grid;
use voxel2vec_core::symbol::SymbolVolume;
use voxel2vec_core::transfer::{
    association_matrix, ensemble_projection, transfer_predict, AssociationMatrix,
    CollectionMember, TransferOptions, VolumeCollection,
};
use voxel2vec_core::tsne::TsneParams;
use voxel2vec_core::volume::{write_atomic, write_raw_u32};
use voxel2vec_core::{Error, Result};

use crate::manifest::RunManifest;
use crate::AssociateArgs;

use super::{
    ensure_out_dir, load_symbolized, member_seed, parse_value_range, parse_vars, resolve_threads,
    resolve_train_config,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssociateParams {
    pub input: PathBuf,
    pub vars: Vec<String>,
    pub config: TrainConfig,
    pub threads: usize,
    pub value_range: (f64, f64),
    pub scale: u32,
    pub scoring: PredictScoring,
    pub export_predictions: bool,
    pub perplexity: f64,
    pub tsne_iterations: usize,
    pub canvas: u32,
}

pub fn run_from_args(args: AssociateArgs) -> Result<()> {
    let scoring = match args.predict_scoring.as_str() {
        "context-centers-vs-candidates" | "default" => {
            PredictScoring::ContextCentersVsCandidates
        }
        "context-contexts-vs-candidates" | "mirrored" => {
            PredictScoring::ContextContextsVsCandidates
        }
        other => {
            return Err(Error::Parameter(format!(
                "predict scoring must be context-centers-vs-candidates or \
                 context-contexts-vs-candidates, got '{other}'"
            )))
        }
    };
    // Parameter validation precedes filesystem access.
    let config = resolve_train_config(&args.train)?;
    let threads = resolve_threads(&args.train)?;
    let vars = parse_vars(&args.vars)?;
    let value_range = parse_value_range(&args.value_range)?;
    let params = AssociateParams {
        input: args
            .input
            .canonicalize()
            .map_err(|e| Error::io(&args.input, e))?,
        vars,
        config,
        threads,
        value_range,
        scale: args.scale,
        scoring,
        export_predictions: args.export_predictions,
        perplexity: args.perplexity,
        tsne_iterations: args.tsne_iterations,
        canvas: args.canvas,
    };
    run(params, &args.out_dir)
}

fn train_members(
    members: Vec<(String, SymbolVolume)>,
    first_index: usize,
    params: &AssociateParams,
) -> Result<VolumeCollection> {
    let trained = members
        .into_iter()
        .enumerate()
        .map(|(offset, (label, volume))| {
            let cfg = TrainConfig {
                seed: member_seed(params.config.seed, first_index + offset),
                ..params.config.clone()
            };
            let (model, _) = train_with_threads(&volume, &cfg, params.threads)?;
            Ok(CollectionMember {
                label,
                volume,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    VolumeCollection::new(trained)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn export_matrix(
    matrix: &AssociationMatrix,
    stem: &str,
    params: &AssociateParams,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let csv = out_dir.join(format!("{stem}.csv"));
    matrix.export_csv(&csv)?;
    manifest.record_output(out_dir, &csv);
    let png = out_dir.join(format!("{stem}.png"));
    matrix.export_heatmap(&png, params.value_range, params.scale)?;
    manifest.record_output(out_dir, &png);
    Ok(())
}

fn export_self_predictions(
    collection: &VolumeCollection,
    opts: &TransferOptions,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    for member in collection.members() {
        let predicted = transfer_predict(&member.model, &member.volume, opts)?;
        let path = out_dir.join(format!("pred_{}.u32.raw", sanitize(&member.label)));
        write_raw_u32(&path, predicted.ids())?;
        manifest.record_output(out_dir, &path);
    }
    Ok(())
}

pub fn run(params: AssociateParams, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let started = Instant::now();
    let mut manifest = RunManifest::new(
        "associate",
        params.config.seed,
        params.threads == 1,
        serde_json::to_value(&params).map_err(|e| Error::Internal(e.to_string()))?,
    );

    let (desc, dataset) = load_symbolized(
        &params.input,
        &params.vars,
        params.config.quantization,
        &mut manifest,
    )?;
    manifest.record_timing("load", started.elapsed().as_secs_f64());
    let opts = TransferOptions {
        window: params.config.context_window,
        scoring: params.scoring,
    };

    match desc.kind() {
        DatasetKind::TimeVaryingEnsemble => {
            // One association matrix per time step over that step's members.
            let groups = desc.time_groups();
            let mut tiles: Vec<(String, Vec<f64>)> = Vec::new();
            let mut consumed = 0usize;
            let mut tile_size = None;
            for (time_label, leaves) in &groups {
                let count = leaves.len();
                let members = dataset.members[consumed..consumed + count].to_vec();
                let collection = train_members(members, consumed, &params)?;
                consumed += count;
                let matrix = association_matrix(&collection, &opts)?;
                export_matrix(
                    &matrix,
                    &format!("assoc_{}", sanitize(time_label)),
                    &params,
                    out_dir,
                    &mut manifest,
                )?;
                if params.export_predictions {
                    export_self_predictions(&collection, &opts, out_dir, &mut manifest)?;
                }
                match tile_size {
                    None => tile_size = Some(matrix.size()),
                    Some(s) if s == matrix.size() => {}
                    Some(s) => {
                        return Err(Error::Data(format!(
                            "time steps have different member counts ({s} vs {})",
                            matrix.size()
                        )))
                    }
                }
                tiles.push((time_label.clone(), matrix.values().to_vec()));
            }
            let grid_path = out_dir.join("association_grid.png");
            let columns = tiles.len().min(10);
            render_heatmap_grid(
                &tiles,
                tile_size.unwrap_or(0),
                &grid_path,
                params.value_range,
                params.scale,
                columns,
            )?;
            manifest.record_output(out_dir, &grid_path);
            println!(
                "association grid over {} time steps -> {}",
                tiles.len(),
                grid_path.display()
            );
        }
        kind => {
            let collection = train_members(dataset.members, 0, &params)?;
            manifest.record_timing("train", started.elapsed().as_secs_f64());
            let matrix = association_matrix(&collection, &opts)?;
            export_matrix(&matrix, "association", &params, out_dir, &mut manifest)?;
            if params.export_predictions {
                export_self_predictions(&collection, &opts, out_dir, &mut manifest)?;
            }
            if kind == DatasetKind::Ensemble && matrix.size() >= 2 {
                let layout = ensemble_projection(
                    &matrix,
                    &TsneParams {
                        perplexity: params.perplexity,
                        iterations: params.tsne_iterations,
                        seed: params.config.seed,
                        ..TsneParams::default()
                    },
                )?;
                let mut csv = String::from("label,x,y\n");
                let mut points = Vec::with_capacity(matrix.size());
                for (i, pos) in layout.positions.iter().enumerate() {
                    csv.push_str(&format!(
                        "{},{},{}\n",
                        voxel2vec_core::fmt::csv_field(&matrix.labels()[i]),
                        sig_digits(pos[0], 6),
                        sig_digits(pos[1], 6)
                    ));
                    points.push(voxel2vec_core::render::ScatterPoint {
                        x: pos[0],
                        y: pos[1],
                        radius: 0.02,
                        color: [120, 80, 200],
                        label: Some(matrix.labels()[i].clone()),
                    });
                }
                let csv_path = out_dir.join("ensemble_positions.csv");
                write_atomic(&csv_path, csv.as_bytes())?;
                manifest.record_output(out_dir, &csv_path);
                let scatter_path = out_dir.join("ensemble_scatter.png");
                voxel2vec_core::render::render_scatter(&points, &scatter_path, params.canvas)?;
                manifest.record_output(out_dir, &scatter_path);
            }
            println!(
                "association over {} members -> {}",
                matrix.size(),
                out_dir.join("association.csv").display()
            );
        }
    }

    manifest.record_timing("total", started.elapsed().as_secs_f64());
    manifest.save(out_dir)?;
    Ok(())
}
