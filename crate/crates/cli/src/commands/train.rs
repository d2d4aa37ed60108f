//! Embedding training over one dataset member.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use voxel2vec_core::config::TrainConfig;
use voxel2vec_core::model::train_with_threads;
use voxel2vec_core::model_io::{export_embedding_csv, save_embedding};
use voxel2vec_core::symbol::SymbolVolume;
use voxel2vec_core::{Error, Result};

use crate::manifest::RunManifest;
use crate::TrainArgs;

use super::{ensure_out_dir, load_symbolized, parse_vars, resolve_threads, resolve_train_config};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainParams {
    pub input: PathBuf,
    pub vars: Vec<String>,
    pub member: Option<String>,
    pub config: TrainConfig,
    pub threads: usize,
}

pub fn run_from_args(args: TrainArgs) -> Result<()> {
    // Validate parameters before touching the filesystem so usage errors
    // surface as usage errors.
    let config = resolve_train_config(&args.train)?;
    let threads = resolve_threads(&args.train)?;
    let vars = parse_vars(&args.vars)?;
    let params = TrainParams {
        input: args
            .input
            .canonicalize()
            .map_err(|e| Error::io(&args.input, e))?,
        vars,
        member: args.member.clone(),
        config,
        threads,
    };
    run(params, &args.out_dir)
}

/// Pick the member to train on: the only one, or the one named by label.
pub fn select_member<'a>(
    members: &'a [(String, SymbolVolume)],
    member: &Option<String>,
) -> Result<&'a (String, SymbolVolume)> {
    match member {
        Some(label) => members
            .iter()
            .find(|(l, _)| l == label)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "member '{label}' not found (have: {})",
                    members.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>().join(", ")
                ))
            }),
        None if members.len() == 1 => Ok(&members[0]),
        None => Err(Error::Parameter(format!(
            "descriptor holds {} members; pick one with --member (have: {})",
            members.len(),
            members.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

pub fn run(params: TrainParams, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let started = Instant::now();
    let mut manifest = RunManifest::new(
        "train",
        params.config.seed,
        params.threads == 1,
        serde_json::to_value(&params).map_err(|e| Error::Internal(e.to_string()))?,
    );

    let (_, dataset) = load_symbolized(
        &params.input,
        &params.vars,
        params.config.quantization,
        &mut manifest,
    )?;
    let (label, sv) = select_member(&dataset.members, &params.member)?;
    manifest.record_timing("load", started.elapsed().as_secs_f64());

    let train_started = Instant::now();
    let (model, log) = train_with_threads(sv, &params.config, params.threads)?;
    manifest.record_timing("train", train_started.elapsed().as_secs_f64());
    if log.degenerate {
        eprintln!("warning: single-symbol vocabulary; returning the initialized model");
    }

    let embedding_path = out_dir.join("embedding.v2v");
    save_embedding(&embedding_path, &model)?;
    manifest.record_output(out_dir, &embedding_path);
    let csv_path = out_dir.join("embedding.csv");
    export_embedding_csv(&csv_path, &model)?;
    manifest.record_output(out_dir, &csv_path);

    manifest.record_timing("total", started.elapsed().as_secs_f64());
    manifest.save(out_dir)?;
    println!(
        "trained '{label}' ({} symbols, {} pairs, mean objective {:.4}) -> {}",
        model.symbol_count(),
        log.pairs,
        log.final_mean_objective,
        embedding_path.display()
    );
    Ok(())
}
