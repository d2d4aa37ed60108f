//! Similarity map export.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use voxel2vec_core::model_io::load_embedding;
use voxel2vec_core::render::render_heatmap;
use voxel2vec_core::similarity::similarity_map;
use voxel2vec_core::{Error, Result};

use crate::manifest::RunManifest;
use crate::SimmapArgs;

use super::{ensure_out_dir, parse_value_range};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimmapParams {
    pub embedding: PathBuf,
    pub value_range: (f64, f64),
    pub scale: u32,
}

pub fn run_from_args(args: SimmapArgs) -> Result<()> {
    let params = SimmapParams {
        embedding: args
            .embedding
            .canonicalize()
            .map_err(|e| Error::io(&args.embedding, e))?,
        value_range: parse_value_range(&args.value_range)?,
        scale: args.scale,
    };
    run(params, &args.out_dir)
}

pub fn run(params: SimmapParams, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let started = Instant::now();
    let mut manifest = RunManifest::new(
        "simmap",
        0,
        true,
        serde_json::to_value(&params).map_err(|e| Error::Internal(e.to_string()))?,
    );
    manifest.record_input(&params.embedding)?;

    let model = load_embedding(&params.embedding)?;
    let map = similarity_map(&model);
    if !map.zero_norm_symbols().is_empty() {
        eprintln!(
            "warning: {} symbols have zero-norm center vectors (flagged in the CSV)",
            map.zero_norm_symbols().len()
        );
    }

    let csv_path = out_dir.join("simmap.csv");
    map.export_csv(&csv_path)?;
    manifest.record_output(out_dir, &csv_path);
    let png_path = out_dir.join("simmap.png");
    render_heatmap(map.values(), map.size(), &png_path, params.value_range, params.scale)?;
    manifest.record_output(out_dir, &png_path);

    manifest.record_timing("total", started.elapsed().as_secs_f64());
    manifest.save(out_dir)?;
    println!("similarity map over {} symbols -> {}", map.size(), png_path.display());
    Ok(())
}
