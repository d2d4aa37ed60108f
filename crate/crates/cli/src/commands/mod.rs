pub mod associate;
pub mod classify;
pub mod gen;
pub mod simmap;
pub mod train;

use std::path::Path;

use voxel2vec_core::config::TrainConfig;
use voxel2vec_core::dataset::{symbolize_dataset, DatasetDescriptor, SymbolizedDataset};
use voxel2vec_core::{Error, Result};

use crate::manifest::RunManifest;
use crate::{RerunArgs, TrainOpts};

/// Re-execute a recorded run into a fresh directory. Inputs are verified
/// against the recorded hashes first.
pub fn rerun(args: RerunArgs) -> Result<()> {
    let manifest = RunManifest::load(&args.manifest)?;
    manifest.verify_inputs()?;
    let params = manifest.params.clone();
    let parse = |e: serde_json::Error| {
        Error::Data(format!("manifest params do not match '{}': {e}", manifest.command))
    };
    match manifest.command.as_str() {
        "gen" => gen::run(serde_json::from_value(params).map_err(parse)?, &args.out_dir),
        "train" => train::run(serde_json::from_value(params).map_err(parse)?, &args.out_dir),
        "simmap" => simmap::run(serde_json::from_value(params).map_err(parse)?, &args.out_dir),
        "classify" => classify::run(serde_json::from_value(params).map_err(parse)?, &args.out_dir),
        "associate" => {
            associate::run(serde_json::from_value(params).map_err(parse)?, &args.out_dir)
        }
        other => Err(Error::Data(format!("manifest names unknown command '{other}'"))),
    }
}

/// Resolve training configuration: defaults, then the config file, then
/// explicit flags.
pub fn resolve_train_config(opts: &TrainOpts) -> Result<TrainConfig> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Parameter(format!("{}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    if let Some(v) = opts.quantization {
        cfg.quantization = v;
    }
    if let Some(v) = opts.context_window {
        cfg.context_window = v;
    }
    if let Some(v) = opts.negatives {
        cfg.negatives = v;
    }
    if let Some(v) = opts.dimension {
        cfg.dimension = v;
    }
    if let Some(v) = opts.alpha {
        cfg.learning_rate = v;
    }
    if let Some(v) = opts.lambda {
        cfg.penalty = v;
    }
    if let Some(v) = opts.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = opts.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = opts.rho {
        cfg.subsample_threshold = v;
    }
    if let Some(v) = opts.min_samples {
        cfg.min_samples_per_symbol = v;
    }
    if let Some(v) = opts.seed {
        cfg.seed = v;
    }
    if opts.no_exclusion {
        cfg.exclude_context = false;
    }
    if opts.no_self_paced {
        cfg.self_paced = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Worker thread count: flag, then V2V_THREADS, then 1. `--deterministic`
/// rejects anything above one thread.
pub fn resolve_threads(opts: &TrainOpts) -> Result<usize> {
    let threads = match opts.threads {
        Some(t) => t,
        None => match std::env::var("V2V_THREADS") {
            Ok(v) => v.parse().map_err(|_| {
                Error::Parameter(format!("V2V_THREADS is not a thread count: {v}"))
            })?,
            Err(_) => 1,
        },
    };
    if threads == 0 {
        return Err(Error::Parameter("thread count must be >= 1".into()));
    }
    if opts.deterministic && threads > 1 {
        return Err(Error::Parameter(
            "--deterministic requires a single thread".into(),
        ));
    }
    Ok(threads)
}

/// Parse `lo:hi`.
pub fn parse_value_range(spec: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::Parameter(format!(
            "value range must be lo:hi, got '{spec}'"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Parameter(format!("bad range bound '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Parameter(format!("bad range bound '{}'", parts[1])))?;
    // NaN bounds fail the ordering check.
    let ordered = hi > lo;
    if !ordered {
        return Err(Error::Parameter(format!("empty value range '{spec}'")));
    }
    Ok((lo, hi))
}

/// Parse a comma-separated variable list.
pub fn parse_vars(spec: &str) -> Result<Vec<String>> {
    let vars: Vec<String> = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if vars.is_empty() {
        return Err(Error::Parameter("no variables given".into()));
    }
    Ok(vars)
}

/// Load and symbolize a dataset, recording every raw file into the manifest.
pub fn load_symbolized(
    input: &Path,
    vars: &[String],
    levels: u16,
    manifest: &mut RunManifest,
) -> Result<(DatasetDescriptor, SymbolizedDataset)> {
    manifest.record_input(input)?;
    let (desc, base) = DatasetDescriptor::load(input)?;
    for leaf in desc.leaf_members() {
        for var in vars {
            let rel = leaf.descriptor.variables.get(var).ok_or_else(|| {
                Error::Parameter(format!(
                    "variable '{var}' not present in member '{}'",
                    leaf.label
                ))
            })?;
            manifest.record_input(&base.join(rel))?;
        }
    }
    let ds = symbolize_dataset(&desc, &base, vars, levels)?;
    Ok((desc, ds))
}

/// Deterministic per-member seed derivation for collection training.
pub fn member_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn ensure_out_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))
}
