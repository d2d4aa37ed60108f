//! Synthetic dataset generation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use voxel2vec_core::abc::{gen_abc_flow, AbcParams, AbcVariant};
use voxel2vec_core::dataset::DatasetDescriptor;
use voxel2vec_core::volume::{write_raw_f32, ByteOrder, Dims, ValueKind};
use voxel2vec_core::{Error, Result};

use crate::manifest::RunManifest;
use crate::GenArgs;

use super::ensure_out_dir;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenParams {
    pub dims: [usize; 3],
    /// Resolved time values.
    pub times: Vec<f64>,
    /// Resolved sweep members as (A, B); empty means the fixed coefficients.
    pub sweep: Vec<(f64, f64)>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub variant: AbcVariant,
    pub seed: u64,
}

pub fn run_from_args(args: GenArgs) -> Result<()> {
    if !args.abc {
        return Err(Error::Parameter(
            "no generator selected; pass --abc".into(),
        ));
    }
    let dims = parse_dims(&args.dims)?;
    let times = parse_range(&args.t)?;
    let sweep = match &args.sweep {
        Some(spec) => parse_sweep(spec)?,
        None => Vec::new(),
    };
    let variant = if args.abc_symmetric {
        AbcVariant::Symmetric
    } else {
        AbcVariant::Faithful
    };
    let params = GenParams {
        dims: [dims.nx, dims.ny, dims.nz],
        times,
        sweep,
        a: args.a,
        b: args.b,
        c: args.c,
        variant,
        seed: args.seed,
    };
    run(params, &args.out_dir)
}

pub fn run(params: GenParams, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let started = Instant::now();
    let mut manifest = RunManifest::new(
        "gen",
        params.seed,
        true,
        serde_json::to_value(&params).map_err(|e| Error::Internal(e.to_string()))?,
    );
    let dims = Dims::new(params.dims[0], params.dims[1], params.dims[2])?;

    let descriptor = if params.times.len() == 1 {
        gen_time_step(&params, dims, params.times[0], "", out_dir, &mut manifest)?
    } else {
        let mut steps = Vec::with_capacity(params.times.len());
        for &t in &params.times {
            steps.push(gen_time_step(
                &params,
                dims,
                t,
                &format!("t{t}"),
                out_dir,
                &mut manifest,
            )?);
        }
        DatasetDescriptor {
            time_steps: steps,
            ..shell_descriptor(&params)
        }
    };

    let desc_path = out_dir.join("dataset.json");
    descriptor.save(&desc_path)?;
    manifest.record_output(out_dir, &desc_path);
    manifest.record_timing("total", started.elapsed().as_secs_f64());
    manifest.save(out_dir)?;
    Ok(())
}

fn shell_descriptor(params: &GenParams) -> DatasetDescriptor {
    DatasetDescriptor {
        dims: params.dims,
        dtype: ValueKind::Float32,
        byte_order: ByteOrder::Little,
        variables: BTreeMap::new(),
        time_step: None,
        ensemble_params: None,
        time_steps: Vec::new(),
        ensemble: BTreeMap::new(),
    }
}

fn gen_time_step(
    params: &GenParams,
    dims: Dims,
    t: f64,
    time_suffix: &str,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<DatasetDescriptor> {
    if params.sweep.is_empty() {
        return gen_member(params, dims, params.a, params.b, t, time_suffix, out_dir, manifest);
    }
    let mut ensemble = BTreeMap::new();
    for &(a, b) in &params.sweep {
        let suffix = if time_suffix.is_empty() {
            format!("A{a}_B{b}")
        } else {
            format!("{time_suffix}_A{a}_B{b}")
        };
        let member = gen_member(params, dims, a, b, t, &suffix, out_dir, manifest)?;
        ensemble.insert(format!("A={a},B={b}"), member);
    }
    Ok(DatasetDescriptor {
        time_step: Some(t),
        ensemble,
        ..shell_descriptor(params)
    })
}

#[allow(clippy::too_many_arguments)]
fn gen_member(
    params: &GenParams,
    dims: Dims,
    a: f64,
    b: f64,
    t: f64,
    suffix: &str,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<DatasetDescriptor> {
    let abc = AbcParams {
        a,
        b,
        c: params.c,
        t,
        variant: params.variant,
        domain: voxel2vec_core::abc::default_domain(),
    };
    let (vx, vy, vz, s1) = gen_abc_flow(&abc, dims)?;
    let mut variables = BTreeMap::new();
    for (name, vol) in [("vx", &vx), ("vy", &vy), ("vz", &vz), ("s1", &s1)] {
        let file = if suffix.is_empty() {
            format!("{name}.raw")
        } else {
            format!("{name}_{suffix}.raw")
        };
        let path = out_dir.join(&file);
        write_raw_f32(&path, vol)?;
        manifest.record_output(out_dir, &path);
        variables.insert(name.to_string(), PathBuf::from(file));
    }
    Ok(DatasetDescriptor {
        variables,
        time_step: Some(t),
        ensemble_params: if params.sweep.is_empty() {
            None
        } else {
            Some([("A".to_string(), a), ("B".to_string(), b)].into_iter().collect())
        },
        ..shell_descriptor(params)
    })
}

fn parse_dims(spec: &str) -> Result<Dims> {
    let parts: Vec<&str> = spec.split(',').collect();
    let parse = |s: &str| -> Result<usize> {
        s.trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("bad dimension '{s}'")))
    };
    match parts.len() {
        1 => {
            let n = parse(parts[0])?;
            Dims::new(n, n, n)
        }
        3 => Dims::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?),
        _ => Err(Error::Parameter(format!(
            "dims must be N or nx,ny,nz, got '{spec}'"
        ))),
    }
}

/// Parse `v` or inclusive `start:end:stride`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("bad number '{s}' in range '{spec}'")))
    };
    match parts.len() {
        1 => Ok(vec![parse(parts[0])?]),
        3 => {
            let start = parse(parts[0])?;
            let end = parse(parts[1])?;
            let stride = parse(parts[2])?;
            // NaN strides fail the positivity check.
            let stride_valid = stride > 0.0;
            if !stride_valid || end < start {
                return Err(Error::Parameter(format!("bad range '{spec}'")));
            }
            let count = ((end - start) / stride + 0.5).floor() as usize + 1;
            Ok((0..count).map(|i| start + stride * i as f64).collect())
        }
        _ => Err(Error::Parameter(format!(
            "range must be v or start:end:stride, got '{spec}'"
        ))),
    }
}

/// Parse `A=-2:2:0.5,B=-2:2:0.5` into the cross product of A and B values.
fn parse_sweep(spec: &str) -> Result<Vec<(f64, f64)>> {
    let mut a_values = None;
    let mut b_values = None;
    for part in spec.split(',') {
        let (name, range) = part.split_once('=').ok_or_else(|| {
            Error::Parameter(format!("sweep term '{part}' is not NAME=start:end:stride"))
        })?;
        let values = parse_range(range)?;
        match name.trim() {
            "A" => a_values = Some(values),
            "B" => b_values = Some(values),
            other => {
                return Err(Error::Parameter(format!(
                    "only A and B can be swept, got '{other}'"
                )))
            }
        }
    }
    let a_values = a_values.ok_or_else(|| Error::Parameter("sweep is missing A".into()))?;
    let b_values = b_values.ok_or_else(|| Error::Parameter("sweep is missing B".into()))?;
    let mut out = Vec::with_capacity(a_values.len() * b_values.len());
    for &a in &a_values {
        for &b in &b_values {
            out.push((a, b));
        }
    }
    Ok(out)
}
