//! Dataset descriptors: a JSON document naming raw volume files, with
//! optional nested time steps and ensemble members.
//!
//! Variable paths are relative to the descriptor file's directory. A
//! descriptor is one of: a single member (variables only), a time series
//! (`time_steps`), an ensemble (`ensemble`), or a time series of ensembles.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::symbol::{symbolize_collection, SymbolTable, SymbolVolume};
use crate::volume::{
    quantize_with_bounds, read_raw_volume, write_atomic, ByteOrder, Dims, QuantizedVolume,
    ValueKind, Volume,
};
use crate::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDescriptor {
    pub dims: [usize; 3],
    pub dtype: ValueKind,
    pub byte_order: ByteOrder,
    /// Variable name to raw file path (relative to the descriptor).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub variables: BTreeMap<String, PathBuf>,
    /// Time label of this member, when part of a series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
    /// Parameter labels of this member, when part of an ensemble.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_params: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub time_steps: Vec<DatasetDescriptor>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ensemble: BTreeMap<String, DatasetDescriptor>,
}

/// Shape of the dataset a descriptor describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Single,
    TimeSeries,
    Ensemble,
    TimeVaryingEnsemble,
}

/// One directly loadable member and its display label.
pub struct LeafMember<'a> {
    pub label: String,
    pub descriptor: &'a DatasetDescriptor,
}

impl DatasetDescriptor {
    pub fn grid_dims(&self) -> Result<Dims> {
        Dims::new(self.dims[0], self.dims[1], self.dims[2])
    }

    pub fn kind(&self) -> DatasetKind {
        let has_time = !self.time_steps.is_empty();
        let has_ensemble_children = self
            .time_steps
            .iter()
            .any(|t| !t.ensemble.is_empty());
        match (has_time, !self.ensemble.is_empty()) {
            (true, _) if has_ensemble_children => DatasetKind::TimeVaryingEnsemble,
            (true, _) => DatasetKind::TimeSeries,
            (false, true) => DatasetKind::Ensemble,
            (false, false) => DatasetKind::Single,
        }
    }

    /// All directly loadable members in deterministic order: time steps in
    /// list order, ensemble members in key order, a plain descriptor as one
    /// member labeled `volume`.
    pub fn leaf_members(&self) -> Vec<LeafMember<'_>> {
        let mut out = Vec::new();
        self.collect_leaves("", &mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, prefix: &str, out: &mut Vec<LeafMember<'a>>) {
        if !self.time_steps.is_empty() {
            for step in &self.time_steps {
                let label = match step.time_step {
                    Some(t) => format!("t={t}"),
                    None => format!("t#{}", out.len()),
                };
                let label = if prefix.is_empty() {
                    label
                } else {
                    format!("{prefix}/{label}")
                };
                step.collect_leaves(&label, out);
            }
            return;
        }
        if !self.ensemble.is_empty() {
            for (key, member) in &self.ensemble {
                let label = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}/{key}")
                };
                member.collect_leaves(&label, out);
            }
            return;
        }
        out.push(LeafMember {
            label: if prefix.is_empty() {
                "volume".to_string()
            } else {
                prefix.to_string()
            },
            descriptor: self,
        });
    }

    /// Time-major grouping for time-varying ensembles: one entry per time
    /// step with that step's members.
    pub fn time_groups(&self) -> Vec<(String, Vec<LeafMember<'_>>)> {
        self.time_steps
            .iter()
            .map(|step| {
                let label = match step.time_step {
                    Some(t) => format!("t={t}"),
                    None => "t".to_string(),
                };
                (label, step.leaf_members())
            })
            .collect()
    }

    /// Load one variable of a leaf descriptor.
    pub fn load_variable(&self, base: &Path, name: &str) -> Result<Volume> {
        let rel = self.variables.get(name).ok_or_else(|| {
            Error::Parameter(format!(
                "variable '{name}' not present (have: {})",
                self.variables.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })?;
        let path = base.join(rel);
        read_raw_volume(&path, self.grid_dims()?, self.dtype, self.byte_order)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Internal(format!("descriptor serialization: {e}")))?;
        write_atomic(path, json.as_bytes())
    }

    /// Load a descriptor; returns it with the directory paths resolve from.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let desc: DatasetDescriptor = serde_json::from_str(&text)
            .map_err(|e| Error::Descriptor(format!("{}: {e}", path.display())))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((desc, base))
    }
}

/// A fully symbolized dataset: one shared table, one symbol volume per leaf
/// member, quantized with bounds global across the collection per variable.
pub struct SymbolizedDataset {
    pub table: Arc<SymbolTable>,
    pub members: Vec<(String, SymbolVolume)>,
    /// Per-variable global `(min, max)` used for quantization.
    pub bounds: Vec<(f64, f64)>,
    pub variables: Vec<String>,
}

/// Load, quantize, and symbolize every leaf member of a dataset over the
/// named variables. Quantization bounds are the global per-variable min/max
/// across all members, so symbol ids are comparable between members.
pub fn symbolize_dataset(
    desc: &DatasetDescriptor,
    base: &Path,
    variables: &[String],
    levels: u16,
) -> Result<SymbolizedDataset> {
    if variables.is_empty() {
        return Err(Error::Parameter("no variables selected".into()));
    }
    let leaves = desc.leaf_members();
    if leaves.is_empty() {
        return Err(Error::Descriptor("descriptor has no members".into()));
    }
    let mut loaded: Vec<(String, Vec<Volume>)> = Vec::with_capacity(leaves.len());
    for leaf in &leaves {
        let mut vols = Vec::with_capacity(variables.len());
        for var in variables {
            vols.push(leaf.descriptor.load_variable(base, var)?);
        }
        loaded.push((leaf.label.clone(), vols));
    }
    let bounds: Vec<(f64, f64)> = (0..variables.len())
        .map(|v| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (_, vols) in &loaded {
                lo = lo.min(vols[v].min());
                hi = hi.max(vols[v].max());
            }
            (lo, hi)
        })
        .collect();
    let quantized: Vec<Vec<QuantizedVolume>> = loaded
        .iter()
        .map(|(_, vols)| {
            vols.iter()
                .enumerate()
                .map(|(v, vol)| quantize_with_bounds(vol, levels, bounds[v].0, bounds[v].1))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = loaded.iter().map(|(l, _)| l.clone()).collect();
    drop(loaded);
    let member_refs: Vec<Vec<&QuantizedVolume>> = quantized
        .iter()
        .map(|vols| vols.iter().collect())
        .collect();
    let member_slices: Vec<&[&QuantizedVolume]> =
        member_refs.iter().map(|v| v.as_slice()).collect();
    let (table, symbol_volumes) = symbolize_collection(&member_slices)?;
    Ok(SymbolizedDataset {
        table,
        members: labels.into_iter().zip(symbol_volumes).collect(),
        bounds,
        variables: variables.to_vec(),
    })
}
