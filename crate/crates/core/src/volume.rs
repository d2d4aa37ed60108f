//! Volumetric grids of scalar values: raw file I/O and quantization.
//!
//! Raw volumes are headerless binary, x-fastest (x varies quickest, then y,
//! then z). Values are converted to `f64` on load regardless of the on-disk
//! type.

use std::fs;
use std::io::Write;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder as _, LittleEndian, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Grid dimensions. Linear voxel index is `x + nx * (y + ny * z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::Parameter(format!(
                "dimensions must be positive, got {nx}x{ny}x{nz}"
            )));
        }
        Ok(Dims { nx, ny, nz })
    }

    /// Total voxel count.
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny && z < self.nz);
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let x = idx % self.nx;
        let y = (idx / self.nx) % self.ny;
        let z = idx / (self.nx * self.ny);
        (x, y, z)
    }

    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        x < self.nx && y < self.ny && z < self.nz
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// On-disk scalar type of a raw volume file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Float32,
    Float64,
    Uint8,
    Uint16,
}

impl ValueKind {
    pub fn byte_size(&self) -> usize {
        match self {
            ValueKind::Float32 => 4,
            ValueKind::Float64 => 8,
            ValueKind::Uint8 => 1,
            ValueKind::Uint16 => 2,
        }
    }
}

/// Byte order of multi-byte on-disk values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ByteOrder {
    Little,
    Big,
}

/// A 3D grid of real scalars with cached extrema.
#[derive(Debug, Clone)]
pub struct Volume {
    dims: Dims,
    data: Vec<f64>,
    min: f64,
    max: f64,
}

impl Volume {
    pub fn new(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::Parameter(format!(
                "data length {} does not match dims {dims} ({} voxels)",
                data.len(),
                dims.len()
            )));
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &data {
            if !v.is_finite() {
                return Err(Error::Data("volume contains non-finite values".into()));
            }
            min = min.min(v);
            max = max.max(v);
        }
        Ok(Volume {
            dims,
            data,
            min,
            max,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// Voxel count `T`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// A volume discretized to integer levels in `[0, levels)`.
#[derive(Debug, Clone)]
pub struct QuantizedVolume {
    dims: Dims,
    levels: Vec<u16>,
    /// Number of quantization levels.
    level_count: u16,
}

impl QuantizedVolume {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn levels(&self) -> &[u16] {
        &self.levels
    }

    pub fn level_count(&self) -> u16 {
        self.level_count
    }

    /// Build directly from per-voxel levels. Every level must be `< level_count`.
    pub fn from_levels(dims: Dims, levels: Vec<u16>, level_count: u16) -> Result<Self> {
        if levels.len() != dims.len() {
            return Err(Error::Parameter(format!(
                "level data length {} does not match dims {dims}",
                levels.len()
            )));
        }
        if level_count == 0 {
            return Err(Error::Parameter("level count must be positive".into()));
        }
        if let Some(&bad) = levels.iter().find(|&&l| l >= level_count) {
            return Err(Error::Parameter(format!(
                "level {bad} out of range [0, {level_count})"
            )));
        }
        Ok(QuantizedVolume {
            dims,
            levels,
            level_count,
        })
    }
}

/// Discretize a volume into `levels` equal-width bins over `[lo, hi]`.
///
/// `level = floor((x - lo) / (hi - lo) * levels)`, with the top edge clamped
/// into the last bin. Values outside `[lo, hi]` clamp to the end bins. A
/// degenerate range (`hi == lo`) maps everything to level 0, in which case
/// `levels = 1` is permitted.
pub fn quantize_with_bounds(v: &Volume, levels: u16, lo: f64, hi: f64) -> Result<QuantizedVolume> {
    if levels == 0 {
        return Err(Error::Parameter("quantization level must be positive".into()));
    }
    if hi < lo {
        return Err(Error::Parameter(format!(
            "quantization bounds inverted: [{lo}, {hi}]"
        )));
    }
    if hi == lo {
        // Constant range: everything lands in level 0.
        return QuantizedVolume::from_levels(v.dims(), vec![0; v.len()], levels.max(1));
    }
    if levels < 2 {
        return Err(Error::Parameter(
            "quantization level must be >= 2 for a non-constant range".into(),
        ));
    }
    let span = hi - lo;
    let r = f64::from(levels);
    let top = levels - 1;
    let out = v
        .data()
        .iter()
        .map(|&x| {
            let t = (x - lo) / span * r;
            if t <= 0.0 {
                0
            } else if t >= f64::from(top) {
                // Covers x == hi landing exactly on r, plus out-of-range highs.
                (t as u16).min(top)
            } else {
                t as u16
            }
        })
        .collect();
    QuantizedVolume::from_levels(v.dims(), out, levels)
}

/// Discretize using the volume's own min/max as the bin range.
pub fn quantize(v: &Volume, levels: u16) -> Result<QuantizedVolume> {
    quantize_with_bounds(v, levels, v.min(), v.max())
}

/// Read a headerless raw volume file.
pub fn read_raw_volume(
    path: &Path,
    dims: Dims,
    kind: ValueKind,
    order: ByteOrder,
) -> Result<Volume> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = dims.len() * kind.byte_size();
    if bytes.len() != expected {
        return Err(Error::Descriptor(format!(
            "{} is {} bytes but dims {dims} with {kind:?} require {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let n = dims.len();
    let mut data = Vec::with_capacity(n);
    match (kind, order) {
        (ValueKind::Uint8, _) => data.extend(bytes.iter().map(|&b| f64::from(b))),
        (ValueKind::Uint16, ByteOrder::Little) => {
            data.extend(bytes.chunks_exact(2).map(|c| f64::from(LittleEndian::read_u16(c))))
        }
        (ValueKind::Uint16, ByteOrder::Big) => {
            data.extend(bytes.chunks_exact(2).map(|c| f64::from(BigEndian::read_u16(c))))
        }
        (ValueKind::Float32, ByteOrder::Little) => {
            data.extend(bytes.chunks_exact(4).map(|c| f64::from(LittleEndian::read_f32(c))))
        }
        (ValueKind::Float32, ByteOrder::Big) => {
            data.extend(bytes.chunks_exact(4).map(|c| f64::from(BigEndian::read_f32(c))))
        }
        (ValueKind::Float64, ByteOrder::Little) => {
            data.extend(bytes.chunks_exact(8).map(LittleEndian::read_f64))
        }
        (ValueKind::Float64, ByteOrder::Big) => {
            data.extend(bytes.chunks_exact(8).map(BigEndian::read_f64))
        }
    }
    Volume::new(dims, data)
}

/// Write a volume as little-endian float32, x-fastest.
pub fn write_raw_f32(path: &Path, v: &Volume) -> Result<()> {
    let mut buf = Vec::with_capacity(v.len() * 4);
    for &x in v.data() {
        buf.write_f32::<LittleEndian>(x as f32)
            .expect("vec write cannot fail");
    }
    write_atomic(path, &buf)
}

/// Write raw little-endian u16 data (used for label volumes).
pub fn write_raw_u16(path: &Path, values: &[u16]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 2);
    for &x in values {
        buf.write_u16::<LittleEndian>(x).expect("vec write cannot fail");
    }
    write_atomic(path, &buf)
}

/// Write raw little-endian u32 data (used for exported symbol grids).
pub fn write_raw_u32(path: &Path, values: &[u32]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &x in values {
        buf.write_u32::<LittleEndian>(x).expect("vec write cannot fail");
    }
    write_atomic(path, &buf)
}

/// Write via a temp file + rename so partially written outputs never appear.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    let _ = dir; // directory fsync is best-effort on some platforms; skip
    Ok(())
}
