//! Synthetic Arnold-Beltrami-Childress flow generator.
//!
//! Evaluates the unsteady ABC velocity field on a regular grid over a
//! periodic `[0, 2pi)` box (configurable per axis) and derives the velocity
//! magnitude field `s1 = ||v||`.

use std::f64::consts::PI;

use crate::error::Error;
use crate::volume::{Dims, Volume};
use crate::Result;

/// Which time-modulated amplitude appears in the second velocity component.
///
/// The flow's first component always carries the `A + 0.5 t sin(0.1 pi t)`
/// amplitude. `Faithful` keeps the second component's amplitude at
/// `A + 0.5 sin(0.1 pi t)` (no factor `t`); `Symmetric` applies the same
/// `0.5 t sin(0.1 pi t)` modulation to both components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbcVariant {
    #[default]
    Faithful,
    Symmetric,
}

/// Parameters of one ABC-flow evaluation.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct AbcParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t: f64,
    pub variant: AbcVariant,
    /// Half-open sampling range per axis; grid point i of n samples
    /// `start + (end - start) * i / n`.
    pub domain: [(f64, f64); 3],
}

impl AbcParams {
    /// Classic coefficients `A = sqrt(3), B = sqrt(2), C = 1` at time `t`.
    pub fn classic(t: f64) -> Self {
        AbcParams {
            a: 3f64.sqrt(),
            b: 2f64.sqrt(),
            c: 1.0,
            t,
            variant: AbcVariant::Faithful,
            domain: default_domain(),
        }
    }
}

pub fn default_domain() -> [(f64, f64); 3] {
    [(0.0, 2.0 * PI); 3]
}

/// `sin(pi * x)`, exact (returns 0.0) when `x` is an integer.
///
/// Computing `sin(PI * x)` directly leaves an O(1e-16) residue at integer
/// `x`, which would break the bit-identity of the field at time steps where
/// the modulation vanishes.
fn sin_pi(x: f64) -> f64 {
    let k = x.round();
    let r = x - k;
    let s = (PI * r).sin();
    if (k as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// The two time-modulated amplitudes used by the velocity components.
fn amplitudes(p: &AbcParams) -> (f64, f64) {
    let s = sin_pi(0.1 * p.t);
    let first = p.a + 0.5 * p.t * s;
    let second = match p.variant {
        AbcVariant::Faithful => p.a + 0.5 * s,
        AbcVariant::Symmetric => first,
    };
    (first, second)
}

/// Velocity at a single point.
pub fn velocity_at(p: &AbcParams, x: f64, y: f64, z: f64) -> [f64; 3] {
    let (a1, a2) = amplitudes(p);
    [
        a1 * z.sin() + p.c * y.cos(),
        p.b * x.sin() + a2 * z.cos(),
        p.c * y.sin() + p.b * x.cos(),
    ]
}

/// Evaluate the flow on a grid: returns `(vx, vy, vz, s1)` volumes, where
/// `s1` is the Euclidean norm of the velocity.
pub fn gen_abc_flow(p: &AbcParams, dims: Dims) -> Result<(Volume, Volume, Volume, Volume)> {
    validate_domain(p)?;
    let n = dims.len();
    let mut vx = Vec::with_capacity(n);
    let mut vy = Vec::with_capacity(n);
    let mut vz = Vec::with_capacity(n);
    let mut s1 = Vec::with_capacity(n);
    for_each_grid_point(p, dims, |x, y, z| {
        let v = velocity_at(p, x, y, z);
        vx.push(v[0]);
        vy.push(v[1]);
        vz.push(v[2]);
        s1.push((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
    });
    Ok((
        Volume::new(dims, vx)?,
        Volume::new(dims, vy)?,
        Volume::new(dims, vz)?,
        Volume::new(dims, s1)?,
    ))
}

/// Evaluate only the velocity-magnitude field `s1`.
///
/// Identical values to the fourth volume of [`gen_abc_flow`] without
/// materializing the component fields.
pub fn gen_abc_s1(p: &AbcParams, dims: Dims) -> Result<Volume> {
    validate_domain(p)?;
    let mut s1 = Vec::with_capacity(dims.len());
    for_each_grid_point(p, dims, |x, y, z| {
        let v = velocity_at(p, x, y, z);
        s1.push((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
    });
    Volume::new(dims, s1)
}

fn validate_domain(p: &AbcParams) -> Result<()> {
    for (lo, hi) in p.domain {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::Parameter(format!(
                "invalid axis range [{lo}, {hi})"
            )));
        }
    }
    Ok(())
}

fn for_each_grid_point(p: &AbcParams, dims: Dims, mut f: impl FnMut(f64, f64, f64)) {
    let axis = |range: (f64, f64), n: usize, i: usize| -> f64 {
        range.0 + (range.1 - range.0) * (i as f64) / (n as f64)
    };
    for iz in 0..dims.nz {
        let z = axis(p.domain[2], dims.nz, iz);
        for iy in 0..dims.ny {
            let y = axis(p.domain[1], dims.ny, iy);
            for ix in 0..dims.nx {
                let x = axis(p.domain[0], dims.nx, ix);
                f(x, y, z);
            }
        }
    }
}
