//! Saturation maps, the deadzone and the generalized sector condition.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::grid::{sup_norm, Grid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SatKind {
    ComponentWise,
    NormWise,
    PointWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    pub kind: SatKind,
    pub level: f64,
}

impl Saturation {
    pub fn new(kind: SatKind, level: f64) -> Result<Self> {
        if !(level > 0.0) {
            return Err(Error::InvalidInput(format!(
                "saturation level must be positive, got {level}"
            )));
        }
        Ok(Self { kind, level })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self.kind {
            SatKind::ComponentWise | SatKind::PointWise => sat(v, self.level),
            SatKind::NormWise => sat_norm(v, self.level),
        }
    }
}

#[inline]
pub fn sat_scalar(x: f64, level: f64) -> f64 {
    if x > level {
        level
    } else if x < -level {
        -level
    } else {
        x
    }
}

pub fn sat(v: &[f64], level: f64) -> Vec<f64> {
    v.iter().map(|x| sat_scalar(*x, level)).collect()
}

/// `φ(v) = sat(v) − v`.
pub fn deadzone(v: &[f64], level: f64) -> Vec<f64> {
    v.iter().map(|x| sat_scalar(*x, level) - x).collect()
}

pub fn sat_norm(v: &[f64], level: f64) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= level {
        v.to_vec()
    } else {
        v.iter().map(|x| level * x / norm).collect()
    }
}

pub fn sat_pointwise(f: &[f64], level: f64) -> Vec<f64> {
    sat(f, level)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SectorOutcome {
    /// `φ(Kz)ᵀD(φ(Kz) + Cz)`, nonpositive.
    Value(f64),
    /// `|((K − C)z)_index| > ℓ`; the lemma does not apply.
    PreconditionViolated { index: usize, value: f64 },
}

/// Evaluates the generalized sector inequality at `z`.
pub fn sector_check(z: &[f64], k: &DMatrix<f64>, c: &DMatrix<f64>, d: &[f64], level: f64) -> Result<SectorOutcome> {
    let n = z.len();
    let m = d.len();
    if k.shape() != (m, n) || c.shape() != (m, n) {
        return Err(Error::Dimension(format!(
            "K {:?} and C {:?} must both be {m}x{n}",
            k.shape(),
            c.shape()
        )));
    }
    if let Some(j) = d.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput(format!("D entry {} is not positive", j + 1)));
    }
    let zv = nalgebra::DVector::from_column_slice(z);
    let kz = k * &zv;
    let cz = c * &zv;
    for j in 0..m {
        let r = kz[j] - cz[j];
        if r.abs() > level {
            return Ok(SectorOutcome::PreconditionViolated { index: j, value: r });
        }
    }
    let phi = deadzone(kz.as_slice(), level);
    let mut value = 0.0;
    let mut scale = 0.0;
    for j in 0..m {
        let term = phi[j] * d[j] * (phi[j] + cz[j]);
        value += term;
        scale += (phi[j] * d[j]).abs() * (phi[j].abs() + cz[j].abs());
    }
    if value > 1e-12 * scale.max(1.0) {
        return Err(Error::Numeric(format!("sector inequality violated: value {value}")));
    }
    Ok(SectorOutcome::Value(value))
}

/// `Δ(b, k) = b·sat(k) − sat_∞(b·k)`.
pub fn delta(b: &[f64], k: f64, level: f64) -> Vec<f64> {
    let sk = sat_scalar(k, level);
    b.iter().map(|bi| bi * sk - sat_scalar(bi * k, level)).collect()
}

/// Pointwise bound `ℓ(1 + |r|)` on `|r·sat(k) − sat(r·k)|`.
pub fn delta_bound_pointwise(r: f64, level: f64) -> f64 {
    level * (1.0 + r.abs())
}

/// `ℓ‖1 + |b|‖₂`.
pub fn delta_bound_l2(grid: &Grid, b: &[f64], level: f64) -> f64 {
    let f: Vec<f64> = b.iter().map(|v| 1.0 + v.abs()).collect();
    level * grid.l2_norm(&f)
}

/// `ℓ‖χ + |bχ|‖₂` with `χ` the indicator of `{|k·b(x)| > ℓ}` (or everything
/// when `|k| > ℓ`).
pub fn delta_bound_indicator(grid: &Grid, b: &[f64], k: f64, level: f64) -> f64 {
    let f: Vec<f64> = b
        .iter()
        .map(|v| {
            let chi = if k.abs() > level || (k * v).abs() > level {
                1.0
            } else {
                0.0
            };
            chi * (1.0 + v.abs())
        })
        .collect();
    level * grid.l2_norm(&f)
}

/// `ℓ(1 + ‖b‖_∞)`.
pub fn delta_bound_sup(b: &[f64], level: f64) -> f64 {
    level * (1.0 + sup_norm(b))
}
