//! Uniform grids on `[0, L]` and composite Simpson quadrature.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub length: f64,
    pub points: usize,
}

impl Grid {
    /// Builds a grid, bumping an even point count by one so that Simpson's
    /// rule applies.
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidInput(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if points < 3 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 3 points, got {points}"
            )));
        }
        let points = if points.is_multiple_of(2) { points + 1 } else { points };
        Ok(Self { length, points })
    }

    pub fn step(&self) -> f64 {
        self.length / (self.points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.length
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.points).map(|i| f(self.x(i))).collect()
    }

    /// Composite Simpson weights (1, 4, 2, 4, ..., 4, 1) · h/3.
    pub fn simpson_weights(&self) -> Vec<f64> {
        let h = self.step();
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                let w = if i == 0 || i == last {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * h / 3.0
            })
            .collect()
    }

    pub fn check(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.points {
            return Err(Error::IncompatibleGrid {
                expected: self.points,
                got: samples.len(),
            });
        }
        Ok(())
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.points);
        self.simpson_weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.points);
        debug_assert_eq!(g.len(), self.points);
        self.simpson_weights()
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).max(0.0).sqrt()
    }

    /// Linear interpolation of samples given on `other` onto this grid.
    pub fn resample(&self, other: &Grid, samples: &[f64]) -> Result<Vec<f64>> {
        other.check(samples)?;
        if (other.length - self.length).abs() > 1e-12 * self.length {
            return Err(Error::InvalidInput(format!(
                "cannot resample from domain length {} to {}",
                other.length, self.length
            )));
        }
        if other.points == self.points {
            return Ok(samples.to_vec());
        }
        let h = other.step();
        Ok(self.sample(|x| {
            let s = (x / h).clamp(0.0, (other.points - 1) as f64);
            let i = (s.floor() as usize).min(other.points - 2);
            let t = s - i as f64;
            samples[i] * (1.0 - t) + samples[i + 1] * t
        }))
    }
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
