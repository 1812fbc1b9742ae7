use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};

/// Uniform grid on one period `[-pi, pi)` with an even number of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n_points: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < Self::MIN_POINTS {
            return Err(MuskatError::InvalidGrid(format!(
                "n_points = {n_points} is below the minimum of {}",
                Self::MIN_POINTS
            )));
        }
        if n_points % 2 != 0 {
            return Err(MuskatError::InvalidGrid(format!(
                "n_points = {n_points} must be even"
            )));
        }
        Ok(Self { n_points })
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        -PI + self.spacing() * j as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Highest representable mode, `n_points / 2`.
    #[inline]
    pub fn nyquist(&self) -> usize {
        self.n_points / 2
    }
}
