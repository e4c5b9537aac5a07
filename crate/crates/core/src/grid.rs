//! Uniform periodic 1D grid shared by the solvers.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Periodic spatial grid plus the solver time step. Positions are in
/// units of `1/k_p`, times in units of `1/omega_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub dt: f64,
    /// Width of the absorbing sponge at each domain edge (0 disables it).
    #[serde(default)]
    pub sponge_width: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, dt: f64) -> Result<Self> {
        let g = Grid {
            x_min,
            x_max,
            n_points,
            dt,
            sponge_width: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_sponge(mut self, width: f64) -> Self {
        self.sponge_width = width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_points.is_power_of_two() || self.n_points < 8 {
            return Err(CoreError::Grid(format!(
                "n_points = {} must be a power of two (>= 8)",
                self.n_points
            )));
        }
        if !(self.x_max > self.x_min) {
            return Err(CoreError::Grid("x_max must exceed x_min".into()));
        }
        if !(self.dt > 0.0) {
            return Err(CoreError::Grid(format!("dt = {} must be positive", self.dt)));
        }
        if self.sponge_width < 0.0 || 2.0 * self.sponge_width > self.length() {
            return Err(CoreError::Grid("sponge wider than the domain".into()));
        }
        Ok(())
    }

    /// Reject grids too coarse for the largest envelope wave vector a
    /// scenario expects to populate (Nyquist with a 4x margin: 8 points
    /// per shortest wavelength).
    pub fn validate_resolution(&self, k_max_of_interest: f64) -> Result<()> {
        let limit = 2.0 * std::f64::consts::PI / (8.0 * k_max_of_interest);
        if self.dx() > limit {
            return Err(CoreError::Grid(format!(
                "dx = {:.4} exceeds 2 pi / (8 k_max) = {:.4}",
                self.dx(),
                limit
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.x(i))
    }

    /// FFT wave numbers in the frame co-rotating with the forward carrier
    /// (the physical lab wave vector is `k_p + k_tilde`).
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * std::f64::consts::PI / self.length();
        (0..n)
            .map(|i| {
                if i <= n / 2 - 1 {
                    i as f64 * dk
                } else {
                    (i as f64 - n as f64) * dk
                }
            })
            .collect()
    }
}
