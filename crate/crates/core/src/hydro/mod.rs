// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Stochastic field equations for the long-wavelength dynamics: the complex
//! Ginzburg–Landau Langevin equation, KPZ and linear phase dynamics, conserved
//! density diffusion, and the estimators used to read them out.
//!
//! All runs use Euler–Maruyama with a fixed step on a periodic hypercubic grid.
//! White noise of strength `2Δ δ(x−x')δ(t−t')` becomes an independent normal
//! increment of variance `2Δ dt / dx^d` per site and step.

mod cgle;
mod density;
mod estimators;
mod phase;

pub use cgle::{cgle_amplitude_exact, cgle_run, CGLEParams};
pub use density::{conserved_density_run, heat_kernel};
pub use estimators::{
    k_hat2, structure_factor, theta_q_correlator, width_growth, StructureFactor, ThetaQCorrelation,
    WidthGrowth,
};
pub use phase::{kpz_run, kpz_run_tilted, phase_diffusion_run, phase_diffusion_variance};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest magnitude a field may reach before a run is declared unstable.
pub const BLOWUP: f64 = 1e6;

/// Field values on a periodic `L^d` grid, first coordinate slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid<T> {
    d: usize,
    l: usize,
    dx: f64,
    pub data: Vec<T>,
}

impl<T: Clone> FieldGrid<T> {
    pub fn filled(d: usize, l: usize, dx: f64, value: T) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::param("d", "grids have dimension 1, 2 or 3"));
        }
        if l < 2 {
            return Err(Error::param("L", "need at least 2 sites per direction"));
        }
        if d == 3 && l > 64 {
            return Err(Error::param(
                "L",
                "three-dimensional grids are capped at 64 per side",
            ));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::param("dx", "must be positive"));
        }
        Ok(Self {
            d,
            l,
            dx,
            data: vec![value; l.pow(d as u32)],
        })
    }

    pub fn with_data(&self, data: Vec<T>) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a grid of {}",
                data.len(),
                self.data.len()
            )));
        }
        Ok(Self {
            d: self.d,
            l: self.l,
            dx: self.dx,
            data,
        })
    }
}

impl<T> FieldGrid<T> {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.l
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Index stride of axis `a`.
    pub fn stride(&self, axis: usize) -> usize {
        self.l.pow((self.d - 1 - axis) as u32)
    }

    /// Site coordinates of a flat index.
    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut c = vec![0; self.d];
        for a in (0..self.d).rev() {
            c[a] = index % self.l;
            index /= self.l;
        }
        c
    }

    /// Neighbour of `index` one step forward (`+1`) or backward (`−1`) along
    /// `axis`, periodic.
    #[inline]
    pub fn neighbor(&self, index: usize, axis: usize, forward: bool) -> usize {
        let s = self.stride(axis);
        let x = (index / s) % self.l;
        if forward {
            if x + 1 == self.l {
                index + s - self.l * s
            } else {
                index + s
            }
        } else if x == 0 {
            index + self.l * s - s
        } else {
            index - s
        }
    }

    /// Neighbour tables `(forward, backward)` per axis.
    pub(crate) fn neighbor_tables(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        (0..self.d)
            .map(|a| {
                let f = (0..self.len()).map(|i| self.neighbor(i, a, true)).collect();
                let b = (0..self.len())
                    .map(|i| self.neighbor(i, a, false))
                    .collect();
                (f, b)
            })
            .collect()
    }
}

impl FieldGrid<f64> {
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.len() as f64
    }

    /// Spatial variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

impl FieldGrid<Complex64> {
    pub fn mean_density(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.len() as f64
    }
}

/// Parameters of the phase and density equations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HydroParams {
    /// Diffusion constant D.
    pub diffusion: f64,
    /// KPZ nonlinearity λ.
    pub lambda: f64,
    /// Phase-noise strength Δ.
    pub delta: f64,
    /// Conserved-noise strength σ_n.
    pub sigma_n: f64,
    pub dt: f64,
}

impl HydroParams {
    pub fn validate(&self, grid_dx: f64, d: usize) -> Result<()> {
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(Error::param("D", "must be positive"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::param("lambda", "must be finite"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::param("Delta", "must be nonnegative"));
        }
        if !(self.sigma_n >= 0.0 && self.sigma_n.is_finite()) {
            return Err(Error::param("sigma_n", "must be nonnegative"));
        }
        let limit = grid_dx * grid_dx / (2.0 * d as f64 * self.diffusion);
        if !(self.dt > 0.0 && self.dt <= limit) {
            return Err(Error::StepSize(format!(
                "dt = {} must lie in (0, dx²/(2dD)] = (0, {limit}]",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Length of a run and how often to record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunControl {
    pub t_final: f64,
    /// Record every `stride` steps (and the initial state).
    pub stride: usize,
    pub seed: u64,
    /// Independent stream index, one per realization.
    pub stream: u64,
}

impl RunControl {
    pub fn new(t_final: f64, stride: usize, seed: u64) -> Self {
        Self {
            t_final,
            stride,
            seed,
            stream: 0,
        }
    }

    pub fn realization(&self, r: u64) -> Self {
        Self { stream: r, ..*self }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub(crate) fn steps(&self, dt: f64) -> Result<usize> {
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::param("T", "must be finite and nonnegative"));
        }
        Ok((self.t_final / dt).round() as usize)
    }
}

/// Recorded snapshots of a run.
#[derive(Clone, Debug)]
pub struct FieldTrajectory<T> {
    pub times: Vec<f64>,
    pub snapshots: Vec<FieldGrid<T>>,
}

impl<T> FieldTrajectory<T> {
    pub fn last(&self) -> &FieldGrid<T> {
        self.snapshots
            .last()
            .expect("trajectory holds the initial state")
    }
}

pub(crate) fn check_finite_field<I: Iterator<Item = f64>>(values: I, t: f64) -> Result<()> {
    for v in values {
        if !v.is_finite() || v.abs() > BLOWUP {
            return Err(Error::Instability(format!("field blew up at t = {t}")));
        }
    }
    Ok(())
}
