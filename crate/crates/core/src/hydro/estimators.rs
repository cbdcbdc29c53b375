// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{FieldGrid, FieldTrajectory};
use crate::error::{Error, Result};

/// Lattice Laplacian symbol `Σ_a (2 − 2cos k_a)/dx²` of the mode with integer
/// wave numbers `m` (`k_a = 2πm_a/L`).
pub fn k_hat2(m: &[usize], l: usize, dx: f64) -> f64 {
    m.iter()
        .map(|&ma| 2.0 - 2.0 * (2.0 * PI * ma as f64 / l as f64).cos())
        .sum::<f64>()
        / (dx * dx)
}

fn fft_power(grid: &FieldGrid<f64>, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let (d, l) = (grid.dimension(), grid.side());
    let fft = planner.plan_fft_forward(l);
    let mut buf: Vec<Complex64> = grid.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut line = vec![Complex64::new(0.0, 0.0); l];
    for a in 0..d {
        let s = grid.stride(a);
        for start in 0..buf.len() {
            if !(start / s).is_multiple_of(l) {
                continue;
            }
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = buf[start + i * s];
            }
            fft.process(&mut line);
            for (i, v) in line.iter().enumerate() {
                buf[start + i * s] = *v;
            }
        }
    }
    let scale = grid.dx().powi(d as i32) / grid.len() as f64;
    buf.iter().map(|v| v.norm_sqr() * scale).collect()
}

/// Time- and realization-averaged `S(k) = (dx^d/N) |Σ_x f_x e^{−ik·x}|²`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureFactor {
    pub d: usize,
    pub l: usize,
    pub dx: f64,
    /// Indexed like the grid: flat index ↔ integer wave numbers.
    pub values: Vec<f64>,
    /// Standard error from the scatter between realizations.
    pub errors: Vec<f64>,
    pub realizations: usize,
    pub snapshots: usize,
}

impl StructureFactor {
    /// Flat index of integer wave numbers `m`.
    pub fn index(&self, m: &[usize]) -> usize {
        m.iter().fold(0, |acc, &x| acc * self.l + (x % self.l))
    }

    pub fn at(&self, m: &[usize]) -> (f64, f64) {
        let i = self.index(m);
        (self.values[i], self.errors[i])
    }
}

/// Structure factor of snapshots with `t0 ≤ t ≤ t1`, averaged over time in
/// each trajectory and then over trajectories.
pub fn structure_factor(
    trajectories: &[FieldTrajectory<f64>],
    window: (f64, f64),
) -> Result<StructureFactor> {
    let first = trajectories
        .first()
        .and_then(|t| t.snapshots.first())
        .ok_or_else(|| Error::param("trajectories", "no snapshots"))?;
    let (d, l, dx, n) = (first.dimension(), first.side(), first.dx(), first.len());
    let mut planner = FftPlanner::new();
    let mut per_real = Vec::with_capacity(trajectories.len());
    let mut count = 0;
    for traj in trajectories {
        let mut acc = vec![0.0; n];
        let mut k = 0;
        for (t, s) in traj.times.iter().zip(&traj.snapshots) {
            if *t < window.0 || *t > window.1 {
                continue;
            }
            if s.len() != n {
                return Err(Error::DimensionMismatch(
                    "snapshots of different sizes".into(),
                ));
            }
            for (a, p) in acc.iter_mut().zip(fft_power(s, &mut planner)) {
                *a += p;
            }
            k += 1;
        }
        if k == 0 {
            return Err(Error::param(
                "window",
                "no snapshot inside the stationary window",
            ));
        }
        count += k;
        per_real.push(acc.into_iter().map(|a| a / k as f64).collect::<Vec<f64>>());
    }
    let r = per_real.len() as f64;
    let mut values = vec![0.0; n];
    let mut errors = vec![0.0; n];
    for i in 0..n {
        let mean = per_real.iter().map(|v| v[i]).sum::<f64>() / r;
        let var = if r > 1.0 {
            per_real.iter().map(|v| (v[i] - mean).powi(2)).sum::<f64>() / (r - 1.0)
        } else {
            0.0
        };
        values[i] = mean;
        errors[i] = (var / r).sqrt();
    }
    Ok(StructureFactor {
        d,
        l,
        dx,
        values,
        errors,
        realizations: per_real.len(),
        snapshots: count,
    })
}

/// Interface width `W(t) = √⟨spatial variance⟩` and the growth exponent
/// fitted on `ln W` against `ln t`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WidthGrowth {
    pub times: Vec<f64>,
    pub width: Vec<f64>,
    /// Least-squares slope over the fit window; `None` for a flat signal.
    pub beta: Option<f64>,
    pub flat: bool,
}

pub fn width_growth(
    trajectories: &[FieldTrajectory<f64>],
    fit_window: (f64, f64),
) -> Result<WidthGrowth> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::param("trajectories", "no trajectories"))?;
    let times = first.times.clone();
    let mut w2 = vec![0.0; times.len()];
    for traj in trajectories {
        if traj.times.len() != times.len() {
            return Err(Error::DimensionMismatch(
                "trajectories recorded at different times".into(),
            ));
        }
        for (acc, s) in w2.iter_mut().zip(&traj.snapshots) {
            *acc += s.variance();
        }
    }
    let width: Vec<f64> = w2
        .iter()
        .map(|v| (v / trajectories.len() as f64).sqrt())
        .collect();
    let spread = width.iter().cloned().fold(0.0, f64::max)
        - width.iter().cloned().fold(f64::INFINITY, f64::min);
    let flat = spread < 1e-12;
    let beta = if flat {
        None
    } else {
        let pts: Vec<(f64, f64)> = times
            .iter()
            .zip(&width)
            .filter(|(t, w)| **t >= fit_window.0 && **t <= fit_window.1 && **t > 0.0 && **w > 0.0)
            .map(|(t, w)| (t.ln(), w.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::param(
                "window",
                "fewer than two points in the fit window",
            ));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    };
    Ok(WidthGrowth {
        times,
        width,
        beta,
        flat,
    })
}

/// Equal-time Gaussian correlators of the conserved-density theory
/// `S = ∫ θ_q(∂ₜu − D∇²u) + iσ_n(∇θ_q)²` on an `L^d` lattice.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ThetaQCorrelation {
    /// `⟨e^{iθ_q(x)} e^{−iθ_q(0)}⟩ = exp(−½⟨(θ_q(x) − θ_q(0))²⟩)`.
    pub value: f64,
    /// `⟨(θ_q(x) − θ_q(0))²⟩`.
    pub phase_variance: f64,
    /// Equal-time `⟨|u_k|²⟩` at the smallest nonzero momentum.
    pub density_mode_variance: f64,
}

/// Per-mode equal-time `(⟨uu⟩, ⟨θ_qθ_q⟩)` from the frequency integral of
/// `i M⁻¹`, where `M` is the Hermitian kernel of the action at `(k, ω)`.
fn mode_correlators(diffusion: f64, sigma_n: f64, k2: f64) -> (f64, f64) {
    let rate = diffusion * k2;
    // ω = rate·tan φ maps the real line onto (−π/2, π/2).
    let nodes = 4000;
    let (mut uu, mut qq) = (0.0, 0.0);
    for j in 0..nodes {
        let phi = -0.5 * PI + (j as f64 + 0.5) * PI / nodes as f64;
        let omega = rate * phi.tan();
        let jac = rate / phi.cos().powi(2) * PI / nodes as f64;
        let a = Complex64::new(rate, -omega);
        let m = [
            [Complex64::new(0.0, 0.0), a.conj()],
            [a, Complex64::new(0.0, 2.0 * sigma_n * k2)],
        ];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let inv00 = m[1][1] / det;
        let inv11 = m[0][0] / det;
        let i = Complex64::new(0.0, 1.0);
        uu += (i * inv00).re * jac / (2.0 * PI);
        qq += (i * inv11).re * jac / (2.0 * PI);
    }
    (uu, qq)
}

/// Correlation of `e^{iθ_q}` at lattice separation `sep` (along the first
/// axis) from the stationary propagator of the quadratic theory.
pub fn theta_q_correlator(
    d: usize,
    l: usize,
    dx: f64,
    diffusion: f64,
    sigma_n: f64,
    sep: usize,
) -> Result<ThetaQCorrelation> {
    if !(1..=3).contains(&d) || l < 2 {
        return Err(Error::param("grid", "need d in 1..=3 and L ≥ 2"));
    }
    if !(diffusion > 0.0 && sigma_n >= 0.0) {
        return Err(Error::param("D", "need D > 0 and σ_n ≥ 0"));
    }
    let n = l.pow(d as u32);
    let mut g = 0.0;
    for idx in 1..n {
        let mut m = vec![0; d];
        let mut r = idx;
        for a in (0..d).rev() {
            m[a] = r % l;
            r /= l;
        }
        let k2 = k_hat2(&m, l, dx);
        let (_, qq) = mode_correlators(diffusion, sigma_n, k2);
        let kx = 2.0 * PI * m[0] as f64 / l as f64;
        g += (2.0 - 2.0 * (kx * sep as f64).cos()) * qq / (n as f64 * dx.powi(d as i32));
    }
    let mut m1 = vec![0; d];
    m1[0] = 1;
    let (uu, _) = mode_correlators(diffusion, sigma_n, k_hat2(&m1, l, dx));
    Ok(ThetaQCorrelation {
        value: (-0.5 * g).exp(),
        phase_variance: g,
        density_mode_variance: uu,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{
        conserved_density_run, phase_diffusion_run, phase_diffusion_variance, FieldGrid,
        HydroParams, RunControl,
    };
    use super::*;
    use rayon::prelude::*;

    #[test]
    fn fft_power_of_a_plane_wave() {
        let l = 16;
        let mut g = FieldGrid::filled(2, l, 1.0, 0.0).unwrap();
        for i in 0..g.len() {
            let c = g.coords(i);
            g.data[i] = (2.0 * PI * (3 * c[0] + c[1]) as f64 / l as f64).cos();
        }
        let sf = structure_factor(
            &[FieldTrajectory {
                times: vec![0.0],
                snapshots: vec![g],
            }],
            (0.0, 0.0),
        )
        .unwrap();
        // |FFT|² = (N/2)² at ±k, scaled by 1/N.
        assert!((sf.at(&[3, 1]).0 - 64.0).abs() < 1e-9);
        assert!((sf.at(&[13, 15]).0 - 64.0).abs() < 1e-9);
        assert!(sf.at(&[1, 1]).0 < 1e-20);
    }

    #[test]
    fn zero_noise_is_flat() {
        let g = FieldGrid::filled(1, 8, 1.0, 0.7).unwrap();
        let traj = FieldTrajectory {
            times: vec![0.0, 1.0, 2.0],
            snapshots: vec![g.clone(), g.clone(), g],
        };
        let w = width_growth(std::slice::from_ref(&traj), (0.5, 2.0)).unwrap();
        assert!(w.flat && w.beta.is_none());
        let sf = structure_factor(&[traj], (0.0, 2.0)).unwrap();
        assert!(sf.values[1..].iter().all(|&v| v < 1e-25));
    }

    #[test]
    fn theta_q_correlation_is_long_ranged() {
        for d in 1..=3 {
            let c = theta_q_correlator(d, 8, 1.0, 1.0, 0.5, 4).unwrap();
            assert!(c.value > 0.0);
            let far = theta_q_correlator(d, 16, 1.0, 1.0, 0.5, 8).unwrap();
            assert!((far.value - c.value).abs() < 0.01 * c.value);
        }
        let frozen = theta_q_correlator(1, 32, 1.0, 1.0, 0.0, 10).unwrap();
        assert!((frozen.value - 1.0).abs() < 1e-15);
        // ⟨|u_k|²⟩ = σ_n / D.
        let c = theta_q_correlator(1, 32, 1.0, 2.0, 0.5, 1).unwrap();
        assert!((c.density_mode_variance - 0.25).abs() < 1e-3);
    }

    #[test]
    fn edwards_wilkinson_width_grows_as_t_to_one_quarter() {
        let p = HydroParams {
            diffusion: 1.0,
            lambda: 0.0,
            delta: 1.0,
            sigma_n: 0.0,
            dt: 0.05,
        };
        let init = FieldGrid::filled(1, 512, 1.0, 0.0).unwrap();
        let control = RunControl::new(50.0, 20, 1);
        let trajs: Vec<_> = (0..200u64)
            .into_par_iter()
            .map(|r| phase_diffusion_run(&p, &init, &control.realization(r)).unwrap())
            .collect();
        let beta = width_growth(&trajs, (5.0, 50.0)).unwrap().beta.unwrap();
        assert!((beta - 0.25).abs() < 0.03, "{beta}");
    }

    #[test]
    fn conserved_noise_spectrum_is_flat() {
        let params = HydroParams {
            diffusion: 1.0,
            lambda: 0.0,
            delta: 0.0,
            sigma_n: 0.5,
            dt: 0.05,
        };
        let init = FieldGrid::filled(1, 32, 1.0, 0.0).unwrap();
        let control = RunControl::new(400.0, 40, 17);
        let trajs: Vec<_> = (0..40u64)
            .into_par_iter()
            .map(|r| conserved_density_run(&params, &init, &control.realization(r)).unwrap())
            .collect();
        let sf = structure_factor(&trajs, (200.0, 400.0)).unwrap();
        for m in [1usize, 4, 8, 16] {
            let a = params.diffusion * k_hat2(&[m], 32, 1.0) * params.dt;
            let want = params.sigma_n / params.diffusion / (1.0 - 0.5 * a);
            let (v, e) = sf.at(&[m]);
            assert!(
                (v - want).abs() < 4.0 * e + 0.05 * want,
                "m={m}: {v} ± {e} vs {want}"
            );
        }
    }

    #[test]
    fn doubling_diffusion_halves_phase_spectrum() {
        let init = FieldGrid::filled(1, 32, 1.0, 0.0).unwrap();
        let control = RunControl::new(600.0, 50, 5);
        let run = |diffusion: f64| {
            let p = HydroParams {
                diffusion,
                lambda: 0.0,
                delta: 0.5,
                sigma_n: 0.0,
                dt: 0.05,
            };
            let trajs: Vec<_> = (0..60u64)
                .into_par_iter()
                .map(|r| phase_diffusion_run(&p, &init, &control.realization(r)).unwrap())
                .collect();
            let sf = structure_factor(&trajs, (300.0, 600.0)).unwrap();
            let (v, e) = sf.at(&[2]);
            let want = phase_diffusion_variance(&p, k_hat2(&[2], 32, 1.0));
            assert!(
                (v - want).abs() < 4.0 * e + 0.05 * want,
                "{v} ± {e} vs {want}"
            );
            v
        };
        let ratio = run(1.0) / run(2.0);
        assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
    }
}
