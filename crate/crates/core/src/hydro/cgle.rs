// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_finite_field, FieldGrid, FieldTrajectory, RunControl};
use crate::error::{Error, Result};

/// Couplings of `i∂ₜψ = [−(K_c − iK_d)∇² + r_c − ir_d + (g_c − ig_d)|ψ|²]ψ + ξ`
/// with `⟨ξ ξ*⟩ = 2γ δ(x−x') δ(t−t')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CGLEParams {
    pub k_c: f64,
    pub k_d: f64,
    pub r_c: f64,
    pub r_d: f64,
    pub g_c: f64,
    pub g_d: f64,
    pub gamma: f64,
    pub dt: f64,
}

impl CGLEParams {
    /// `K_d ≥ 0`, `g_d > 0`, `γ ≥ 0` (zero allowed for deterministic runs)
    /// and an explicit-step bound on the kinetic terms.
    pub fn validate(&self, dx: f64, d: usize) -> Result<()> {
        for (name, v) in [
            ("K_c", self.k_c),
            ("K_d", self.k_d),
            ("r_c", self.r_c),
            ("r_d", self.r_d),
            ("g_c", self.g_c),
            ("g_d", self.g_d),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.k_d < 0.0 {
            return Err(Error::param("K_d", "must be nonnegative"));
        }
        if self.g_d <= 0.0 {
            return Err(Error::param(
                "g_d",
                "must be positive for a bounded amplitude",
            ));
        }
        if self.gamma < 0.0 {
            return Err(Error::param("gamma", "must be nonnegative"));
        }
        let kin = 2.0 * d as f64 * (self.k_c.abs() + self.k_d) / (dx * dx);
        if !(self.dt > 0.0 && self.dt * kin <= 0.5) {
            return Err(Error::StepSize(format!(
                "dt = {} too large for the kinetic terms",
                self.dt
            )));
        }
        Ok(())
    }

    /// Mean-field amplitude `ρ₀ = −r_d/g_d` of the broken phase.
    pub fn rho0(&self) -> f64 {
        -self.r_d / self.g_d
    }
}

/// Euler–Maruyama integration of the complex Ginzburg–Landau Langevin
/// equation from `init`.
pub fn cgle_run(
    params: &CGLEParams,
    init: &FieldGrid<Complex64>,
    control: &RunControl,
) -> Result<FieldTrajectory<Complex64>> {
    let (d, dx) = (init.dimension(), init.dx());
    params.validate(dx, d)?;
    let steps = control.steps(params.dt)?;
    let dt = params.dt;
    let stride = control.stride.max(1);
    let tables = init.neighbor_tables();
    let i = Complex64::new(0.0, 1.0);
    let kin = Complex64::new(params.k_c, -params.k_d) / (dx * dx);
    let lin = Complex64::new(params.r_c, -params.r_d);
    let nl = Complex64::new(params.g_c, -params.g_d);
    // Complex normal with E|z|² = 1 scaled to variance 2γ dt / dx^d.
    let amp =
        (2.0 * params.gamma * dt / dx.powi(d as i32)).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
    let mut rng = control.rng();
    let mut psi = init.data.clone();
    let mut next = psi.clone();
    let mut times = vec![0.0];
    let mut snaps = vec![init.clone()];
    for step in 1..=steps {
        for x in 0..psi.len() {
            let mut lap = -2.0 * d as f64 * psi[x];
            for (f, b) in &tables {
                lap += psi[f[x]] + psi[b[x]];
            }
            let drift = -kin * lap + lin * psi[x] + nl * psi[x].norm_sqr() * psi[x];
            let mut dpsi = -i * drift * dt;
            if amp > 0.0 {
                let (a, b): (f64, f64) = (
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                );
                dpsi -= i * Complex64::new(a, b) * amp;
            }
            next[x] = psi[x] + dpsi;
        }
        std::mem::swap(&mut psi, &mut next);
        let t = step as f64 * dt;
        if step % stride == 0 || step == steps {
            check_finite_field(psi.iter().map(|v| v.norm()), t)?;
            times.push(t);
            snaps.push(init.with_data(psi.clone())?);
        }
    }
    Ok(FieldTrajectory {
        times,
        snapshots: snaps,
    })
}

/// Noise-free uniform amplitude `|ψ(t)|²` for `K = g_c = r_c = 0`:
/// `ρ' = −2(r_d + g_d ρ)ρ`, a logistic equation.
pub fn cgle_amplitude_exact(r_d: f64, g_d: f64, rho_init: f64, t: f64) -> f64 {
    let a = -2.0 * r_d;
    let b = 2.0 * g_d;
    if a.abs() < 1e-300 {
        return rho_init / (1.0 + b * rho_init * t);
    }
    let e = (a * t).exp();
    a * rho_init * e / (a + b * rho_init * (e - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(r_d: f64, gamma: f64) -> CGLEParams {
        CGLEParams {
            k_c: 0.5,
            k_d: 1.0,
            r_c: 0.0,
            r_d,
            g_c: 0.3,
            g_d: 1.0,
            gamma,
            dt: 0.01,
        }
    }

    #[test]
    fn noise_free_amplitude_matches_logistic_solution() {
        let p = CGLEParams {
            k_c: 0.0,
            k_d: 0.0,
            r_c: 0.0,
            r_d: -0.8,
            g_c: 0.0,
            g_d: 2.0,
            gamma: 0.0,
            dt: 1e-5,
        };
        let init = FieldGrid::filled(1, 4, 1.0, Complex64::new(0.05, 0.02)).unwrap();
        let traj = cgle_run(&p, &init, &RunControl::new(8.0, 20_000, 1)).unwrap();
        let rho_init = init.data[0].norm_sqr();
        for (t, s) in traj.times.iter().zip(&traj.snapshots) {
            let want = cgle_amplitude_exact(p.r_d, p.g_d, rho_init, *t);
            assert!((s.data[0].norm_sqr() - want).abs() < 1e-4, "t={t}");
        }
        assert!((traj.last().data[0].norm_sqr() - p.rho0()).abs() < 1e-2);
    }

    #[test]
    fn symmetric_phase_has_small_density() {
        let init = FieldGrid::filled(1, 64, 1.0, Complex64::new(0.5, 0.0)).unwrap();
        let traj = cgle_run(&params(1.0, 0.001), &init, &RunControl::new(30.0, 100, 3)).unwrap();
        let late: f64 = traj.snapshots[traj.snapshots.len() / 2..]
            .iter()
            .map(|s| s.mean_density())
            .sum::<f64>()
            / (traj.snapshots.len() - traj.snapshots.len() / 2) as f64;
        assert!(late < 0.01, "{late}");
    }

    #[test]
    fn broken_phase_reaches_rho0() {
        let init = FieldGrid::filled(2, 16, 1.0, Complex64::new(0.1, 0.0)).unwrap();
        let p = params(-0.5, 1e-6);
        let traj = cgle_run(&p, &init, &RunControl::new(40.0, 400, 5)).unwrap();
        assert!((traj.last().mean_density() - p.rho0()).abs() < 1e-3);
    }

    #[test]
    fn determinism_and_validation() {
        let init = FieldGrid::filled(1, 16, 1.0, Complex64::new(0.1, 0.0)).unwrap();
        let c = RunControl::new(1.0, 10, 42);
        let a = cgle_run(&params(0.2, 0.1), &init, &c).unwrap();
        let b = cgle_run(&params(0.2, 0.1), &init, &c).unwrap();
        assert_eq!(a.last(), b.last());
        let mut bad = params(0.2, 0.1);
        bad.g_d = 0.0;
        assert!(cgle_run(&bad, &init, &c).is_err());
        let mut unstable = params(-5.0, 0.0);
        unstable.dt = 0.09;
        unstable.g_d = 1e-6;
        assert!(cgle_run(&unstable, &init, &RunControl::new(200.0, 10, 1)).is_err());
    }
}
