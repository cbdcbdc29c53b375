// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

use rand_distr::{Distribution, StandardNormal};

use super::{check_finite_field, FieldGrid, FieldTrajectory, HydroParams, RunControl};
use crate::error::{Error, Result};

/// KPZ phase dynamics `∂ₜθ = D∇²θ + (λ/2)(∇θ)² + η`. The Laplacian is the
/// centred stencil; `(∇θ)²` is the mean of the squared forward and backward
/// differences.
pub fn kpz_run(
    params: &HydroParams,
    init: &FieldGrid<f64>,
    control: &RunControl,
) -> Result<FieldTrajectory<f64>> {
    run(params, init, &vec![0.0; init.dimension()], control)
}

/// [`kpz_run`] with helical boundaries: `θ(x) = s·x + φ(x)` with periodic
/// `φ`. The trajectory records `φ`; the tilt enters every gradient.
pub fn kpz_run_tilted(
    params: &HydroParams,
    init: &FieldGrid<f64>,
    tilt: &[f64],
    control: &RunControl,
) -> Result<FieldTrajectory<f64>> {
    if tilt.len() != init.dimension() {
        return Err(Error::DimensionMismatch(
            "one tilt component per axis".into(),
        ));
    }
    run(params, init, tilt, control)
}

/// Linear phase diffusion `∂ₜθ = D∇²θ + η` (KPZ with λ = 0).
pub fn phase_diffusion_run(
    params: &HydroParams,
    init: &FieldGrid<f64>,
    control: &RunControl,
) -> Result<FieldTrajectory<f64>> {
    let p = HydroParams {
        lambda: 0.0,
        ..*params
    };
    run(&p, init, &vec![0.0; init.dimension()], control)
}

/// Stationary variance of a phase-diffusion mode with lattice symbol `k̂²`,
/// `Δ/(D k̂²)`, including the Euler factor `1/(1 − D k̂² dt/2)`.
pub fn phase_diffusion_variance(params: &HydroParams, k_hat2: f64) -> f64 {
    let a = params.diffusion * k_hat2 * params.dt;
    params.delta / (params.diffusion * k_hat2) / (1.0 - 0.5 * a)
}

fn run(
    params: &HydroParams,
    init: &FieldGrid<f64>,
    tilt: &[f64],
    control: &RunControl,
) -> Result<FieldTrajectory<f64>> {
    let (d, dx) = (init.dimension(), init.dx());
    params.validate(dx, d)?;
    let dt = params.dt;
    let steps = control.steps(dt)?;
    let stride = control.stride.max(1);
    let tables = init.neighbor_tables();
    let diff = params.diffusion / (dx * dx);
    let half_lambda = 0.5 * params.lambda;
    let amp = (2.0 * params.delta * dt / dx.powi(d as i32)).sqrt();
    let mut rng = control.rng();
    let mut theta = init.data.clone();
    let mut next = theta.clone();
    let mut times = vec![0.0];
    let mut snaps = vec![init.clone()];
    for step in 1..=steps {
        for x in 0..theta.len() {
            let t0 = theta[x];
            let mut lap = 0.0;
            let mut grad2 = 0.0;
            for (a, (f, b)) in tables.iter().enumerate() {
                let (tf, tb) = (theta[f[x]], theta[b[x]]);
                lap += tf + tb - 2.0 * t0;
                if half_lambda != 0.0 {
                    let gf = (tf - t0) / dx + tilt[a];
                    let gb = (t0 - tb) / dx + tilt[a];
                    grad2 += 0.5 * (gf * gf + gb * gb);
                }
            }
            let mut v = t0 + dt * (diff * lap + half_lambda * grad2);
            if amp > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                v += amp * z;
            }
            next[x] = v;
        }
        std::mem::swap(&mut theta, &mut next);
        let t = step as f64 * dt;
        if step % stride == 0 || step == steps {
            check_finite_field(theta.iter().copied(), t)?;
            times.push(t);
            snaps.push(init.with_data(theta.clone())?);
        }
    }
    Ok(FieldTrajectory {
        times,
        snapshots: snaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lambda: f64, delta: f64) -> HydroParams {
        HydroParams {
            diffusion: 1.0,
            lambda,
            delta,
            sigma_n: 0.0,
            dt: 0.05,
        }
    }

    #[test]
    fn noiseless_flat_start_stays_flat() {
        let init = FieldGrid::filled(2, 8, 1.0, 0.3).unwrap();
        let traj = kpz_run(&p(2.0, 0.0), &init, &RunControl::new(5.0, 10, 1)).unwrap();
        assert!(traj
            .snapshots
            .iter()
            .all(|s| s.data.iter().all(|&v| v == 0.3)));
    }

    #[test]
    fn step_size_is_checked() {
        let init = FieldGrid::filled(1, 8, 1.0, 0.0).unwrap();
        let mut q = p(0.0, 1.0);
        q.dt = 0.6;
        assert!(matches!(
            kpz_run(&q, &init, &RunControl::new(1.0, 1, 1)),
            Err(Error::StepSize(_))
        ));
    }

    #[test]
    fn zero_mode_is_a_random_walk() {
        // Var θ̄(t) = 2Δt / L^d.
        let init = FieldGrid::filled(1, 16, 1.0, 0.0).unwrap();
        let q = p(0.0, 0.5);
        let c = RunControl::new(4.0, 80, 11);
        let r = 400;
        let means: Vec<f64> = (0..r)
            .map(|i| {
                phase_diffusion_run(&q, &init, &c.realization(i))
                    .unwrap()
                    .last()
                    .mean()
            })
            .collect();
        let var = means.iter().map(|m| m * m).sum::<f64>() / r as f64;
        let want = 2.0 * 0.5 * 4.0 / 16.0;
        assert!((var / want - 1.0).abs() < 0.2, "{var} vs {want}");
    }

    #[test]
    fn tilt_shifts_growth_velocity() {
        // Deterministic flat interface with tilt s grows at exactly λs²/2.
        let init = FieldGrid::filled(1, 32, 1.0, 0.0).unwrap();
        let q = p(1.5, 0.0);
        let s = 0.4;
        let traj = kpz_run_tilted(&q, &init, &[s], &RunControl::new(2.0, 40, 1)).unwrap();
        let v = traj.last().mean() / 2.0;
        assert!((v - 1.5 * s * s / 2.0).abs() < 1e-12);
    }
}
