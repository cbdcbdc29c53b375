// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use super::{check_finite_field, FieldGrid, FieldTrajectory, HydroParams, RunControl};

/// Conserved density `∂ₜu = D∇²u + ∇·ζ` in flux form. Each bond carries the
/// diffusive current plus a noise current of variance `2σ_n dt / dx^d` per
/// step, and every site changes by the difference of its incoming and outgoing
/// bond currents, so `Σu` is conserved up to rounding.
pub fn conserved_density_run(
    params: &HydroParams,
    init: &FieldGrid<f64>,
    control: &RunControl,
) -> crate::error::Result<FieldTrajectory<f64>> {
    let (d, dx) = (init.dimension(), init.dx());
    params.validate(dx, d)?;
    let dt = params.dt;
    let steps = control.steps(dt)?;
    let stride = control.stride.max(1);
    let tables = init.neighbor_tables();
    let n = init.len();
    let amp = (2.0 * params.sigma_n * dt / dx.powi(d as i32)).sqrt();
    let mut rng = control.rng();
    let mut u = init.data.clone();
    // Time-integrated current on the bond from x to its forward neighbour.
    let mut flux = vec![0.0; n * d];
    let mut times = vec![0.0];
    let mut snaps = vec![init.clone()];
    for step in 1..=steps {
        for (a, (f, _)) in tables.iter().enumerate() {
            for x in 0..n {
                let mut j = -params.diffusion * (u[f[x]] - u[x]) / dx * dt;
                if amp > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    j += amp * z;
                }
                flux[a * n + x] = j;
            }
        }
        for (a, (_, b)) in tables.iter().enumerate() {
            for x in 0..n {
                u[x] += (flux[a * n + b[x]] - flux[a * n + x]) / dx;
            }
        }
        let t = step as f64 * dt;
        if step % stride == 0 || step == steps {
            check_finite_field(u.iter().copied(), t)?;
            times.push(t);
            snaps.push(init.with_data(u.clone())?);
        }
    }
    Ok(FieldTrajectory {
        times,
        snapshots: snaps,
    })
}

/// Periodic heat kernel `Σ_images (4πDt)^{−d/2} exp(−|x|²/4Dt)` on a box of
/// side `length`, evaluated at displacement `x`.
pub fn heat_kernel(x: &[f64], diffusion: f64, t: f64, length: f64) -> f64 {
    let d = x.len() as i32;
    let four_dt = 4.0 * diffusion * t;
    let mut total = 1.0;
    for &xi in x {
        let mut s = 0.0;
        for m in -4i32..=4 {
            let y = xi + m as f64 * length;
            s += (-y * y / four_dt).exp();
        }
        total *= s;
    }
    total / (PI * four_dt).powf(d as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_bump_relaxes_to_heat_kernel() {
        for (d, l) in [(1usize, 128usize), (2, 64)] {
            let dx = 1.0;
            let diffusion = 0.8;
            let mut init = FieldGrid::filled(d, l, dx, 0.0).unwrap();
            let centre: usize = (0..d).map(|a| (l / 2) * init.stride(a)).sum();
            init.data[centre] = 1.0 / dx.powi(d as i32);
            let width = l as f64 / 8.0;
            let t = width * width / (4.0 * diffusion);
            let params = HydroParams {
                diffusion,
                lambda: 0.0,
                delta: 0.0,
                sigma_n: 0.0,
                dt: 0.1,
            };
            let traj =
                conserved_density_run(&params, &init, &RunControl::new(t, 1_000_000, 0)).unwrap();
            let last = traj.last();
            let (mut err, mut norm) = (0.0, 0.0);
            for (i, v) in last.data.iter().enumerate() {
                let x: Vec<f64> = last
                    .coords(i)
                    .iter()
                    .map(|&c| (c as f64 - (l / 2) as f64) * dx)
                    .collect();
                let want = heat_kernel(&x, diffusion, t, l as f64 * dx);
                err += (v - want).powi(2);
                norm += want * want;
            }
            let rel = (err / norm).sqrt();
            assert!(rel < 0.02, "d={d}: {rel}");
        }
    }

    #[test]
    fn total_is_conserved_with_noise() {
        let init = FieldGrid::filled(2, 16, 1.0, 0.25).unwrap();
        let params = HydroParams {
            diffusion: 1.0,
            lambda: 0.0,
            delta: 0.0,
            sigma_n: 2.0,
            dt: 0.1,
        };
        let traj = conserved_density_run(&params, &init, &RunControl::new(50.0, 10, 9)).unwrap();
        let t0 = traj.snapshots[0].total();
        for s in &traj.snapshots {
            assert!((s.total() - t0).abs() < 1e-10);
        }
        assert!(traj.last().variance() > 0.1);
    }
}
