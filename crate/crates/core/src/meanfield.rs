// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Sublattice mean-field dynamics of the loss/gain model (I) and the
//! incoherent-hopping model (II): equations of motion, fixed points, linear
//! stability and Bose-surface families.
//!
//! Uniform states carry one value per sublattice and a sum over nearest
//! neighbours becomes `2d` times the opposite-sublattice value.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{on_bose_surface, Lattice, Momentum, Sublattice, BOSE_SURFACE_TOL};
use crate::linalg;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sublattice expectation values `⟨σ⁺⟩` and `⟨σᶻ⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub sa_plus: Complex64,
    pub sb_plus: Complex64,
    pub sa_z: f64,
    pub sb_z: f64,
}

impl MeanFieldState {
    /// `(Re σ_A⁺, Im σ_A⁺, Re σ_B⁺, Im σ_B⁺, σ_Aᶻ, σ_Bᶻ)`.
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.sa_plus.re,
            self.sa_plus.im,
            self.sb_plus.re,
            self.sb_plus.im,
            self.sa_z,
            self.sb_z,
        ]
    }

    pub fn from_array(x: &[f64; 6]) -> Self {
        Self {
            sa_plus: Complex64::new(x[0], x[1]),
            sb_plus: Complex64::new(x[2], x[3]),
            sa_z: x[4],
            sb_z: x[5],
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Filling `n = (σ_Aᶻ + σ_Bᶻ + 2) / 4`.
    pub fn filling(&self) -> f64 {
        (self.sa_z + self.sb_z + 2.0) / 4.0
    }

    /// `|σ⁺|² ≤ (1 − (σᶻ)²)/4 + 1e−9` on both sublattices.
    pub fn in_bloch_ball(&self) -> bool {
        let ok = |p: Complex64, z: f64| {
            z.abs() <= 1.0 + 1e-9 && p.norm_sqr() <= (1.0 - z * z) / 4.0 + 1e-9
        };
        ok(self.sa_plus, self.sa_z) && ok(self.sb_plus, self.sb_z)
    }

    /// Global phase rotation of both order parameters.
    pub fn rotate(&self, phi: f64) -> Self {
        let u = Complex64::from_polar(1.0, phi);
        Self {
            sa_plus: self.sa_plus * u,
            sb_plus: self.sb_plus * u,
            ..*self
        }
    }

    /// Phase gauge with `σ_B⁺` real and nonnegative.
    pub fn gauge_fixed(&self) -> Self {
        if self.sb_plus.norm() < 1e-300 {
            return *self;
        }
        self.rotate(-self.sb_plus.arg())
    }

    fn sub(&self, o: &Self) -> Self {
        let a = self.to_array();
        let b = o.to_array();
        let mut c = [0.0; 6];
        for i in 0..6 {
            c[i] = a[i] - b[i];
        }
        Self::from_array(&c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MFParams {
    pub j: f64,
    pub gamma: f64,
    pub gamma_z: f64,
    /// Spatial dimension; coordination number `2d`.
    pub d: usize,
    /// Target filling (model II).
    pub n: f64,
}

impl MFParams {
    pub fn new(j: f64, gamma: f64, d: usize) -> Self {
        Self {
            j,
            gamma,
            gamma_z: 0.0,
            d,
            n: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("J", self.j),
            ("Gamma", self.gamma),
            ("Gamma_z", self.gamma_z),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be finite and nonnegative"));
            }
        }
        if !(1..=3).contains(&self.d) {
            return Err(Error::param("d", "must be 1, 2 or 3"));
        }
        if !(0.0..=1.0).contains(&self.n) {
            return Err(Error::param("n", "must lie in [0, 1]"));
        }
        Ok(())
    }

    fn z(&self) -> f64 {
        2.0 * self.d as f64
    }
}

/// Mean-field right-hand side of model I (loss on A, gain on B).
pub fn rhs_model_i(s: &MeanFieldState, p: &MFParams) -> MeanFieldState {
    let (g, j, z) = (p.gamma, p.j, p.z());
    let (a, b) = (s.sa_plus, s.sb_plus);
    let da = -g * a - I * j * z * s.sa_z * b;
    let db = -g * b - I * j * z * s.sb_z * a;
    let cross_a = 2.0 * I * j * z * (a.conj() * b - a * b.conj());
    let cross_b = 2.0 * I * j * z * (b.conj() * a - b * a.conj());
    MeanFieldState {
        sa_plus: da,
        sb_plus: db,
        sa_z: -2.0 * g * (s.sa_z + 1.0) + cross_a.re,
        sb_z: 2.0 * g * (1.0 - s.sb_z) + cross_b.re,
    }
}

/// Mean-field right-hand side of model II, including `−4Γ_z σ±` damping
/// from `σᶻ` dephasing.
pub fn rhs_model_ii(s: &MeanFieldState, p: &MFParams) -> MeanFieldState {
    let (g, j, z) = (p.gamma, p.j, p.z());
    let (a, b) = (s.sa_plus, s.sb_plus);
    let da = z * (-0.5 * g * a * (1.0 - s.sb_z) - I * j * s.sa_z * b) - 4.0 * p.gamma_z * a;
    let db = z * (-0.5 * g * b * (1.0 + s.sa_z) - I * j * s.sb_z * a) - 4.0 * p.gamma_z * b;
    let cross = 2.0 * I * j * (a.conj() * b - a * b.conj());
    let flow = g * (s.sa_z + 1.0) * (s.sb_z - 1.0);
    MeanFieldState {
        sa_plus: da,
        sb_plus: db,
        sa_z: z * (flow + cross.re),
        sb_z: z * (-flow - cross.re),
    }
}

/// Site-resolved model II right-hand side on a lattice; `plus[i]`, `z[i]` are
/// `⟨σ_i⁺⟩`, `⟨σ_iᶻ⟩`.
pub fn rhs_model_ii_sites(
    lattice: &Lattice,
    plus: &[Complex64],
    z: &[f64],
    p: &MFParams,
) -> (Vec<Complex64>, Vec<f64>) {
    let n = lattice.site_count();
    let (g, j) = (p.gamma, p.j);
    let mut dp = vec![Complex64::new(0.0, 0.0); n];
    let mut dz = vec![0.0; n];
    for (a, b) in lattice.bonds() {
        dp[a] += -0.5 * g * plus[a] * (1.0 - z[b]) - I * j * z[a] * plus[b];
        dp[b] += -0.5 * g * plus[b] * (1.0 + z[a]) - I * j * z[b] * plus[a];
        let flow = g * (z[a] + 1.0) * (z[b] - 1.0);
        let cross = (2.0 * I * j * (plus[a].conj() * plus[b] - plus[a] * plus[b].conj())).re;
        dz[a] += flow + cross;
        dz[b] += -flow - cross;
    }
    for i in 0..n {
        dp[i] -= 4.0 * p.gamma_z * plus[i];
    }
    (dp, dz)
}

#[derive(Clone, Debug)]
pub struct MFTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
}

impl MFTrajectory {
    pub fn last(&self) -> &MeanFieldState {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Fixed-step RK4 integration of `rhs` from `init` up to `t_final`,
/// recording every `stride`-th step.
pub fn integrate<F>(
    rhs: F,
    init: &MeanFieldState,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<MFTrajectory>
where
    F: Fn(&MeanFieldState) -> MeanFieldState,
{
    if !(dt > 0.0 && dt.is_finite() && t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::param(
            "dt",
            "time step and final time must be positive",
        ));
    }
    let steps = (t_final / dt).round() as usize;
    let stride = stride.max(1);
    let axpy = |x: &[f64; 6], k: &[f64; 6], h: f64| -> MeanFieldState {
        let mut y = [0.0; 6];
        for i in 0..6 {
            y[i] = x[i] + h * k[i];
        }
        MeanFieldState::from_array(&y)
    };
    let mut x = init.to_array();
    let mut times = vec![0.0];
    let mut states = vec![*init];
    for step in 1..=steps {
        let s = MeanFieldState::from_array(&x);
        let k1 = rhs(&s).to_array();
        let k2 = rhs(&axpy(&x, &k1, 0.5 * dt)).to_array();
        let k3 = rhs(&axpy(&x, &k2, 0.5 * dt)).to_array();
        let k4 = rhs(&axpy(&x, &k3, dt)).to_array();
        for i in 0..6 {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return Err(Error::Instability(format!(
                "mean-field state diverged at t = {}",
                step as f64 * dt
            )));
        }
        if step % stride == 0 || step == steps {
            times.push(step as f64 * dt);
            states.push(MeanFieldState::from_array(&x));
        }
    }
    Ok(MFTrajectory { times, states })
}

/// Closed-form model I fixed point: the symmetric state for `2Jd ≤ Γ`,
/// otherwise `σ_Aᶻ = −Γ/2Jd`, `σ_Bᶻ = Γ/2Jd`, `σ_A⁺ = iσ_B⁺` with
/// `|σ_A⁺|² = (Γ/4Jd)(1 − Γ/2Jd)` and `σ_B⁺` real positive.
pub fn fixed_point_model_i(p: &MFParams) -> Result<MeanFieldState> {
    p.validate()?;
    let jd2 = 2.0 * p.j * p.d as f64;
    if jd2 <= p.gamma {
        return Ok(MeanFieldState {
            sa_plus: Complex64::new(0.0, 0.0),
            sb_plus: Complex64::new(0.0, 0.0),
            sa_z: -1.0,
            sb_z: 1.0,
        });
    }
    let r = p.gamma / jd2;
    let amp = (0.5 * r * (1.0 - r)).sqrt();
    Ok(MeanFieldState {
        sa_plus: Complex64::new(0.0, amp),
        sb_plus: Complex64::new(amp, 0.0),
        sa_z: -r,
        sb_z: r,
    })
}

/// Symmetric model II family member at filling `n ≤ 1/4`.
pub fn symmetric_model_ii(n: f64) -> MeanFieldState {
    MeanFieldState {
        sa_plus: Complex64::new(0.0, 0.0),
        sb_plus: Complex64::new(0.0, 0.0),
        sa_z: -1.0,
        sb_z: 4.0 * n - 1.0,
    }
}

/// Particle-hole image `σ⁺ ↔ σ⁻`, `σᶻ → −σᶻ`, `A ↔ B`.
pub fn particle_hole(s: &MeanFieldState) -> MeanFieldState {
    MeanFieldState {
        sa_plus: s.sb_plus.conj(),
        sb_plus: s.sa_plus.conj(),
        sa_z: -s.sb_z,
        sb_z: -s.sa_z,
    }
}

/// Model II fixed point at filling `p.n`. Below `1/4` the symmetric family
/// member is returned. Otherwise damped Gauss–Newton runs from eight seeds
/// spanning the relative phase of the order parameters; among converged roots
/// inside the Bloch ball the one with the largest `|σ_A⁺|` wins. Fillings
/// above `1/2` are mapped through particle-hole symmetry.
pub fn fixed_point_model_ii(p: &MFParams) -> Result<MeanFieldState> {
    p.validate()?;
    if p.n > 0.5 {
        let mut q = *p;
        q.n = 1.0 - p.n;
        return Ok(particle_hole(&fixed_point_model_ii(&q)?).gauge_fixed());
    }
    if p.n < 0.25 {
        return Ok(symmetric_model_ii(p.n));
    }
    let c = 4.0 * p.n - 2.0;
    let state_of = |x: &[f64; 4]| MeanFieldState {
        sa_plus: Complex64::new(x[0], x[1]),
        sb_plus: Complex64::new(x[2], 0.0),
        sa_z: x[3],
        sb_z: c - x[3],
    };
    let residual = |x: &[f64; 4]| -> [f64; 5] {
        let r = rhs_model_ii(&state_of(x), p);
        [
            r.sa_plus.re,
            r.sa_plus.im,
            r.sb_plus.re,
            r.sb_plus.im,
            r.sa_z,
        ]
    };
    let rnorm = |r: &[f64; 5]| r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut best: Option<MeanFieldState> = None;
    let mut best_res = f64::INFINITY;
    for k in 0..8 {
        let phi = k as f64 * std::f64::consts::FRAC_PI_4;
        let mut x = [
            0.3 * phi.cos(),
            0.3 * phi.sin(),
            0.3,
            -0.5 * (1.0 - c.abs().min(1.0)) - 0.25,
        ];
        let mut lambda: f64 = 1e-3;
        let mut r = residual(&x);
        for _ in 0..500 {
            let f = rnorm(&r);
            if f < 1e-14 {
                break;
            }
            let h = 1e-7;
            let mut jac = Mat::<f64>::zeros(9, 4);
            for col in 0..4 {
                let mut xp = x;
                let mut xm = x;
                xp[col] += h;
                xm[col] -= h;
                let (rp, rm) = (residual(&xp), residual(&xm));
                for row in 0..5 {
                    jac[(row, col)] = (rp[row] - rm[row]) / (2.0 * h);
                }
            }
            let mut accepted = false;
            for _ in 0..30 {
                for col in 0..4 {
                    for row in 5..9 {
                        jac[(row, col)] = if row - 5 == col { lambda.sqrt() } else { 0.0 };
                    }
                }
                let mut rhs = Mat::<f64>::zeros(9, 1);
                for row in 0..5 {
                    rhs[(row, 0)] = -r[row];
                }
                let delta = jac.qr().solve_lstsq(&rhs);
                let mut xn = x;
                for col in 0..4 {
                    xn[col] += delta[(col, 0)];
                }
                let rn = residual(&xn);
                if rnorm(&rn) < f {
                    x = xn;
                    r = rn;
                    lambda = (lambda * 0.3).max(1e-15);
                    accepted = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !accepted {
                break;
            }
        }
        let s = state_of(&x).gauge_fixed();
        let res = rhs_model_ii(&s, p).norm();
        best_res = best_res.min(res);
        if res <= 1e-10 && s.in_bloch_ball() {
            let better = match &best {
                None => true,
                Some(b) => s.sa_plus.norm() > b.sa_plus.norm() + 1e-9,
            };
            if better {
                best = Some(s);
            }
        }
    }
    best.ok_or(Error::RootFinder { residual: best_res })
}

#[derive(Clone, Debug)]
pub struct StabilityReport {
    /// Jacobian eigenvalues sorted by descending real part; for model II the
    /// conserved-filling direction is removed.
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvalue along the conserved filling direction (model II only).
    pub filling_mode: Option<f64>,
}

impl StabilityReport {
    pub fn max_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MFModel {
    I,
    II,
}

fn jacobian<F: Fn(&MeanFieldState) -> MeanFieldState>(
    rhs: &F,
    x0: &MeanFieldState,
) -> [[f64; 6]; 6] {
    let h = 1e-6;
    let base = x0.to_array();
    let mut jac = [[0.0; 6]; 6];
    for col in 0..6 {
        let mut xp = base;
        let mut xm = base;
        xp[col] += h;
        xm[col] -= h;
        let fp = rhs(&MeanFieldState::from_array(&xp)).to_array();
        let fm = rhs(&MeanFieldState::from_array(&xm)).to_array();
        for row in 0..6 {
            jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    jac
}

/// Linear stability of a fixed point from a central finite-difference
/// Jacobian (step 1e−6) over the six real coordinates.
pub fn stability(
    model: MFModel,
    fixed_point: &MeanFieldState,
    p: &MFParams,
) -> Result<StabilityReport> {
    p.validate()?;
    let jac = match model {
        MFModel::I => jacobian(&|s: &MeanFieldState| rhs_model_i(s, p), fixed_point),
        MFModel::II => jacobian(&|s: &MeanFieldState| rhs_model_ii(s, p), fixed_point),
    };
    let to_c = |rows: usize, f: &dyn Fn(usize, usize) -> f64| {
        ndarray::Array2::from_shape_fn((rows, rows), |(i, j)| Complex64::new(f(i, j), 0.0))
    };
    let sorted = |mut v: Vec<Complex64>| {
        v.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        v
    };
    match model {
        MFModel::I => Ok(StabilityReport {
            eigenvalues: sorted(linalg::eigvals(&to_c(6, &|i, j| jac[i][j]))?),
            filling_mode: None,
        }),
        MFModel::II => {
            // Coordinates on the constant-filling plane: (ReA, ImA, ReB, ImB, u)
            // with σ_Aᶻ = a + u and σ_Bᶻ = b − u.
            let embed = |j: usize| -> [f64; 6] {
                let mut e = [0.0; 6];
                if j < 4 {
                    e[j] = 1.0;
                } else {
                    e[4] = 1.0;
                    e[5] = -1.0;
                }
                e
            };
            let reduced = to_c(5, &|i, j| {
                let e = embed(j);
                (0..6).map(|k| jac[i][k] * e[k]).sum::<f64>()
            });
            let full_trace: f64 = (0..6).map(|i| jac[i][i]).sum();
            let red_trace: f64 = (0..5).map(|i| reduced[[i, i]].re).sum();
            Ok(StabilityReport {
                eigenvalues: sorted(linalg::eigvals(&reduced)?),
                filling_mode: Some(full_trace - red_trace),
            })
        }
    }
}

/// Result of probing a B-sublattice plane-wave order parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoseSurfaceCheck {
    /// `Σ_{j∈nbr(i)} σ_j⁺ = 0` for every A site.
    pub constraint_holds: bool,
    /// The state is a model II steady state at the given parameters.
    pub stationary: bool,
    /// Agreement with `∏ cos(k_i/2) = 0`.
    pub on_surface: bool,
}

/// Probe the family `σ_A⁺ = 0, σ_Aᶻ = −1, σ_B⁺ ∝ e^{ik·r}` on `lattice`.
pub fn bose_surface_family(
    lattice: &Lattice,
    k: &Momentum,
    p: &MFParams,
) -> Result<BoseSurfaceCheck> {
    let wave = lattice.b_plane_wave(k)?;
    let n = lattice.site_count();
    let nb = (n / 2) as f64;
    // Amplitude inside the Bloch ball for σ_Bᶻ = 0.
    let amp = 0.3 * nb.sqrt();
    let plus: Vec<Complex64> = wave.iter().map(|w| w * amp).collect();
    let z: Vec<f64> = (0..n)
        .map(|s| match lattice.sublattice(s) {
            Sublattice::A => -1.0,
            Sublattice::B => 0.0,
        })
        .collect();
    let constraint_holds = lattice.sites_of(Sublattice::A).iter().all(|&a| {
        lattice
            .neighbors(a)
            .iter()
            .map(|&b| plus[b])
            .sum::<Complex64>()
            .norm()
            <= 1e-12
    });
    let (dp, dz) = rhs_model_ii_sites(lattice, &plus, &z, p);
    let res = dp.iter().map(|v| v.norm_sqr()).sum::<f64>() + dz.iter().map(|v| v * v).sum::<f64>();
    Ok(BoseSurfaceCheck {
        constraint_holds,
        stationary: res.sqrt() <= 1e-12,
        on_surface: on_bose_surface(k, BOSE_SURFACE_TOL),
    })
}

/// Filling at which the symmetric model II point loses stability, by bisection
/// on the sign of the leading non-filling Jacobian eigenvalue over `[lo, hi]`.
pub fn instability_threshold(p: &MFParams, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let leading = |n: f64| -> Result<f64> {
        let mut q = *p;
        q.n = n;
        Ok(stability(MFModel::II, &symmetric_model_ii(n), &q)?.max_real())
    };
    let (mut a, mut b) = (lo, hi);
    if leading(a)? > 1e-9 || leading(b)? <= 1e-9 {
        return Err(Error::param(
            "n",
            "bracket does not contain a stability change",
        ));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if leading(m)? > 1e-9 {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Distance between two states up to a global phase rotation.
pub fn distance_mod_phase(a: &MeanFieldState, b: &MeanFieldState) -> f64 {
    a.gauge_fixed().sub(&b.gauge_fixed()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, build_square};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Closed-form SSB root of model II at filling n (Γ_z = 0).
    fn model_ii_closed_form(j: f64, g: f64, n: f64) -> (f64, f64, f64) {
        let c = 4.0 * n - 2.0;
        let qa = g * g - 4.0 * j * j;
        let qb = g * g * (2.0 - c) + 4.0 * j * j * c;
        let qc = g * g * (1.0 - c);
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let roots = [(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)];
        let az = roots
            .into_iter()
            .find(|&a| (-1.0..=0.0).contains(&a) && (0.0..=1.0).contains(&(c - a)))
            .unwrap();
        (az, c - az, -az * (1.0 + az) / 2.0)
    }

    #[test]
    fn model_i_symmetric_point_is_stationary() {
        let p = MFParams::new(0.3, 1.0, 2);
        let s = fixed_point_model_i(&MFParams::new(0.2, 1.0, 2)).unwrap();
        assert!(rhs_model_i(&s, &p).norm() < 1e-15);
    }

    #[test]
    fn model_i_ssb_point() {
        let p = MFParams::new(0.5, 1.0, 2);
        let s = fixed_point_model_i(&p).unwrap();
        assert!((s.sa_z + 0.5).abs() < 1e-15);
        assert!((s.sa_plus.norm_sqr() - 0.125).abs() < 1e-15);
        assert!((s.sa_plus.arg() - s.sb_plus.arg() - PI / 2.0).abs() < 1e-12);
        assert!(rhs_model_i(&s, &p).norm() < 1e-12);
        assert!(s.in_bloch_ball());
        let edge = fixed_point_model_i(&MFParams::new(0.25, 1.0, 2)).unwrap();
        assert_eq!(edge.sa_plus.norm(), 0.0);
    }

    #[test]
    fn model_i_pure_loss_relaxes_at_two_gamma() {
        let p = MFParams::new(0.0, 0.7, 1);
        let s = MeanFieldState {
            sa_plus: Complex64::new(0.0, 0.0),
            sb_plus: Complex64::new(0.0, 0.0),
            sa_z: 0.5,
            sb_z: 1.0,
        };
        assert!((rhs_model_i(&s, &p).sa_z + 2.0 * 0.7 * 1.5).abs() < 1e-15);
    }

    #[test]
    fn model_ii_conserves_filling() {
        let p = MFParams {
            j: 0.4,
            gamma: 1.0,
            gamma_z: 0.2,
            d: 2,
            n: 0.3,
        };
        let s = MeanFieldState {
            sa_plus: Complex64::new(0.1, -0.2),
            sb_plus: Complex64::new(-0.05, 0.3),
            sa_z: -0.3,
            sb_z: 0.2,
        };
        let r = rhs_model_ii(&s, &p);
        assert!((r.sa_z + r.sb_z).abs() < 1e-15);
        let r1 = rhs_model_i(&s, &p);
        assert!((r1.sa_z + r1.sb_z).abs() > 1e-3);
    }

    #[test]
    fn model_ii_symmetric_family_is_stationary() {
        let p = MFParams {
            j: 0.4,
            gamma: 1.0,
            gamma_z: 0.0,
            d: 2,
            n: 0.3,
        };
        for bz in [-0.8, 0.0, 0.6] {
            let s = MeanFieldState {
                sb_z: bz,
                ..symmetric_model_ii(0.0)
            };
            assert!(rhs_model_ii(&s, &p).norm() < 1e-15);
        }
    }

    #[test]
    fn model_ii_ssb_matches_closed_form() {
        for n in [0.3, 0.4, 0.5] {
            let p = MFParams {
                j: 0.3,
                gamma: 1.0,
                gamma_z: 0.0,
                d: 2,
                n,
            };
            let s = fixed_point_model_ii(&p).unwrap();
            assert!(rhs_model_ii(&s, &p).norm() <= 1e-10);
            let (az, bz, a2) = model_ii_closed_form(0.3, 1.0, n);
            assert!((s.sa_z - az).abs() < 1e-8, "n={n}: {} vs {az}", s.sa_z);
            assert!((s.sb_z - bz).abs() < 1e-8);
            assert!((s.sa_plus.norm_sqr() - a2).abs() < 1e-8);
            assert!((s.filling() - n).abs() < 1e-12);
            // First relation of the SSB conditions.
            let lhs = (1.0 - s.sb_z) * (1.0 + s.sa_z);
            let rhs = -4.0 * 0.09 * s.sa_z * s.sb_z;
            assert!((lhs - rhs).abs() < 1e-10);
            // σ_A⁺ = i σ_B⁺ up to a positive factor.
            assert!((s.sa_plus.arg() - PI / 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn model_ii_low_filling_is_symmetric() {
        let p = MFParams {
            j: 0.3,
            gamma: 1.0,
            gamma_z: 0.0,
            d: 2,
            n: 0.2,
        };
        let s = fixed_point_model_ii(&p).unwrap();
        assert_eq!(s.sa_plus.norm(), 0.0);
        assert!((s.sb_z - (-0.2)).abs() < 1e-15);
    }

    #[test]
    fn model_ii_particle_hole_mapping() {
        let p = MFParams {
            j: 0.3,
            gamma: 1.0,
            gamma_z: 0.0,
            d: 2,
            n: 0.65,
        };
        let s = fixed_point_model_ii(&p).unwrap();
        assert!(rhs_model_ii(&s, &p).norm() < 1e-10);
        assert!((s.filling() - 0.65).abs() < 1e-12);
    }

    #[test]
    fn stability_of_symmetric_points() {
        let p = MFParams {
            j: 0.3,
            gamma: 1.0,
            gamma_z: 0.0,
            d: 2,
            n: 0.3,
        };
        let r = stability(MFModel::II, &symmetric_model_ii(0.3), &p).unwrap();
        assert!(r.max_real() > 0.0);
        assert!(r.filling_mode.unwrap().abs() < 1e-8);
        let r = stability(
            MFModel::II,
            &symmetric_model_ii(0.2),
            &MFParams { n: 0.2, ..p },
        )
        .unwrap();
        assert!(r.max_real() <= 1e-9);
        let q = MFParams::new(0.2, 1.0, 2);
        let r = stability(MFModel::I, &fixed_point_model_i(&q).unwrap(), &q).unwrap();
        assert!(r.max_real() < 0.0);
    }

    #[test]
    fn instability_threshold_is_a_quarter() {
        let p = MFParams {
            j: 0.3,
            gamma: 1.0,
            gamma_z: 0.0,
            d: 2,
            n: 0.3,
        };
        let nc = instability_threshold(&p, 0.1, 0.45, 1e-6).unwrap();
        assert!((nc - 0.25).abs() < 1e-4);
    }

    #[test]
    fn bose_surface_family_matches_predicate() {
        let lat = build_square(4, 4).unwrap();
        let p = MFParams {
            j: 0.3,
            gamma: 1.0,
            gamma_z: 0.0,
            d: 2,
            n: 0.2,
        };
        for k in lat.b_momenta().unwrap() {
            let c = bose_surface_family(&lat, &k, &p).unwrap();
            assert_eq!(c.constraint_holds, c.on_surface);
            assert_eq!(c.stationary, c.on_surface);
        }
        let k = Momentum::new(vec![PI, PI / 2.0]);
        let lat8 = build_square(8, 8).unwrap();
        assert!(bose_surface_family(&lat8, &k, &p).unwrap().stationary);
        let pz = MFParams { gamma_z: 0.1, ..p };
        assert!(!bose_surface_family(&lat8, &k, &pz).unwrap().stationary);
        let k0 = Momentum::new(vec![0.0, 0.0]);
        assert!(
            !bose_surface_family(&lat8, &k0, &p)
                .unwrap()
                .constraint_holds
        );
    }

    #[test]
    fn site_resolved_rhs_matches_uniform() {
        let lat = build_chain(6).unwrap();
        let p = MFParams {
            j: 0.4,
            gamma: 1.0,
            gamma_z: 0.1,
            d: 1,
            n: 0.4,
        };
        let s = MeanFieldState {
            sa_plus: Complex64::new(0.1, 0.2),
            sb_plus: Complex64::new(0.3, -0.1),
            sa_z: -0.4,
            sb_z: 0.1,
        };
        let plus: Vec<Complex64> = (0..6)
            .map(|i| if i % 2 == 0 { s.sa_plus } else { s.sb_plus })
            .collect();
        let z: Vec<f64> = (0..6)
            .map(|i| if i % 2 == 0 { s.sa_z } else { s.sb_z })
            .collect();
        let (dp, dz) = rhs_model_ii_sites(&lat, &plus, &z, &p);
        let r = rhs_model_ii(&s, &p);
        assert!((dp[0] - r.sa_plus).norm() < 1e-14);
        assert!((dp[1] - r.sb_plus).norm() < 1e-14);
        assert!((dz[0] - r.sa_z).abs() < 1e-14);
        assert!((dz[1] - r.sb_z).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn rotated_fixed_points_stay_fixed(phi in -3.0f64..3.0, j in 0.3f64..1.0) {
            let p = MFParams::new(j, 1.0, 2);
            let s = fixed_point_model_i(&p).unwrap().rotate(phi);
            prop_assert!(rhs_model_i(&s, &p).norm() < 1e-12);
        }

        #[test]
        fn model_ii_rhs_is_rotation_covariant(
            phi in -3.0f64..3.0, ar in -0.3f64..0.3, ai in -0.3f64..0.3,
            br in -0.3f64..0.3, az in -0.9f64..0.0, bz in 0.0f64..0.9,
        ) {
            let p = MFParams { j: 0.4, gamma: 1.0, gamma_z: 0.05, d: 2, n: 0.4 };
            let s = MeanFieldState {
                sa_plus: Complex64::new(ar, ai),
                sb_plus: Complex64::new(br, 0.1),
                sa_z: az,
                sb_z: bz,
            };
            let a = rhs_model_ii(&s.rotate(phi), &p);
            let b = rhs_model_ii(&s, &p).rotate(phi);
            prop_assert!(a.sub(&b).norm() < 1e-12);
        }
    }
}
