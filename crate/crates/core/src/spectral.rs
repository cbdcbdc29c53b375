// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Liouvillian spectra, steady states, gaps, time evolution, translation
//! momentum resolution and oscillation detection.

use std::collections::HashMap;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{self, EigsOptions};
use crate::lindblad::{
    sector_block, vectorize, LindbladSpec, SectorBlock, SectorLabel, Superoperator,
};
use crate::sparse::SparseMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Blocks up to this dimension are diagonalized densely.
pub const DENSE_THRESHOLD: usize = 1200;

/// Relative tolerance classifying an eigenvalue as a zero mode.
pub const ZERO_MODE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Eigenvalues sorted by descending real part.
    pub eigenvalues: Vec<Complex64>,
    /// ‖Mv − λv‖ for each eigenvalue.
    pub residuals: Vec<f64>,
    /// Density-matrix representatives of the zero modes (diagonal-type
    /// blocks); Frobenius-normalised kernel operators otherwise.
    pub steady_states: Vec<Array2<Complex64>>,
    /// `|Re λ₁|`, or `|Re λ₀|` when the block has no zero mode.
    pub gap: f64,
    /// ‖M‖₁ used for relative tolerances.
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    pub dense_threshold: usize,
    /// Shift for the iterative solver; eigenvalues nearest to it are found.
    pub sigma: Complex64,
    pub eigs: EigsOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            dense_threshold: DENSE_THRESHOLD,
            sigma: Complex64::new(1e-2, 0.0),
            eigs: EigsOptions::default(),
        }
    }
}

fn sort_desc(pairs: &mut [(Complex64, Vec<Complex64>, f64)]) {
    pairs.sort_by(|a, b| {
        b.0.re
            .total_cmp(&a.0.re)
            .then(a.0.im.abs().total_cmp(&b.0.im.abs()))
            .then(a.0.im.total_cmp(&b.0.im))
    });
}

/// The `count` rightmost eigenpairs of a square matrix, sorted by descending
/// real part. Residuals satisfy ‖Mv − λv‖ ≤ 1e−8‖M‖₁.
pub fn rightmost(
    m: &SparseMatrix,
    count: usize,
    opts: &SpectrumOptions,
) -> Result<Vec<(Complex64, Vec<Complex64>, f64)>> {
    let n = m.nrows();
    if n == 0 || count == 0 {
        return Ok(Vec::new());
    }
    let mut pairs: Vec<(Complex64, Vec<Complex64>, f64)> = if n <= opts.dense_threshold {
        let (vals, vecs) = linalg::eig(&m.to_dense())?;
        vals.iter()
            .enumerate()
            .map(|(i, &l)| {
                let v: Vec<Complex64> = vecs.column(i).to_vec();
                let mv = m.matvec(&v);
                let r = mv
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - l * b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                (l, v, r)
            })
            .collect()
    } else {
        linalg::eigs_shift_invert(m, count, opts.sigma, &opts.eigs)?
            .into_iter()
            .map(|p| (p.value, p.vector, p.residual))
            .collect()
    };
    sort_desc(&mut pairs);
    pairs.truncate(count);
    let scale = m.norm_one();
    let worst = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    if worst > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Convergence {
            iterations: 0,
            residual: worst / scale,
        });
    }
    Ok(pairs)
}

/// All or the `count` rightmost eigenvalues of a sector block, with
/// steady-state representatives for its zero modes.
pub fn spectrum(block: &SectorBlock, count: usize) -> Result<SpectrumResult> {
    spectrum_with(block, count, &SpectrumOptions::default())
}

pub fn spectrum_with(
    block: &SectorBlock,
    count: usize,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    let m = &block.matrix;
    let scale = m.norm_one();
    if block.dim() == 0 {
        return Ok(SpectrumResult {
            eigenvalues: Vec::new(),
            residuals: Vec::new(),
            steady_states: Vec::new(),
            gap: 0.0,
            scale,
        });
    }
    let pairs = rightmost(m, count, opts)?;
    let zero_tol = ZERO_MODE_TOL * scale.max(1.0);
    let eigenvalues: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let residuals = pairs.iter().map(|p| p.2).collect();
    let d = block.hilbert_dim;
    let to_matrix = |v: &[Complex64]| -> Array2<Complex64> {
        let mut rho = Array2::zeros((d, d));
        for (&idx, &x) in block.indices.iter().zip(v) {
            rho[[idx / d, idx % d]] = x;
        }
        rho
    };
    let diagonal_type = matches!(block.label, SectorLabel::Difference(0))
        || matches!(block.label, SectorLabel::Pair(a, b) if a == b);
    let kernel: Vec<Array2<Complex64>> = if block.dim() <= opts.dense_threshold {
        let ns = linalg::null_space(&m.to_dense(), ZERO_MODE_TOL)?;
        (0..ns.ncols())
            .map(|c| to_matrix(&ns.column(c).to_vec()))
            .collect()
    } else {
        pairs
            .iter()
            .filter(|p| p.0.norm() <= zero_tol)
            .map(|p| to_matrix(&p.1))
            .collect()
    };
    let steady_states = if diagonal_type {
        hermitian_kernel_basis(&kernel)
    } else {
        kernel
            .into_iter()
            .map(|k| {
                let n = frobenius(&k);
                k.mapv(|x| x / n)
            })
            .collect()
    };
    let gap = gap_from(&eigenvalues, zero_tol);
    Ok(SpectrumResult {
        eigenvalues,
        residuals,
        steady_states,
        gap,
        scale,
    })
}

fn gap_from(eigenvalues: &[Complex64], zero_tol: f64) -> f64 {
    match eigenvalues.iter().find(|l| l.norm() > zero_tol) {
        Some(l) => l.re.abs(),
        None => 0.0,
    }
}

fn frobenius(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn trace(a: &Array2<Complex64>) -> Complex64 {
    a.diag().iter().sum()
}

/// Hermitian, trace-orthogonal basis of a kernel spanned by `kernel`. The
/// first element carries all the trace and is normalised to trace one when
/// possible; the rest are traceless and Frobenius-normalised.
pub fn hermitian_kernel_basis(kernel: &[Array2<Complex64>]) -> Vec<Array2<Complex64>> {
    let dim = kernel.len();
    if dim == 0 {
        return Vec::new();
    }
    let mut cands = Vec::with_capacity(2 * dim);
    for k in kernel {
        let kh = k.t().mapv(|x| x.conj());
        cands.push(k + &kh);
        cands.push((k - &kh).mapv(|x| x * Complex64::new(0.0, 1.0)));
    }
    // Gram–Schmidt in the Frobenius product keeps Hermiticity (real coefficients
    // between Hermitian matrices).
    let mut herm: Vec<Array2<Complex64>> = Vec::new();
    for mut c in cands {
        for _ in 0..2 {
            for h in &herm {
                let p = inner(h, &c).re;
                c = c - h.mapv(|x| x * p);
            }
        }
        let n = frobenius(&c);
        if n > 1e-8 {
            herm.push(c.mapv(|x| x / n));
        }
        if herm.len() == dim {
            break;
        }
    }
    let traces: Vec<f64> = herm.iter().map(|h| trace(h).re).collect();
    let tn = traces.iter().map(|t| t * t).sum::<f64>().sqrt();
    let mut out = Vec::with_capacity(herm.len());
    if tn > 1e-10 {
        let mut first = Array2::<Complex64>::zeros(herm[0].dim());
        for (h, t) in herm.iter().zip(&traces) {
            first = first + h.mapv(|x| x * (t / tn));
        }
        out.push(first);
        for h in &herm {
            let mut c = h.clone();
            for _ in 0..2 {
                for o in &out {
                    let p = inner(o, &c).re;
                    c = c - o.mapv(|x| x * p);
                }
            }
            let n = frobenius(&c);
            if n > 1e-8 && out.len() < herm.len() {
                out.push(c.mapv(|x| x / n));
            }
        }
        let t0 = trace(&out[0]).re;
        out[0] = out[0].mapv(|x| x / t0);
    } else {
        out = herm;
    }
    out
}

/// Steady states of the full generator: Hermitian kernel basis with the
/// first element a trace-one density-matrix representative.
pub fn steady_states(spec: &LindbladSpec) -> Result<Vec<Array2<Complex64>>> {
    let sup = vectorize(spec)?;
    let m = sup.matrix();
    let d = sup.hilbert_dim();
    let ns = linalg::null_space(&m.to_dense(), ZERO_MODE_TOL)?;
    let kernel: Vec<Array2<Complex64>> = (0..ns.ncols())
        .map(|c| Array2::from_shape_fn((d, d), |(a, b)| ns[[a * d + b, c]]))
        .collect();
    Ok(hermitian_kernel_basis(&kernel))
}

/// Liouvillian gap `|Re λ₁|` inside one sector of `spec`.
pub fn gap_in_sector(spec: &LindbladSpec, label: SectorLabel) -> Result<f64> {
    let sup = vectorize(spec)?;
    let block = sector_block(&sup, label);
    let res = spectrum(&block, block.dim().clamp(1, 8))?;
    Ok(res.gap)
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Array2<Complex64>>,
    pub dt: f64,
}

impl Trajectory {
    /// `tr(O ρ(t))` along the trajectory.
    pub fn expectation(&self, op: &SparseMatrix) -> Vec<Complex64> {
        self.states
            .iter()
            .map(|rho| op.iter().map(|(r, c, v)| v * rho[[c, r]]).sum())
            .collect()
    }

    pub fn last(&self) -> &Array2<Complex64> {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Fixed-step RK4 integration of `ρ̇ = L[ρ]` up to time `t_final`, recording
/// every step.
pub fn evolve(
    rho0: &Array2<Complex64>,
    spec: &LindbladSpec,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    evolve_strided(rho0, spec, t_final, dt, 1)
}

/// As [`evolve`], recording every `stride`-th step.
pub fn evolve_strided(
    rho0: &Array2<Complex64>,
    spec: &LindbladSpec,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    let d = spec.hilbert_dim();
    if rho0.dim() != (d, d) {
        return Err(Error::DimensionMismatch("initial state shape".into()));
    }
    if !(dt > 0.0 && t_final >= 0.0 && dt.is_finite() && t_final.is_finite()) {
        return Err(Error::param(
            "dt",
            "time step and final time must be positive",
        ));
    }
    let herm = rho0
        .iter()
        .zip(rho0.t().iter())
        .map(|(a, b)| (a - b.conj()).norm())
        .fold(0.0, f64::max);
    if herm > 1e-9 {
        return Err(Error::param("rho0", "initial state is not Hermitian"));
    }
    let tr0 = trace(rho0);
    if (tr0 - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::param(
            "rho0",
            "initial state does not have unit trace",
        ));
    }
    let m = vectorize(spec)?.matrix();
    let norm = m.norm_one();
    if dt * norm > 0.1 {
        return Err(Error::StepSize(format!(
            "dt·‖L‖ = {:.3e} exceeds 0.1 (‖L‖₁ = {norm:.3e})",
            dt * norm
        )));
    }
    let steps = (t_final / dt).round() as usize;
    let stride = stride.max(1);
    let mut x: Vec<Complex64> = rho0.iter().copied().collect();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    let mut tmp = vec![ZERO; n];
    let h = Complex64::new(dt, 0.0);
    for step in 1..=steps {
        m.matvec_into(&x, &mut k1);
        tmp.iter_mut()
            .zip(&x)
            .zip(&k1)
            .for_each(|((t, a), b)| *t = a + h * 0.5 * b);
        m.matvec_into(&tmp, &mut k2);
        tmp.iter_mut()
            .zip(&x)
            .zip(&k2)
            .for_each(|((t, a), b)| *t = a + h * 0.5 * b);
        m.matvec_into(&tmp, &mut k3);
        tmp.iter_mut()
            .zip(&x)
            .zip(&k3)
            .for_each(|((t, a), b)| *t = a + h * b);
        m.matvec_into(&tmp, &mut k4);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % stride == 0 || step == steps {
            let rho = Array2::from_shape_vec((d, d), x.clone()).expect("shape");
            let drift = (trace(&rho) - tr0).norm();
            if drift > 1e-6 {
                return Err(Error::StepSize(format!(
                    "trace drifted by {drift:.3e} at t = {}",
                    step as f64 * dt
                )));
            }
            times.push(step as f64 * dt);
            states.push(rho);
        }
    }
    Ok(Trajectory { times, states, dt })
}

/// Dominant angular frequency `|ω|` of a uniformly sampled complex signal;
/// 0 for static or vanishing signals.
pub fn detect_oscillation(times: &[f64], signal: &[Complex64]) -> f64 {
    let n = signal.len();
    if n < 2 || times.len() != n {
        return 0.0;
    }
    let amp = signal.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if amp < 1e-14 {
        return 0.0;
    }
    let dt = times[1] - times[0];
    let mut buf = signal.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (best, _) = buf
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let bin = if best > n / 2 {
        best as f64 - n as f64
    } else {
        best as f64
    };
    (2.0 * PI * bin / (n as f64 * dt)).abs()
}

/// Translation orbits of a doubled-space block under `(j, k) → (Pj, Pk)`.
struct Orbits {
    /// Representatives with their orbit lengths.
    reps: Vec<(usize, usize)>,
    /// For each block index: (orbit id, shift s with index = Tˢ rep).
    member: HashMap<usize, (usize, usize)>,
    order: usize,
}

fn orbits(indices: &[usize], d: usize, perm: &[usize]) -> Result<Orbits> {
    let t = |idx: usize| perm[idx / d] * d + perm[idx % d];
    let mut order = 1usize;
    {
        // Order of the basis permutation: lcm of its cycle lengths.
        let mut seen = vec![false; perm.len()];
        for s in 0..perm.len() {
            if seen[s] {
                continue;
            }
            let mut len = 0;
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                x = perm[x];
                len += 1;
            }
            order = lcm(order, len);
        }
    }
    let in_block: std::collections::HashSet<usize> = indices.iter().copied().collect();
    let mut member = HashMap::with_capacity(indices.len());
    let mut reps = Vec::new();
    for &idx in indices {
        if member.contains_key(&idx) {
            continue;
        }
        let id = reps.len();
        let mut x = idx;
        let mut s = 0;
        loop {
            if !in_block.contains(&x) {
                return Err(Error::NotTranslationInvariant(
                    "translation leaves the sector".into(),
                ));
            }
            member.insert(x, (id, s));
            s += 1;
            x = t(x);
            if x == idx {
                break;
            }
        }
        reps.push((idx, s));
    }
    Ok(Orbits {
        reps,
        member,
        order,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Momentum-resolved pieces of the (n, n) sector of a translation-invariant
/// generator.
pub struct MomentumResolver {
    sup: Superoperator,
    orbits: Orbits,
}

impl MomentumResolver {
    /// Prepare the `(n, n)` sector of `spec`, which must carry a translation.
    /// `spec` may live on the full space or on the charge-`n` sector space.
    pub fn new(spec: &LindbladSpec, n: i64) -> Result<Self> {
        let perm_sites = spec
            .translation
            .as_ref()
            .ok_or_else(|| Error::NotTranslationInvariant("model has no translation".into()))?;
        let perm = spec.space.site_permutation(perm_sites)?;
        let sup = vectorize(spec)?;
        let d = sup.hilbert_dim();
        let charge = sup.charge().to_vec();
        let indices: Vec<usize> = (0..d * d)
            .filter(|&i| charge[i / d] == n && charge[i % d] == n)
            .collect();
        check_translation(spec, &perm)?;
        let orbits = orbits(&indices, d, &perm)?;
        Ok(Self { sup, orbits })
    }

    /// Number of distinct momenta (order of the translation group).
    pub fn momenta(&self) -> usize {
        self.orbits.order
    }

    /// Momentum `2πm/order` wrapped into (−π, π].
    pub fn momentum(&self, m: usize) -> f64 {
        let k = 2.0 * PI * m as f64 / self.orbits.order as f64;
        if k > PI + 1e-12 {
            k - 2.0 * PI
        } else {
            k
        }
    }

    /// Generator restricted to translation eigenvalue `e^{iq}`, `q = 2πm/order`.
    pub fn block(&self, m: usize) -> SparseMatrix {
        let order = self.orbits.order;
        let q = 2.0 * PI * (m % order) as f64 / order as f64;
        let allowed: Vec<usize> = (0..self.orbits.reps.len())
            .filter(|&o| (m * self.orbits.reps[o].1).is_multiple_of(order))
            .collect();
        let mut pos = vec![usize::MAX; self.orbits.reps.len()];
        for (p, &o) in allowed.iter().enumerate() {
            pos[o] = p;
        }
        let d = self.sup.hilbert_dim();
        let cols: Vec<Vec<(usize, Complex64)>> = allowed
            .par_iter()
            .map(|&o| {
                let (rep, len_r) = self.orbits.reps[o];
                let mut buf = Vec::new();
                self.sup.column(rep / d, rep % d, &mut buf);
                let mut out = Vec::with_capacity(buf.len());
                for (row, v) in buf {
                    let Some(&(oid, s)) = self.orbits.member.get(&row) else {
                        continue;
                    };
                    let p = pos[oid];
                    if p == usize::MAX {
                        continue;
                    }
                    let len_rp = self.orbits.reps[oid].1;
                    let w = (len_r as f64 / len_rp as f64).sqrt();
                    out.push((p, v * Complex64::from_polar(w, q * s as f64)));
                }
                out
            })
            .collect();
        let n = allowed.len();
        let trip = cols
            .into_iter()
            .enumerate()
            .flat_map(|(c, col)| col.into_iter().map(move |(r, v)| (r, c, v)));
        SparseMatrix::from_triplets(n, n, trip)
    }
}

fn check_translation(spec: &LindbladSpec, perm: &[usize]) -> Result<()> {
    let d = spec.hilbert_dim();
    let p =
        SparseMatrix::from_triplets(d, d, (0..d).map(|i| (perm[i], i, Complex64::new(1.0, 0.0))));
    let pt = p.transpose();
    let conj = |m: &SparseMatrix| -> Result<SparseMatrix> { p.matmul(m)?.matmul(&pt) };
    let h = &spec.hamiltonian;
    let dh = conj(h)?
        .add_scaled(h, Complex64::new(-1.0, 0.0))?
        .frobenius_norm();
    // The dissipator is invariant when Σ γ L⊗conj(L) and Σ γ L†L are.
    let mut lsum = SparseMatrix::zeros(d * d, d * d);
    let mut lsum_t = SparseMatrix::zeros(d * d, d * d);
    for j in &spec.jumps {
        let r = Complex64::new(j.rate, 0.0);
        let lt = conj(&j.op)?;
        lsum = lsum.add_scaled(&j.op.kron(&j.op.conj()), r)?;
        lsum_t = lsum_t.add_scaled(&lt.kron(&lt.conj()), r)?;
    }
    let dl = lsum
        .add_scaled(&lsum_t, Complex64::new(-1.0, 0.0))?
        .frobenius_norm();
    let scale = h.frobenius_norm() + lsum.frobenius_norm() + 1.0;
    if dh > 1e-10 * scale || dl > 1e-10 * scale {
        return Err(Error::NotTranslationInvariant(format!(
            "translation changes the generator (ΔH = {dh:.2e}, Δdissipator = {dl:.2e})"
        )));
    }
    Ok(())
}

/// Slowest eigenvalue of each translation-momentum block of the `(n, n)`
/// sector, as `(k, λ_k)` for `k = 2πm/order`, `m = 0..order`. At `k = 0` the
/// steady state (λ = 0) is reported; elsewhere the rightmost eigenvalue.
pub fn dispersion(spec: &LindbladSpec, n: i64) -> Result<Vec<(f64, Complex64)>> {
    let res = MomentumResolver::new(spec, n)?;
    (0..res.momenta())
        .map(|m| {
            let block = res.block(m);
            let pairs = rightmost(&block, 1, &SpectrumOptions::default())?;
            let lambda = pairs.first().map(|p| p.0).unwrap_or(ZERO);
            Ok((res.momentum(m), lambda))
        })
        .collect()
}
