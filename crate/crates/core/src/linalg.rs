// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense decompositions on top of faer and a shift-invert Krylov–Schur
//! eigensolver for sparse non-Hermitian matrices.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) fn to_faer(a: &Array2<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_faer(a: faer::MatRef<'_, Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

/// Eigenvalues and right eigenvectors (as columns) of a general square matrix.
pub fn eig(a: &Array2<Complex64>) -> Result<(Vec<Complex64>, Array2<Complex64>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("eig needs a square matrix".into()));
    }
    if a.nrows() == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    checked_spectrum(a, |m| {
        let evd = m
            .eigen()
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        let s = evd.S();
        Ok((
            (0..m.nrows()).map(|i| s[i]).collect(),
            Some(evd.U().to_owned()),
        ))
    })
    .map(|(vals, vecs)| (vals, vecs.expect("eigenvectors requested")))
}

/// Eigenvalues of a general square matrix.
pub fn eigvals(a: &Array2<Complex64>) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    checked_spectrum(a, |m| {
        let vals = m
            .eigenvalues()
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        Ok((vals, None))
    })
    .map(|(vals, _)| vals)
}

type Spectrum = (Vec<Complex64>, Option<Mat<Complex64>>);

/// Runs a dense eigensolver and checks its output against `tr A` and `tr A²`.
/// The QR iteration can stall on structured matrices and still report
/// success; a complex scalar shift or a symmetric permutation of the input
/// breaks the structure, and both are undone exactly afterwards.
fn checked_spectrum(
    a: &Array2<Complex64>,
    solve: impl Fn(&Mat<Complex64>) -> Result<Spectrum>,
) -> Result<(Vec<Complex64>, Option<Array2<Complex64>>)> {
    let n = a.nrows();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let sigma = Complex64::new(0.37, 0.21) * scale;
    let perm: Vec<usize> = (0..n).map(|i| (i * coprime_step(n) + n / 3) % n).collect();
    let attempts: [(Complex64, bool); 3] = [(ZERO, false), (sigma, false), (ZERO, true)];
    for (shift, permute) in attempts {
        let m = Mat::from_fn(n, n, |i, j| {
            let (r, c) = if permute { (perm[i], perm[j]) } else { (i, j) };
            a[[r, c]] - if i == j { shift } else { ZERO }
        });
        let (mut vals, vecs) = solve(&m)?;
        vals.iter_mut().for_each(|v| *v += shift);
        if !spectrum_consistent(a, &vals) {
            continue;
        }
        let vecs = vecs.map(|u| {
            let mut out = Array2::zeros((n, n));
            for i in 0..n {
                let row = if permute { perm[i] } else { i };
                for j in 0..n {
                    out[[row, j]] = u[(i, j)];
                }
            }
            out
        });
        return Ok((vals, vecs));
    }
    Err(Error::LinearAlgebra(format!(
        "dense eigensolver did not converge on a {n}x{n} matrix"
    )))
}

fn coprime_step(n: usize) -> usize {
    let gcd = |mut a: usize, mut b: usize| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    (n / 2 + 1..n + 2).find(|&s| gcd(s, n) == 1).unwrap_or(1)
}

/// `Σλ = tr A` and `Σλ² = tr A²` up to rounding.
fn spectrum_consistent(a: &Array2<Complex64>, vals: &[Complex64]) -> bool {
    let n = a.nrows();
    if vals.len() != n || vals.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return false;
    }
    let fro = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tr: Complex64 = (0..n).map(|i| a[[i, i]]).sum();
    let mut tr2 = ZERO;
    for i in 0..n {
        for j in 0..n {
            tr2 += a[[i, j]] * a[[j, i]];
        }
    }
    let s1: Complex64 = vals.iter().sum();
    let s2: Complex64 = vals.iter().map(|v| v * v).sum();
    let tol = 1e-9 * n as f64 * (fro + 1e-300);
    (s1 - tr).norm() <= tol && (s2 - tr2).norm() <= tol * (fro + 1e-300)
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn eigh(a: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    let evd = to_faer(a)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let s = evd.S();
    let vals = (0..a.nrows()).map(|i| s[i].re).collect();
    Ok((vals, from_faer(evd.U())))
}

/// Orthonormal basis (as columns) of the right null space of `a`. Singular
/// values at or below `rel_tol * max(σ_max, 1)` count as zero.
pub fn null_space(a: &Array2<Complex64>, rel_tol: f64) -> Result<Array2<Complex64>> {
    let (m, n) = a.dim();
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    if m == 0 {
        return Ok(Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            }
        }));
    }
    let svd = to_faer(a)
        .svd()
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let s = svd.S();
    let v = svd.V();
    let k = m.min(n);
    let smax = if k > 0 { s[0].re } else { 0.0 };
    let cutoff = rel_tol * smax.max(1.0);
    let rank = (0..k).filter(|&i| s[i].re > cutoff).count();
    Ok(Array2::from_shape_fn((n, n - rank), |(i, j)| {
        v[(i, rank + j)]
    }))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Options for [`eigs_shift_invert`].
#[derive(Clone, Debug)]
pub struct EigsOptions {
    /// Krylov subspace dimension; defaults to `max(2 nev + 10, 30)`.
    pub subspace: Option<usize>,
    pub max_restarts: usize,
    /// Ritz-pair convergence tolerance relative to |θ|.
    pub tol: f64,
    pub seed: u64,
}

impl Default for EigsOptions {
    fn default() -> Self {
        Self {
            subspace: None,
            max_restarts: 300,
            tol: 1e-12,
            seed: 0x5eed,
        }
    }
}

/// Converged eigenpair with its true residual ‖Mv − λv‖.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

/// The `nev` eigenvalues of `m` nearest to `sigma`, via Krylov–Schur on
/// `(M − σ)⁻¹`. Returned pairs satisfy ‖Mv − λv‖ ≤ 1e−8‖M‖₁.
pub fn eigs_shift_invert(
    m: &SparseMatrix,
    nev: usize,
    sigma: Complex64,
    opts: &EigsOptions,
) -> Result<Vec<EigenPair>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch(
            "eigs needs a square matrix".into(),
        ));
    }
    let nev = nev.min(n);
    if nev == 0 {
        return Ok(Vec::new());
    }
    let ncv = opts.subspace.unwrap_or((2 * nev + 10).max(30)).min(n);
    if ncv <= nev || n <= 64 {
        return dense_nearest(m, nev, sigma);
    }

    let lu = m
        .to_faer_shifted(sigma)?
        .sp_lu()
        .map_err(|e| Error::LinearAlgebra(format!("sparse LU failed: {e:?}")))?;
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        let mut rhs = Mat::from_fn(n, 1, |i, _| x[i]);
        lu.solve_in_place(rhs.as_mut());
        (0..n).map(|i| rhs[(i, 0)]).collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v0: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let nrm = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= nrm);

    // Krylov decomposition A V_k = V_k H_k + v_k h^T, H stored densely.
    let mut basis: Vec<Vec<Complex64>> = vec![v0];
    let mut h = Array2::<Complex64>::zeros((ncv + 1, ncv));
    let mut k = 0usize;
    let mut best = f64::INFINITY;

    for _restart in 0..opts.max_restarts {
        for j in k..ncv {
            let mut w = apply(&basis[j]);
            let mut coeffs = vec![ZERO; j + 1];
            for _pass in 0..2 {
                for (i, b) in basis.iter().enumerate().take(j + 1) {
                    let c = dot(b, &w);
                    coeffs[i] += c;
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
                }
            }
            let beta = norm(&w);
            for (i, c) in coeffs.into_iter().enumerate() {
                h[[i, j]] = c;
            }
            h[[j + 1, j]] = Complex64::new(beta, 0.0);
            if beta < 1e-14 {
                // Invariant subspace: restart direction with a fresh random vector.
                let mut r: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0))
                    .collect();
                for _pass in 0..2 {
                    for b in basis.iter() {
                        let c = dot(b, &r);
                        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= c * bi);
                    }
                }
                let rn = norm(&r);
                r.iter_mut().for_each(|x| *x /= rn);
                h[[j + 1, j]] = ZERO;
                basis.truncate(j + 1);
                basis.push(r);
            } else {
                w.iter_mut().for_each(|x| *x /= beta);
                basis.truncate(j + 1);
                basis.push(w);
            }
        }

        let hm = h.slice(ndarray::s![0..ncv, 0..ncv]).to_owned();
        let (theta, y) = eig(&hm)?;
        let mut order: Vec<usize> = (0..ncv).collect();
        order.sort_by(|&a, &b| theta[b].norm().total_cmp(&theta[a].norm()));

        let ritz_res = |idx: usize| -> f64 {
            (0..ncv)
                .map(|c| h[[ncv, c]] * y[[c, idx]])
                .sum::<Complex64>()
                .norm()
        };
        let converged = order
            .iter()
            .take(nev)
            .filter(|&&i| ritz_res(i) <= opts.tol * theta[i].norm().max(1e-300))
            .count();
        let worst = order
            .iter()
            .take(nev)
            .map(|&i| ritz_res(i) / theta[i].norm().max(1e-300))
            .fold(0.0, f64::max);
        best = best.min(worst);

        if converged == nev {
            let pairs: Vec<EigenPair> = order
                .iter()
                .take(nev)
                .map(|&i| {
                    let mut x = vec![ZERO; n];
                    for (c, b) in basis.iter().enumerate().take(ncv) {
                        let yc = y[[c, i]];
                        x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += yc * bi);
                    }
                    let xn = norm(&x);
                    x.iter_mut().for_each(|v| *v /= xn);
                    let lambda = sigma + Complex64::new(1.0, 0.0) / theta[i];
                    let mx = m.matvec(&x);
                    let residual = mx
                        .iter()
                        .zip(&x)
                        .map(|(a, b)| (a - lambda * b).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    EigenPair {
                        value: lambda,
                        vector: x,
                        residual,
                    }
                })
                .collect();
            let scale = m.norm_one().max(f64::MIN_POSITIVE);
            let worst_true = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
            if worst_true <= 1e-8 * scale {
                return Ok(pairs);
            }
            return Err(Error::Convergence {
                iterations: _restart + 1,
                residual: worst_true / scale,
            });
        }

        // Restart: keep an orthonormal basis Z of the wanted Ritz vectors.
        let keep = (nev + (ncv - nev) / 2).min(ncv - 1);
        let mut z: Vec<Vec<Complex64>> = Vec::with_capacity(keep);
        for &i in order.iter().take(keep) {
            let mut col: Vec<Complex64> = (0..ncv).map(|c| y[[c, i]]).collect();
            for _pass in 0..2 {
                for q in &z {
                    let c = dot(q, &col);
                    col.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                }
            }
            let cn = norm(&col);
            if cn > 1e-10 {
                col.iter_mut().for_each(|a| *a /= cn);
                z.push(col);
            }
        }
        let kk = z.len();
        let mut new_basis: Vec<Vec<Complex64>> = Vec::with_capacity(ncv + 1);
        for q in &z {
            let mut x = vec![ZERO; n];
            for (c, b) in basis.iter().enumerate().take(ncv) {
                let qc = q[c];
                x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += qc * bi);
            }
            new_basis.push(x);
        }
        new_basis.push(basis[ncv].clone());

        let mut new_h = Array2::<Complex64>::zeros((ncv + 1, ncv));
        // B = Zᴴ H_m Z, bottom row = h_{m+1}ᵀ Z.
        let hz: Vec<Vec<Complex64>> = z
            .iter()
            .map(|q| {
                (0..ncv)
                    .map(|r| (0..ncv).map(|c| hm[[r, c]] * q[c]).sum())
                    .collect()
            })
            .collect();
        for (a, qa) in z.iter().enumerate() {
            for (b, hzb) in hz.iter().enumerate() {
                new_h[[a, b]] = dot(qa, hzb);
            }
        }
        for (b, q) in z.iter().enumerate() {
            new_h[[kk, b]] = (0..ncv).map(|c| h[[ncv, c]] * q[c]).sum();
        }
        basis = new_basis;
        h = new_h;
        k = kk;
    }
    Err(Error::Convergence {
        iterations: opts.max_restarts,
        residual: best,
    })
}

fn dense_nearest(m: &SparseMatrix, nev: usize, sigma: Complex64) -> Result<Vec<EigenPair>> {
    let (vals, vecs) = eig(&m.to_dense())?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| {
        (vals[a] - sigma)
            .norm()
            .total_cmp(&(vals[b] - sigma).norm())
    });
    Ok(order
        .into_iter()
        .take(nev)
        .map(|i| {
            let x: Vec<Complex64> = vecs.column(i).to_vec();
            let mx = m.matvec(&x);
            let residual = mx
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - vals[i] * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            EigenPair {
                value: vals[i],
                vector: x,
                residual,
            }
        })
        .collect())
}
