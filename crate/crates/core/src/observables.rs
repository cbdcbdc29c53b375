// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Symmetry-breaking diagnostics on density matrices: two-point and Rényi-2
//! correlators, filling, purity and the strong-to-weak witness.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::linalg;
use crate::lindblad::{sector_block, vectorize, LindbladSpec, SectorLabel};
use crate::sparse::SparseMatrix;
use crate::spectral::spectrum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A validated density matrix on a many-body space.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: Arc<HilbertSpace>,
    matrix: Array2<Complex64>,
}

impl DensityMatrix {
    /// Checks Hermiticity (1e−9), unit trace (1e−9) and positivity (−1e−8).
    pub fn new(space: Arc<HilbertSpace>, matrix: Array2<Complex64>) -> Result<Self> {
        let d = space.dim();
        if matrix.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "density matrix {:?} on a space of dimension {d}",
                matrix.dim()
            )));
        }
        let herm = matrix
            .indexed_iter()
            .map(|((a, b), v)| (v - matrix[[b, a]].conj()).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if herm > 1e-9 {
            return Err(Error::param(
                "rho",
                format!("not Hermitian (‖ρ−ρ†‖ = {herm:.2e})"),
            ));
        }
        let tr: Complex64 = matrix.diag().iter().sum();
        if (tr - 1.0).norm() > 1e-9 {
            return Err(Error::param("rho", format!("trace {tr} differs from 1")));
        }
        let (vals, _) = linalg::eigh(&matrix)?;
        if vals.first().copied().unwrap_or(0.0) < -1e-8 {
            return Err(Error::param(
                "rho",
                format!("negative eigenvalue {:.2e}", vals[0]),
            ));
        }
        Ok(Self { space, matrix })
    }

    /// Pure state `|ψ⟩⟨ψ|` of a normalised vector.
    pub fn pure(space: Arc<HilbertSpace>, psi: &[Complex64]) -> Result<Self> {
        let n: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::param("psi", "zero vector"));
        }
        let d = psi.len();
        let m = Array2::from_shape_fn((d, d), |(a, b)| psi[a] * psi[b].conj() / (n * n));
        Self::new(space, m)
    }

    /// Uniform mixture `I^{n}` of all configurations with charge `n`.
    pub fn sector_mixture(space: Arc<HilbertSpace>, n: i64) -> Result<Self> {
        let d = space.dim();
        let members: Vec<usize> = (0..d).filter(|&i| space.charge_of(i) == n).collect();
        if members.is_empty() {
            return Err(Error::param("n", "no configuration carries this charge"));
        }
        let w = 1.0 / members.len() as f64;
        let mut m = Array2::zeros((d, d));
        for i in members {
            m[[i, i]] = Complex64::new(w, 0.0);
        }
        Self::new(space, m)
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `tr(ρ O)`.
    pub fn expectation(&self, op: &SparseMatrix) -> Complex64 {
        op.iter().map(|(r, c, v)| v * self.matrix[[c, r]]).sum()
    }
}

fn hop(space: &HilbertSpace, i: usize, j: usize) -> Result<SparseMatrix> {
    let alg = space.algebra();
    if i >= space.sites() || j >= space.sites() {
        return Err(Error::IndexOutOfRange {
            index: i.max(j),
            size: space.sites(),
        });
    }
    let raise = space.embed(&alg.raise, i)?;
    let lower = space.embed(&alg.lower, j)?;
    raise.matmul(&lower)
}

/// `tr(ρ a_i† a_j)` with `a†` the raising operator of the local algebra.
pub fn two_point(rho: &DensityMatrix, i: usize, j: usize) -> Result<Complex64> {
    Ok(rho.expectation(&hop(&rho.space, i, j)?))
}

/// `tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix.iter().map(|v| v.norm_sqr()).sum()
}

/// Rényi-2 correlator `tr(ρ a_i†a_j ρ a_i a_j†) / tr ρ²` for `i ≠ j`.
pub fn renyi2_correlator(rho: &DensityMatrix, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::param(
            "j",
            "the Rényi-2 correlator needs distinct sites",
        ));
    }
    let p = purity(rho);
    if p <= 1e-300 {
        return Err(Error::param("rho", "zero purity"));
    }
    let alg = rho.space.algebra();
    let x = hop(&rho.space, i, j)?;
    let y = rho
        .space
        .embed(&alg.lower, i)?
        .matmul(&rho.space.embed(&alg.raise, j)?)?;
    let m = &rho.matrix;
    // tr(ρ X ρ Y) = Σ ρ[a,b] X[b,c] ρ[c,e] Y[e,a].
    let mut xrho = Array2::<Complex64>::zeros(m.dim());
    for (b, c, v) in x.iter() {
        for e in 0..m.ncols() {
            xrho[[b, e]] += v * m[[c, e]];
        }
    }
    let mut total = ZERO;
    for (e, a, v) in y.iter() {
        for b in 0..m.nrows() {
            total += m[[a, b]] * xrho[[b, e]] * v;
        }
    }
    if total.im.abs() > 1e-10 * total.norm().max(1.0) {
        return Err(Error::param(
            "rho",
            format!("Rényi-2 numerator is not real: {total}"),
        ));
    }
    Ok(total.re / p)
}

/// Mean charge per site in units of the maximal local charge; for spin 1/2 this
/// is `N / L^d`.
pub fn filling(rho: &DensityMatrix) -> f64 {
    let space = &rho.space;
    let max_q = space.algebra().max_charge().max(1) as f64;
    let mean: f64 = (0..space.dim())
        .map(|i| rho.matrix[[i, i]].re * space.charge_of(i) as f64)
        .sum();
    mean / (space.sites() as f64 * max_q)
}

/// Trace-normalised Hermitian steady state of the `(n, n)` sector closest in
/// Frobenius norm to the maximally mixed sector state.
pub fn sector_steady_state(spec: &LindbladSpec, n: i64) -> Result<DensityMatrix> {
    let sup = vectorize(spec)?;
    let block = sector_block(&sup, SectorLabel::Pair(n, n));
    if block.dim() == 0 {
        return Err(Error::param("n", "empty sector"));
    }
    let res = spectrum(&block, block.dim().clamp(1, 8))?;
    if res.steady_states.is_empty() {
        return Err(Error::Convergence {
            iterations: 0,
            residual: res.gap,
        });
    }
    let d = spec.hilbert_dim();
    let members: Vec<usize> = (0..d).filter(|&i| sup.charge()[i] == n).collect();
    let w = 1.0 / members.len() as f64;
    // Orthonormalise the Hermitian kernel basis, then project.
    let mut basis: Vec<Array2<Complex64>> = Vec::new();
    for s in &res.steady_states {
        let mut c = s.clone();
        for _ in 0..2 {
            for b in &basis {
                let p: f64 = b.iter().zip(c.iter()).map(|(x, y)| (x.conj() * y).re).sum();
                c = c - b.mapv(|x| x * p);
            }
        }
        let nrm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-10 {
            basis.push(c.mapv(|x| x / nrm));
        }
    }
    let mut rho = Array2::<Complex64>::zeros((d, d));
    for b in &basis {
        let overlap: f64 = members.iter().map(|&i| b[[i, i]].re * w).sum();
        rho = rho + b.mapv(|x| x * overlap);
    }
    let tr: f64 = rho.diag().iter().map(|v| v.re).sum();
    if tr.abs() < 1e-10 {
        rho = res.steady_states[0].clone();
    } else {
        rho.mapv_inplace(|x| x / tr);
    }
    let rho_h = Array2::from_shape_fn((d, d), |(a, b)| 0.5 * (rho[[a, b]] + rho[[b, a]].conj()));
    DensityMatrix::new(spec.space.clone(), rho_h)
}

/// Strong-to-weak witness in the `(n, n)` sector steady state: the Rényi-2
/// correlator and the modulus of the two-point function between `i` and `j`.
#[derive(Clone, Copy, Debug)]
pub struct Witness {
    pub renyi2: f64,
    pub two_point: f64,
}

pub fn swssb_witness(spec: &LindbladSpec, n: i64, i: usize, j: usize) -> Result<Witness> {
    let rho = sector_steady_state(spec, n)?;
    Ok(Witness {
        renyi2: renyi2_correlator(&rho, i, j)?,
        two_point: two_point(&rho, i, j)?.norm(),
    })
}

/// `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::spin_algebra;
    use crate::lattice::build_chain;
    use crate::lindblad::{model_ii, model_iii};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn spin_half(l: usize) -> Arc<HilbertSpace> {
        Arc::new(HilbertSpace::full(l, spin_algebra(1).unwrap()).unwrap())
    }

    fn all_down(space: &HilbertSpace) -> usize {
        space.index_of(&vec![1; space.sites()]).unwrap()
    }

    #[test]
    fn vacuum_correlators_vanish() {
        let sp = spin_half(4);
        let mut psi = vec![ZERO; sp.dim()];
        psi[all_down(&sp)] = Complex64::new(1.0, 0.0);
        let rho = DensityMatrix::pure(sp, &psi).unwrap();
        assert_eq!(two_point(&rho, 0, 2).unwrap(), ZERO);
        assert_eq!(renyi2_correlator(&rho, 0, 1).unwrap(), 0.0);
        assert!((purity(&rho) - 1.0).abs() < 1e-15);
        assert_eq!(filling(&rho), 0.0);
    }

    #[test]
    fn one_magnon_two_point() {
        let l = 6;
        let sp = spin_half(l);
        let k = 2.0 * PI / l as f64;
        let mut psi = vec![ZERO; sp.dim()];
        for r in 0..l {
            let mut cfg = vec![1; l];
            cfg[r] = 0;
            psi[sp.index_of(&cfg).unwrap()] =
                Complex64::from_polar(1.0 / (l as f64).sqrt(), k * r as f64);
        }
        let rho = DensityMatrix::pure(sp, &psi).unwrap();
        for i in 0..l {
            for j in 0..l {
                let v = two_point(&rho, i, j).unwrap();
                assert!((v.norm() - 1.0 / l as f64).abs() < 1e-14);
            }
        }
        assert!((filling(&rho) - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn sector_mixture_values() {
        let sp = spin_half(4);
        let rho = DensityMatrix::sector_mixture(sp, 2).unwrap();
        assert!((purity(&rho) - 1.0 / 6.0).abs() < 1e-15);
        assert!((filling(&rho) - 0.5).abs() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((renyi2_correlator(&rho, i, j).unwrap() - 1.0 / 3.0).abs() < 1e-12);
                    assert!(two_point(&rho, i, j).unwrap().norm() < 1e-15);
                }
            }
        }
    }

    /// Brute force over sector configurations: a_i†a_j maps a configuration
    /// with j up, i down to one other, so the numerator counts such states.
    #[test]
    fn renyi2_matches_enumeration() {
        for (l, n) in [(4usize, 2usize), (6, 3), (6, 2), (5, 1)] {
            let sp = spin_half(l);
            let rho = DensityMatrix::sector_mixture(sp.clone(), n as i64).unwrap();
            let mut count = 0usize;
            let mut total = 0usize;
            for idx in 0..sp.dim() {
                let cfg = sp.config(idx);
                let ups = cfg.iter().filter(|&&c| c == 0).count();
                if ups == n {
                    total += 1;
                    if cfg[0] == 1 && cfg[l - 1] == 0 {
                        count += 1;
                    }
                }
            }
            let want = count as f64 / total as f64;
            let got = renyi2_correlator(&rho, 0, l - 1).unwrap();
            assert!((got - want).abs() < 1e-12);
            assert!(
                (want - binomial(l as u64 - 2, n as u64 - 1) / binomial(l as u64, n as u64)).abs()
                    < 1e-15
            );
        }
    }

    #[test]
    fn invalid_density_matrices_are_rejected() {
        let sp = spin_half(1);
        let bad = Array2::from_shape_vec(
            (2, 2),
            vec![1.5, 0.0, 0.0, -0.5]
                .into_iter()
                .map(|x| Complex64::new(x, 0.0))
                .collect(),
        )
        .unwrap();
        assert!(DensityMatrix::new(sp.clone(), bad).is_err());
        let trace2 = Array2::from_diag_elem(2, Complex64::new(1.0, 0.0));
        assert!(DensityMatrix::new(sp, trace2).is_err());
    }

    #[test]
    fn witness_on_model_iii() {
        let spec = model_iii(6, 0.5, 0.3, 0.2, 1.0).unwrap();
        let w = swssb_witness(&spec, 3, 0, 3).unwrap();
        assert!((w.renyi2 - 0.3).abs() < 1e-12);
        assert!(w.two_point < 1e-12);
        let vac = swssb_witness(&spec, 0, 0, 3).unwrap();
        assert_eq!(vac.renyi2, 0.0);
    }

    #[test]
    fn witness_on_model_ii_single_particle() {
        let lat = build_chain(4).unwrap();
        let spec = model_ii(&lat, 0.0, 0.0, 1.0, 0.0).unwrap();
        let w = swssb_witness(&spec, 1, 0, 2).unwrap();
        assert!(w.two_point < 1e-12);
    }

    proptest! {
        #[test]
        fn renyi2_is_weak_rotation_invariant(theta in -3.0f64..3.0, seed in 0u64..50) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let sp = spin_half(3);
            let d = sp.dim();
            let psi: Vec<Complex64> = (0..d).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let phi: Vec<Complex64> = (0..d).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let r1 = DensityMatrix::pure(sp.clone(), &psi).unwrap();
            let r2 = DensityMatrix::pure(sp.clone(), &phi).unwrap();
            let mix = (r1.matrix() * 0.3) + (r2.matrix() * 0.7);
            let rho = DensityMatrix::new(sp.clone(), mix.clone()).unwrap();
            let u: Vec<Complex64> = (0..d).map(|i| Complex64::from_polar(1.0, -theta * sp.charge_of(i) as f64)).collect();
            let rot = Array2::from_shape_fn((d, d), |(a, b)| u[a] * mix[[a, b]] * u[b].conj());
            let rho_rot = DensityMatrix::new(sp, rot).unwrap();
            let a = renyi2_correlator(&rho, 0, 2).unwrap();
            let b = renyi2_correlator(&rho_rot, 0, 2).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            let ta = two_point(&rho, 0, 2).unwrap().norm();
            let tb = two_point(&rho_rot, 0, 2).unwrap().norm();
            prop_assert!((ta - tb).abs() < 1e-12);
        }
    }
}
