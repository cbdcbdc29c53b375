// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Perturbative effective generators: first-order magnon hopping for model I,
//! the second-order classical generator of model III and its Goldstone
//! variational energies, plus exact-diagonalization comparisons.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{spin_algebra, spin_algebra_f, HilbertSpace, Term};
use crate::lattice::{Lattice, Sublattice};
use crate::linalg;
use crate::lindblad::{model_i, model_iii_in, sector_block, vectorize, LindbladSpec, SectorLabel};
use crate::sparse::SparseMatrix;
use crate::spectral::{rightmost, MomentumResolver, SpectrumOptions};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Largest sector dimension accepted by the exact comparisons.
pub const MAX_ED_DIM: usize = 1000;

#[derive(Clone, Debug)]
pub struct EffectiveGenerator {
    /// Physical meaning of each basis vector.
    pub basis_labels: Vec<String>,
    pub matrix: Array2<Complex64>,
    pub order: u32,
}

impl EffectiveGenerator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        linalg::eigvals(&self.matrix)
    }

    /// Eigenvalues of a Hermitian generator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(linalg::eigh(&self.matrix)?.0)
    }
}

/// One mode of the single-site loss dissipator.
#[derive(Clone, Debug)]
pub struct SingleSiteMode {
    pub eigenvalue: f64,
    pub left: Array2<Complex64>,
    pub right: Array2<Complex64>,
}

fn unit(r: usize, c: usize) -> Array2<Complex64> {
    let mut m = Array2::zeros((2, 2));
    m[[r, c]] = re(1.0);
    m
}

/// Eigen-decomposition of `Γ D(σ⁻)` on one spin-1/2 site, in the basis where
/// index 0 is spin up and index 1 spin down. Left and right eigen-operators
/// are biorthonormal, `tr(e_mᴸ† e_nᴿ) = δ_mn`. The second `−Γ` mode is the
/// coherence `|↓⟩⟨↑|`.
pub fn single_site_loss_spectrum(gamma: f64) -> Result<Vec<SingleSiteMode>> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::param("Gamma", "must be a finite nonnegative rate"));
    }
    let (up, down) = (0, 1);
    Ok(vec![
        SingleSiteMode {
            eigenvalue: 0.0,
            left: unit(up, up) + unit(down, down),
            right: unit(down, down),
        },
        SingleSiteMode {
            eigenvalue: -gamma,
            left: unit(up, down),
            right: unit(up, down),
        },
        SingleSiteMode {
            eigenvalue: -gamma,
            left: unit(down, up),
            right: unit(down, up),
        },
        SingleSiteMode {
            eigenvalue: -2.0 * gamma,
            left: unit(up, up),
            right: unit(up, up) - unit(down, down),
        },
    ])
}

/// First-order effective generator of model I in the `N_L − N_R = 1` magnon
/// space `{σ_i⁺ρ₀ (i∈A), ρ₀σ_i⁺ (i∈B)}`: `−Γ` on the diagonal, `+iJ` from an
/// A site to a neighbouring B site and `−iJ` back.
///
/// `M + Γ` is Hermitian, so the spectrum is real with slowest mode
/// `−Γ + 2Jd`.
pub fn effective_liouvillian_i(
    lattice: &Lattice,
    j: f64,
    gamma: f64,
) -> Result<EffectiveGenerator> {
    if !j.is_finite() || !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::param("J/Gamma", "must be finite, Gamma nonnegative"));
    }
    let n = lattice.site_count();
    let mut m = Array2::from_diag_elem(n, re(-gamma));
    let ij = Complex64::new(0.0, j);
    for (a, b) in lattice.bonds() {
        m[[b, a]] += ij;
        m[[a, b]] -= ij;
    }
    let basis_labels = (0..n)
        .map(|s| match lattice.sublattice(s) {
            Sublattice::A => format!("site {s} (A)"),
            Sublattice::B => format!("site {s} (B)"),
        })
        .collect();
    Ok(EffectiveGenerator {
        basis_labels,
        matrix: m,
        order: 1,
    })
}

/// Match `a` against `b` as multisets by greedy nearest pairing and return the
/// largest pair distance.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, y) in b.iter().enumerate() {
            if !used[i] && (x - y).norm() < best.0 {
                best = ((x - y).norm(), i);
            }
        }
        if best.1 == usize::MAX {
            return f64::INFINITY;
        }
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

/// Exact versus first-order spectrum of model I in the `N_L − N_R = 1` sector.
#[derive(Clone, Debug)]
pub struct PerturbativeComparison {
    /// Exact eigenvalues of the cluster that starts at `−Γ`.
    pub exact: Vec<Complex64>,
    pub effective: Vec<Complex64>,
    pub max_deviation: f64,
    /// Gap `|Re λ|` of the slowest exact mode in the sector.
    pub exact_gap: f64,
}

/// Build the exact model I generator, take the `N_L − N_R = 1` block, keep the
/// eigenvalues within `Γ/2` of `−Γ` and compare them with
/// [`effective_liouvillian_i`].
pub fn compare_perturbative_i(
    lattice: &Lattice,
    j: f64,
    gamma: f64,
) -> Result<PerturbativeComparison> {
    let n = lattice.site_count();
    if n > 8 {
        return Err(Error::param(
            "lattice",
            "too large for exact diagonalization of the magnon sector",
        ));
    }
    let spec = model_i(lattice, j, 0.0, gamma)?;
    let block = sector_block(&vectorize(&spec)?, SectorLabel::Difference(1));
    let all = linalg::eigvals(&block.matrix.to_dense())?;
    let mut exact: Vec<Complex64> = all
        .into_iter()
        .filter(|l| (l + gamma).norm() < 0.5 * gamma)
        .collect();
    exact.sort_by(|a, b| b.re.total_cmp(&a.re));
    let effective = effective_liouvillian_i(lattice, j, gamma)?.eigenvalues()?;
    if exact.len() != effective.len() {
        return Err(Error::Convergence {
            iterations: 0,
            residual: (exact.len() as f64 - effective.len() as f64).abs(),
        });
    }
    let max_deviation = multiset_distance(&exact, &effective);
    let exact_gap = exact.first().map(|l| -l.re).unwrap_or(f64::NAN);
    Ok(PerturbativeComparison {
        exact,
        effective,
        max_deviation,
        exact_gap,
    })
}

fn config_label(space: &HilbertSpace, index: usize) -> String {
    let alg = space.algebra();
    space
        .config(index)
        .iter()
        .map(|&i| alg.charge[i].to_string())
        .collect::<Vec<_>>()
        .join("")
}

/// Second-order effective generator on the populations of a generator whose
/// jumps are all diagonal: `L_eff = −P 𝓗 L₀⁻¹ 𝓗 P` with `𝓗 = −i[H_off, ·]`
/// and `L₀` the dephasing part. Returns `H_eff = −L_eff`, real symmetric, on
/// the configurations of `spec.space`.
///
/// The transition rate `c → c'` is `2|H_{c'c}|²/κ(c', c)` with
/// `κ = Σ_μ γ_μ |l_μ(c') − l_μ(c)|²` the decay rate of the coherence `|c'⟩⟨c|`.
pub fn second_order_population_generator(spec: &LindbladSpec) -> Result<EffectiveGenerator> {
    let h = second_order_sparse(spec)?;
    Ok(EffectiveGenerator {
        basis_labels: (0..spec.hilbert_dim())
            .map(|i| config_label(&spec.space, i))
            .collect(),
        matrix: h.to_dense(),
        order: 2,
    })
}

/// Sparse form of [`second_order_population_generator`].
pub fn second_order_sparse(spec: &LindbladSpec) -> Result<SparseMatrix> {
    let d = spec.hilbert_dim();
    let mut diag_jumps = Vec::with_capacity(spec.jumps.len());
    for jump in &spec.jumps {
        if jump.op.iter().any(|(r, c, v)| r != c && v.norm() > 0.0) {
            return Err(Error::param(
                "jumps",
                "second-order population theory needs diagonal jump operators",
            ));
        }
        diag_jumps.push((jump.rate, jump.op.diagonal_values()));
    }
    let mut trip = Vec::new();
    for (r, c, v) in spec.hamiltonian.iter() {
        if r == c {
            continue;
        }
        let kappa: f64 = diag_jumps
            .iter()
            .map(|(g, l)| g * (l[r] - l[c]).norm_sqr())
            .sum();
        if kappa <= 1e-14 {
            return Err(Error::param(
                "jumps",
                "a Hamiltonian coherence is not damped; the population subspace is not isolated",
            ));
        }
        let rate = 2.0 * v.norm_sqr() / kappa;
        trip.push((r, c, re(-rate)));
        trip.push((c, c, re(rate)));
    }
    Ok(SparseMatrix::from_triplets(d, d, trip))
}

/// Model III second-order generator `H_eff` for spin `s` on a ring of `l`
/// sites in the charge-`n` sector (`n = Σ(Sᶻ + S)`).
pub fn effective_generator_iii(
    l: usize,
    s: f64,
    jxy: f64,
    gamma: f64,
    n: i64,
) -> Result<EffectiveGenerator> {
    if gamma <= 0.0 {
        return Err(Error::param(
            "Gamma",
            "must be positive for the perturbative expansion",
        ));
    }
    second_order_population_generator(&model_iii_in(l, s, jxy, 0.0, gamma, n)?)
}

/// Ferromagnetic Heisenberg form of the spin-1/2 effective generator,
/// `(J_xy²/2Γ) Σᵢ [¼ − SᶻᵢSᶻᵢ₊₁ − ½(S⁺ᵢS⁻ᵢ₊₁ + h.c.)]`, on the full
/// configuration space of a ring. The overall sign makes the spectrum
/// nonnegative with zero ground energy.
pub fn effective_heisenberg_iii(l: usize, jxy: f64, gamma: f64) -> Result<EffectiveGenerator> {
    if l < 2 {
        return Err(Error::InvalidLattice("ring needs at least 2 sites".into()));
    }
    if gamma <= 0.0 || !jxy.is_finite() {
        return Err(Error::param("Gamma", "must be positive, J_xy finite"));
    }
    let alg = spin_algebra(1)?;
    let space = HilbertSpace::full(l, alg.clone())?;
    let half = re(0.5);
    let sz = alg.diag.clone();
    let (sp, sm) = (alg.raise.clone(), alg.lower.clone());
    let c = jxy * jxy / (2.0 * gamma);
    let mut terms = Vec::new();
    for i in 0..l {
        let k = (i + 1) % l;
        terms.push(Term::real(0.25 * c, vec![]));
        terms.push(Term::real(-c, vec![(i, sz.clone()), (k, sz.clone())]));
        terms.push(Term::new(-half * c, vec![(i, sp.clone()), (k, sm.clone())]));
        terms.push(Term::new(-half * c, vec![(i, sm.clone()), (k, sp.clone())]));
    }
    let h = space.operator(&terms)?;
    Ok(EffectiveGenerator {
        basis_labels: (0..space.dim()).map(|i| config_label(&space, i)).collect(),
        matrix: h.to_dense(),
        order: 2,
    })
}

/// Lowest eigenvalue of a translation-invariant Hermitian matrix in the
/// momentum-`k` subspace, where `perm` is the basis permutation of one
/// translation and `order` its period.
fn lowest_in_momentum(
    h: &Array2<Complex64>,
    perm: &[usize],
    order: usize,
    k: f64,
) -> Result<Option<f64>> {
    let d = h.nrows();
    // Projector onto T = e^{ik}: (1/order) Σ_t e^{−ikt} Tᵗ.
    let mut proj = Array2::<Complex64>::zeros((d, d));
    let mut cur: Vec<usize> = (0..d).collect();
    for t in 0..order {
        let ph = Complex64::from_polar(1.0 / order as f64, -k * t as f64);
        for c in 0..d {
            proj[[cur[c], c]] += ph;
        }
        cur = cur.iter().map(|&x| perm[x]).collect();
    }
    let rank: f64 = (0..d).map(|i| proj[[i, i]].re).sum();
    if rank < 0.5 {
        return Ok(None);
    }
    let shift = h.iter().map(|v| v.norm()).sum::<f64>() + 1.0;
    let mut m = h.clone();
    for a in 0..d {
        for b in 0..d {
            let id = if a == b { 1.0 } else { 0.0 };
            m[[a, b]] += (re(id) - proj[[a, b]]) * shift;
        }
    }
    let (vals, _) = linalg::eigh(&m)?;
    Ok(vals.first().copied())
}

/// Exact slowest decay rate and second-order prediction at one momentum.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub n: i64,
    pub k: f64,
    /// `−Re λ` of the slowest exact eigenvalue in the momentum block.
    pub exact: f64,
    /// Lowest `H_eff` eigenvalue at the same momentum.
    pub effective: f64,
    /// One-magnon value `(J_xy²/2Γ)(1 − cos k)` (spin 1/2).
    pub one_magnon: f64,
}

impl DispersionPoint {
    pub fn relative_deviation(&self) -> f64 {
        (self.exact - self.effective).abs() / self.effective.abs().max(1e-300)
    }
}

/// Per-momentum comparison of the exact `(n, n)` model III generator with the
/// second-order effective generator, for spin `s` and every `k ≠ 0`.
pub fn validate_iii_second_order(
    l: usize,
    s: f64,
    jxy: f64,
    jz: f64,
    gamma: f64,
    n: i64,
) -> Result<Vec<DispersionPoint>> {
    validate_iii_at(l, s, jxy, jz, gamma, n, &(1..l).collect::<Vec<_>>())
}

/// [`validate_iii_second_order`] restricted to momenta `2πm/L`, `m ∈ ms`.
pub fn validate_iii_at(
    l: usize,
    s: f64,
    jxy: f64,
    jz: f64,
    gamma: f64,
    n: i64,
    ms: &[usize],
) -> Result<Vec<DispersionPoint>> {
    let spec = model_iii_in(l, s, jxy, jz, gamma, n)?;
    if spec.hilbert_dim() > MAX_ED_DIM {
        return Err(Error::param("L", "sector too large for exact comparison"));
    }
    let heff = effective_generator_iii(l, s, jxy, gamma, n)?;
    let perm = spec
        .space
        .site_permutation(spec.translation.as_ref().expect("ring translation"))?;
    let resolver = MomentumResolver::new(&spec, n)?;
    let order = resolver.momenta();
    let mut out = Vec::new();
    for &m in ms {
        if m % order == 0 {
            continue;
        }
        let k = resolver.momentum(m);
        let block = resolver.block(m);
        if block.nrows() == 0 {
            continue;
        }
        let slow = rightmost(&block, 1, &SpectrumOptions::default())?;
        let Some(eff) = lowest_in_momentum(
            &heff.matrix,
            &perm,
            order,
            2.0 * PI * m as f64 / order as f64,
        )?
        else {
            continue;
        };
        out.push(DispersionPoint {
            n,
            k,
            exact: -slow[0].0.re,
            effective: eff,
            one_magnon: jxy * jxy / (2.0 * gamma) * (1.0 - k.cos()),
        });
    }
    Ok(out)
}

/// Goldstone variational energy `⟨k|H_eff|k⟩/⟨k|k⟩` with
/// `|k⟩ ∝ Σ_r e^{ikr} b_r† |I^{n−1}⟩`, where `|I^{n−1}⟩` is the uniform
/// superposition of the charge-`(n−1)` configurations.
///
/// On populations `b_r†` is the image of `ρ → b_r† ρ b_r`, which maps
/// `|q⟩⟨q|` to `(q+1)|q+1⟩⟨q+1|` for `q < 2S`. With this weight the `k = 0`
/// state is the uniform steady state for every spin.
pub fn goldstone_variational_energy(
    l: usize,
    s: f64,
    n: i64,
    k: f64,
    jxy: f64,
    gamma: f64,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::param(
            "n",
            "the Goldstone state needs at least one particle",
        ));
    }
    let alg = spin_algebra_f(s)?;
    let lower = HilbertSpace::sector(l, alg.clone(), n - 1)?;
    let upper = HilbertSpace::sector(l, alg.clone(), n)?;
    if gamma <= 0.0 {
        return Err(Error::param(
            "Gamma",
            "must be positive for the perturbative expansion",
        ));
    }
    let heff = second_order_sparse(&model_iii_in(l, s, jxy, 0.0, gamma, n)?)?;
    let d = upper.dim();
    let max_q = alg.max_charge();
    let mut psi = vec![ZERO; d];
    for i in 0..lower.dim() {
        let cfg = lower.config(i);
        for r in 0..l {
            let q = alg.charge[cfg[r]];
            if q >= max_q {
                continue;
            }
            let mut up = cfg.clone();
            // Charge decreases with the local index.
            up[r] -= 1;
            let idx = upper.index_of(&up).ok_or(Error::NotClosed { state: i })?;
            psi[idx] += Complex64::from_polar((q + 1) as f64, k * r as f64);
        }
    }
    let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
    if norm < 1e-20 {
        return Err(Error::param(
            "k",
            "the Goldstone state vanishes at this momentum and filling",
        ));
    }
    let hpsi = heff.matvec(&psi);
    let e: Complex64 = psi.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum();
    Ok(e.re / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, build_square};
    use crate::lindblad::{model_iii, Jump, ModelKind, ModelLabel};
    use std::sync::Arc;

    fn trace_prod(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
        // tr(a† b)
        let mut t = ZERO;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                t += a[[i, j]].conj() * b[[i, j]];
            }
        }
        t
    }

    #[test]
    fn single_site_modes_are_biorthonormal_eigenpairs() {
        let g = 0.7;
        let modes = single_site_loss_spectrum(g).unwrap();
        let space = Arc::new(HilbertSpace::full(1, spin_algebra(1).unwrap()).unwrap());
        let lower = space.algebra().lower.clone();
        let spec = LindbladSpec::new(
            space,
            SparseMatrix::zeros(2, 2),
            vec![Jump { rate: g, op: lower }],
            ModelLabel::new(ModelKind::Custom),
        )
        .unwrap();
        let vals: Vec<f64> = modes.iter().map(|m| m.eigenvalue).collect();
        assert_eq!(vals, vec![0.0, -0.7, -0.7, -1.4]);
        for (m, a) in modes.iter().enumerate() {
            let lr = spec.apply(&a.right).unwrap();
            assert!((lr - a.right.mapv(|v| v * a.eigenvalue))
                .iter()
                .all(|v| v.norm() < 1e-12));
            for (n, b) in modes.iter().enumerate() {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((trace_prod(&a.left, &b.right) - want).norm() < 1e-12);
            }
            // Left eigen-operator: tr(eᴸ† L[X]) = λ tr(eᴸ† X) for every basis X.
            for r in 0..2 {
                for c in 0..2 {
                    let x = unit(r, c);
                    let lhs = trace_prod(&a.left, &spec.apply(&x).unwrap());
                    let rhs = trace_prod(&a.left, &x) * a.eigenvalue;
                    assert!((lhs - rhs).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn effective_model_i_slowest_modes() {
        let eff = effective_liouvillian_i(&build_chain(8).unwrap(), 0.3, 1.0).unwrap();
        let mut v = eff.eigenvalues().unwrap();
        v.sort_by(|a, b| b.re.total_cmp(&a.re));
        assert!((v[0] - re(-0.4)).norm() < 1e-12);
        assert!(v.iter().all(|l| l.im.abs() < 1e-12));
        let sq = effective_liouvillian_i(&build_square(4, 4).unwrap(), 0.1, 1.0).unwrap();
        let top = sq
            .eigenvalues()
            .unwrap()
            .into_iter()
            .map(|l| l.re)
            .fold(f64::MIN, f64::max);
        assert!((top - (-0.6)).abs() < 1e-12);
        // M + Γ is Hermitian.
        let mut h = eff.matrix.clone();
        for i in 0..h.nrows() {
            h[[i, i]] += re(1.0);
        }
        assert!((h.t().mapv(|v| v.conj()) - &h)
            .iter()
            .all(|v| v.norm() < 1e-15));
    }

    /// Matrix elements tr(e_iᴸ† (−i[H, e_jᴿ])) computed directly on the
    /// model I Hilbert space reproduce the hopping signs.
    #[test]
    fn effective_model_i_matches_direct_projection() {
        let lat = build_chain(4).unwrap();
        let j = 0.3;
        let spec = model_i(&lat, j, 0.0, 1.0).unwrap();
        let space = &spec.space;
        let d = space.dim();
        // ρ₀: A sites down (local index 1), B sites up (index 0).
        let ground: Vec<usize> = (0..4).map(|s| if s % 2 == 0 { 1 } else { 0 }).collect();
        let g = space.index_of(&ground).unwrap();
        let flipped = |site: usize| {
            let mut c = ground.clone();
            c[site] = 1 - c[site];
            space.index_of(&c).unwrap()
        };
        // e_jᴿ = |…↑_j…⟩⟨…↓_j…| with ρ₀ elsewhere.
        let right = |site: usize| {
            let mut m = Array2::<Complex64>::zeros((d, d));
            let (bra, ket) = if site.is_multiple_of(2) {
                (g, flipped(site))
            } else {
                (flipped(site), g)
            };
            m[[ket, bra]] = re(1.0);
            m
        };
        let h = spec.hamiltonian.to_dense();
        let eff = effective_liouvillian_i(&lat, j, 1.0).unwrap();
        for jj in 0..4 {
            let e = right(jj);
            let comm = (h.dot(&e) - e.dot(&h)).mapv(|v| v * Complex64::new(0.0, -1.0));
            for ii in 0..4 {
                if ii == jj {
                    continue;
                }
                // e_iᴸ = |↑⟩⟨↓|_i ⊗ identity elsewhere: sum matching entries.
                let mut val = ZERO;
                for a in 0..d {
                    for b in 0..d {
                        let (ca, cb) = (space.config(a), space.config(b));
                        let ok =
                            ca[ii] == 0 && cb[ii] == 1 && (0..4).all(|s| s == ii || ca[s] == cb[s]);
                        if ok {
                            val += comm[[a, b]];
                        }
                    }
                }
                assert!(
                    (val - eff.matrix[[ii, jj]]).norm() < 1e-12,
                    "({ii},{jj}): {val} vs {}",
                    eff.matrix[[ii, jj]]
                );
            }
        }
    }

    #[test]
    fn perturbative_i_zero_coupling_is_exact() {
        let c = compare_perturbative_i(&build_chain(4).unwrap(), 0.0, 1.0).unwrap();
        assert!(c.max_deviation < 1e-10);
        assert_eq!(c.exact.len(), 4);
    }

    #[test]
    fn perturbative_i_deviation_is_quadratic() {
        let lat = build_chain(4).unwrap();
        let d1 = compare_perturbative_i(&lat, 0.01, 1.0)
            .unwrap()
            .max_deviation;
        let d2 = compare_perturbative_i(&lat, 0.02, 1.0)
            .unwrap()
            .max_deviation;
        let d4 = compare_perturbative_i(&lat, 0.04, 1.0)
            .unwrap()
            .max_deviation;
        assert!(d2 < 0.01);
        assert!((d2 / d1 - 4.0).abs() < 0.5, "{}", d2 / d1);
        assert!((d4 / d2 - 4.0).abs() < 0.5, "{}", d4 / d2);
    }

    #[test]
    fn heisenberg_form_matches_numerical_second_order() {
        let (l, jxy, g) = (6, 0.2, 1.3);
        let full = effective_heisenberg_iii(l, jxy, g).unwrap();
        let space = HilbertSpace::full(l, spin_algebra(1).unwrap()).unwrap();
        for n in 0..=l as i64 {
            let sector = effective_generator_iii(l, 0.5, jxy, g, n).unwrap();
            let sub = HilbertSpace::sector(l, spin_algebra(1).unwrap(), n).unwrap();
            let idx: Vec<usize> = (0..sub.dim())
                .map(|i| space.index_of(&sub.config(i)).unwrap())
                .collect();
            for (a, &fa) in idx.iter().enumerate() {
                for (b, &fb) in idx.iter().enumerate() {
                    assert!((full.matrix[[fa, fb]] - sector.matrix[[a, b]]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn heisenberg_spectrum_and_kernel() {
        let eff = effective_heisenberg_iii(8, 0.2, 1.0).unwrap();
        let vals = eff.hermitian_eigenvalues().unwrap();
        assert!(vals[0] > -1e-13);
        // One zero mode per Sᶻ sector.
        assert_eq!(vals.iter().filter(|v| v.abs() < 1e-12).count(), 9);
        // Fully polarized configuration has energy 0.
        assert!(eff.matrix[[0, 0]].norm() < 1e-15);
    }

    #[test]
    fn one_magnon_dispersion() {
        let (l, jxy, g) = (8, 0.2, 1.0);
        let heff = effective_generator_iii(l, 0.5, jxy, g, 1).unwrap();
        let space = HilbertSpace::sector(l, spin_algebra(1).unwrap(), 1).unwrap();
        let perm = space
            .site_permutation(&(0..l).map(|i| (i + 1) % l).collect::<Vec<_>>())
            .unwrap();
        let e = lowest_in_momentum(&heff.matrix, &perm, l, PI / 4.0)
            .unwrap()
            .unwrap();
        assert!((e - 0.0058579).abs() < 1e-7, "{e}");
        let e0 = lowest_in_momentum(&heff.matrix, &perm, l, 0.0)
            .unwrap()
            .unwrap();
        assert!(e0.abs() < 1e-14);
    }

    #[test]
    fn goldstone_energy_scaling() {
        let (jxy, g) = (0.2, 1.0);
        assert!(
            goldstone_variational_energy(12, 0.5, 3, 0.0, jxy, g)
                .unwrap()
                .abs()
                < 1e-14
        );
        assert!(
            goldstone_variational_energy(8, 1.0, 5, 0.0, jxy, g)
                .unwrap()
                .abs()
                < 1e-14
        );
        let k = 2.0 * PI / 12.0;
        let e1 = goldstone_variational_energy(12, 0.5, 3, k, jxy, g).unwrap();
        let e2 = goldstone_variational_energy(12, 0.5, 3, 2.0 * k, jxy, g).unwrap();
        assert!(e1 > 0.0);
        assert!((e2 / e1 - 4.0).abs() < 0.3, "{}", e2 / e1);
        let s1 = goldstone_variational_energy(12, 1.0, 4, k, jxy, g).unwrap();
        let s2 = goldstone_variational_energy(12, 1.0, 4, 2.0 * k, jxy, g).unwrap();
        assert!(s1 > 0.0 && (s2 / s1 - 4.0).abs() < 0.3, "{}", s2 / s1);
    }

    #[test]
    fn second_order_needs_diagonal_jumps() {
        let spec = model_i(&build_chain(2).unwrap(), 0.1, 0.0, 1.0).unwrap();
        assert!(second_order_population_generator(&spec).is_err());
    }

    #[test]
    fn second_order_agrees_with_exact_dispersion() {
        let pts = validate_iii_second_order(6, 0.5, 0.1, 0.0, 1.0, 3).unwrap();
        assert_eq!(pts.len(), 5);
        for p in &pts {
            assert!(p.relative_deviation() < 0.05, "{p:?}");
        }
        let half = validate_iii_second_order(6, 0.5, 0.05, 0.0, 1.0, 3).unwrap();
        let big = pts
            .iter()
            .map(|p| p.relative_deviation())
            .fold(0.0, f64::max);
        let small = half
            .iter()
            .map(|p| p.relative_deviation())
            .fold(0.0, f64::max);
        assert!((big / small - 4.0).abs() < 1.0, "{big} {small}");
    }

    #[test]
    fn exact_steady_states_are_configuration_averages() {
        let spec = model_iii(4, 1.0, 0.37, -0.8, 0.6).unwrap();
        let d = spec.hilbert_dim();
        for n in 0..=8 {
            let rho = Array2::from_shape_fn((d, d), |(a, b)| {
                if a == b && spec.space.charge_of(a) == n {
                    re(1.0)
                } else {
                    ZERO
                }
            });
            assert!(spec.apply(&rho).unwrap().iter().all(|v| v.norm() < 1e-12));
        }
    }
}
