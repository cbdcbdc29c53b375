// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Lindblad generators, the vectorized superoperator, strong/weak U(1)
//! classification and symmetry-sector blocks.
//!
//! Generators use the factor-2 convention
//! `L[ρ] = −i[H, ρ] + Σ_μ γ_μ (2 L_μ ρ L_μ† − {L_μ†L_μ, ρ})`.
//! A density matrix is vectorized row-major: `|ρ⟩⟩[j·D + k] = ρ[j, k]`, so the
//! generator reads `K⊗I + I⊗conj(K) + Σ 2γ L⊗conj(L)` with `K = −iH − Σ γ L†L`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    boson_algebra, spin_algebra, spin_algebra_f, ChargeOperator, HilbertSpace, OperatorMatrix, Term,
};
use crate::lattice::{Lattice, Sublattice};
use crate::sparse::SparseMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    I,
    II,
    III,
    EffN0,
    EffNHalf,
    Custom,
}

/// Parameter record attached to a generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelLabel {
    pub model: ModelKind,
    pub j: f64,
    pub jz: f64,
    pub gamma: f64,
    pub gamma_z: f64,
    pub jxy: f64,
    pub s: f64,
    pub mu: f64,
}

impl ModelLabel {
    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            j: 0.0,
            jz: 0.0,
            gamma: 0.0,
            gamma_z: 0.0,
            jxy: 0.0,
            s: 0.5,
            mu: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Jump {
    pub rate: f64,
    pub op: OperatorMatrix,
}

/// A Hamiltonian plus rated jump operators on a (possibly charge-restricted)
/// Hilbert space.
#[derive(Clone, Debug)]
pub struct LindbladSpec {
    pub space: Arc<HilbertSpace>,
    pub hamiltonian: OperatorMatrix,
    pub jumps: Vec<Jump>,
    pub label: ModelLabel,
    /// Per-site weights of the model's natural U(1) charge.
    pub charge_weights: Vec<i64>,
    /// Site permutation generating the lattice translations the model is
    /// invariant under, if any.
    pub translation: Option<Vec<usize>>,
}

impl LindbladSpec {
    pub fn new(
        space: Arc<HilbertSpace>,
        hamiltonian: OperatorMatrix,
        jumps: Vec<Jump>,
        label: ModelLabel,
    ) -> Result<Self> {
        let d = space.dim();
        if hamiltonian.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "Hamiltonian {:?} on a space of dimension {d}",
                hamiltonian.shape()
            )));
        }
        if !hamiltonian.is_hermitian(1e-12) {
            return Err(Error::param("hamiltonian", "not Hermitian"));
        }
        for (m, j) in jumps.iter().enumerate() {
            if !(j.rate >= 0.0 && j.rate.is_finite()) {
                return Err(Error::param(
                    "rate",
                    format!("jump {m} has rate {}", j.rate),
                ));
            }
            if j.op.shape() != (d, d) {
                return Err(Error::DimensionMismatch(format!(
                    "jump {m} has shape {:?} on a space of dimension {d}",
                    j.op.shape()
                )));
            }
        }
        let sites = space.sites();
        Ok(Self {
            space,
            hamiltonian,
            jumps,
            label,
            charge_weights: vec![1; sites],
            translation: None,
        })
    }

    pub fn hilbert_dim(&self) -> usize {
        self.space.dim()
    }

    /// The model's natural charge operator on its Hilbert space.
    pub fn charge(&self) -> ChargeOperator {
        crate::hilbert::weighted_charge(&self.space, &self.charge_weights)
    }

    /// Total particle number `Σ_i n_i`.
    pub fn number(&self) -> ChargeOperator {
        crate::hilbert::total_charge(&self.space)
    }

    /// `L[ρ]` for a dense density matrix.
    pub fn apply(&self, rho: &Array2<Complex64>) -> Result<Array2<Complex64>> {
        let d = self.hilbert_dim();
        if rho.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "density matrix {:?} for Hilbert dimension {d}",
                rho.dim()
            )));
        }
        let h = &self.hamiltonian;
        let mut out = (sp_dense(h, rho) - dense_sp(rho, h)) * (-I);
        for j in &self.jumps {
            if j.rate == 0.0 {
                continue;
            }
            let ldag = j.op.adjoint();
            let ldl = ldag.matmul(&j.op)?;
            let lrl = dense_sp(&sp_dense(&j.op, rho), &ldag);
            out = out + (lrl * re(2.0) - sp_dense(&ldl, rho) - dense_sp(rho, &ldl)) * re(j.rate);
        }
        Ok(out)
    }
}

pub(crate) fn sp_dense(a: &SparseMatrix, b: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    for (r, c, v) in a.iter() {
        let row = b.row(c);
        out.row_mut(r).zip_mut_with(&row, |o, x| *o += v * x);
    }
    out
}

pub(crate) fn dense_sp(a: &Array2<Complex64>, b: &SparseMatrix) -> Array2<Complex64> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    for (r, c, v) in b.iter() {
        let col = a.column(r);
        out.column_mut(c).zip_mut_with(&col, |o, x| *o += x * v);
    }
    out
}

fn pauli(space: &HilbertSpace) -> Result<(SparseMatrix, SparseMatrix, SparseMatrix)> {
    let a = space.algebra();
    if a.dim != 2 {
        return Err(Error::param("S", "model requires spin-1/2 sites"));
    }
    Ok((a.raise.clone(), a.lower.clone(), a.diag.scale(re(2.0))))
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be a finite nonnegative rate, got {v}"),
        ))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite"))
    }
}

/// `Σ_bonds J(σ⁺σ⁻ + σ⁻σ⁺) + J_z σᶻσᶻ` on spin-1/2 sites.
fn xxz_bonds(
    space: &HilbertSpace,
    bonds: &[(usize, usize)],
    j: f64,
    jz: f64,
) -> Result<OperatorMatrix> {
    let (sp, sm, sz) = pauli(space)?;
    let mut terms = Vec::new();
    for &(a, b) in bonds {
        if j != 0.0 {
            terms.push(Term::real(j, vec![(a, sp.clone()), (b, sm.clone())]));
            terms.push(Term::real(j, vec![(a, sm.clone()), (b, sp.clone())]));
        }
        if jz != 0.0 {
            terms.push(Term::real(jz, vec![(a, sz.clone()), (b, sz.clone())]));
        }
    }
    space.operator(&terms)
}

fn chain_translation(lattice: &Lattice) -> Option<Vec<usize>> {
    if lattice.dimension() == 1 {
        lattice.translation(&[2]).ok()
    } else {
        None
    }
}

/// Model I: XXZ hopping with loss `σ⁻` on A and gain `σ⁺` on B, all at rate Γ.
pub fn model_i(lattice: &Lattice, j: f64, jz: f64, gamma: f64) -> Result<LindbladSpec> {
    check_finite("J", j)?;
    check_finite("Jz", jz)?;
    check_rate("Gamma", gamma)?;
    let space = Arc::new(HilbertSpace::full(lattice.site_count(), spin_algebra(1)?)?);
    let h = xxz_bonds(&space, &lattice.bonds(), j, jz)?;
    let (sp, sm, _) = pauli(&space)?;
    let mut jumps = Vec::new();
    for s in 0..lattice.site_count() {
        let local = match lattice.sublattice(s) {
            Sublattice::A => &sm,
            Sublattice::B => &sp,
        };
        jumps.push(Jump {
            rate: gamma,
            op: space.embed(local, s)?,
        });
    }
    let mut label = ModelLabel::new(ModelKind::I);
    label.j = j;
    label.jz = jz;
    label.gamma = gamma;
    let mut spec = LindbladSpec::new(space, h, jumps, label)?;
    spec.translation = chain_translation(lattice);
    Ok(spec)
}

/// Model II on the full space: jumps `σ⁺_B σ⁻_A` per bond at rate Γ and
/// dephasing `σᶻ` at rate Γ_z.
pub fn model_ii(
    lattice: &Lattice,
    j: f64,
    jz: f64,
    gamma: f64,
    gamma_z: f64,
) -> Result<LindbladSpec> {
    let space = HilbertSpace::full(lattice.site_count(), spin_algebra(1)?)?;
    model_ii_on(Arc::new(space), lattice, j, jz, gamma, gamma_z)
}

/// Model II restricted to the charge-`n` sector (a strong-symmetry block).
pub fn model_ii_in(
    lattice: &Lattice,
    j: f64,
    jz: f64,
    gamma: f64,
    gamma_z: f64,
    n: i64,
) -> Result<LindbladSpec> {
    let space = HilbertSpace::sector(lattice.site_count(), spin_algebra(1)?, n)?;
    model_ii_on(Arc::new(space), lattice, j, jz, gamma, gamma_z)
}

fn model_ii_on(
    space: Arc<HilbertSpace>,
    lattice: &Lattice,
    j: f64,
    jz: f64,
    gamma: f64,
    gamma_z: f64,
) -> Result<LindbladSpec> {
    check_finite("J", j)?;
    check_finite("Jz", jz)?;
    check_rate("Gamma", gamma)?;
    check_rate("Gamma_z", gamma_z)?;
    let bonds = lattice.bonds();
    let h = xxz_bonds(&space, &bonds, j, jz)?;
    let (sp, sm, sz) = pauli(&space)?;
    let mut jumps = Vec::new();
    for &(a, b) in &bonds {
        jumps.push(Jump {
            rate: gamma,
            op: space.operator(&[Term::real(1.0, vec![(b, sp.clone()), (a, sm.clone())])])?,
        });
    }
    if gamma_z > 0.0 {
        for s in 0..lattice.site_count() {
            jumps.push(Jump {
                rate: gamma_z,
                op: space.embed(&sz, s)?,
            });
        }
    }
    let mut label = ModelLabel::new(ModelKind::II);
    label.j = j;
    label.jz = jz;
    label.gamma = gamma;
    label.gamma_z = gamma_z;
    let mut spec = LindbladSpec::new(space, h, jumps, label)?;
    spec.translation = chain_translation(lattice);
    Ok(spec)
}

/// Model III: spin-S XXZ ring of `l` sites with `Sᶻ` dephasing at rate Γ.
pub fn model_iii(l: usize, s: f64, jxy: f64, jz: f64, gamma: f64) -> Result<LindbladSpec> {
    if l < 2 {
        return Err(Error::InvalidLattice("ring needs at least 2 sites".into()));
    }
    let space = HilbertSpace::full(l, spin_algebra_f(s)?)?;
    model_iii_on(Arc::new(space), s, jxy, jz, gamma)
}

/// Model III restricted to total charge `n = Σ(Sᶻ + S)`.
pub fn model_iii_in(
    l: usize,
    s: f64,
    jxy: f64,
    jz: f64,
    gamma: f64,
    n: i64,
) -> Result<LindbladSpec> {
    if l < 2 {
        return Err(Error::InvalidLattice("ring needs at least 2 sites".into()));
    }
    let space = HilbertSpace::sector(l, spin_algebra_f(s)?, n)?;
    model_iii_on(Arc::new(space), s, jxy, jz, gamma)
}

fn model_iii_on(
    space: Arc<HilbertSpace>,
    s: f64,
    jxy: f64,
    jz: f64,
    gamma: f64,
) -> Result<LindbladSpec> {
    check_finite("Jxy", jxy)?;
    check_finite("Jz", jz)?;
    check_rate("Gamma", gamma)?;
    let l = space.sites();
    let a = space.algebra().clone();
    let mut terms = Vec::new();
    for i in 0..l {
        let k = (i + 1) % l;
        if jxy != 0.0 {
            terms.push(Term::real(
                0.5 * jxy,
                vec![(i, a.raise.clone()), (k, a.lower.clone())],
            ));
            terms.push(Term::real(
                0.5 * jxy,
                vec![(i, a.lower.clone()), (k, a.raise.clone())],
            ));
        }
        if jz != 0.0 {
            terms.push(Term::real(
                jz,
                vec![(i, a.diag.clone()), (k, a.diag.clone())],
            ));
        }
    }
    let h = space.operator(&terms)?;
    let jumps = (0..l)
        .map(|i| {
            Ok(Jump {
                rate: gamma,
                op: space.embed(&a.diag, i)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut label = ModelLabel::new(ModelKind::III);
    label.jxy = jxy;
    label.jz = jz;
    label.gamma = gamma;
    label.s = s;
    let mut spec = LindbladSpec::new(space, h, jumps, label)?;
    spec.translation = Some((0..l).map(|i| (i + 1) % l).collect());
    Ok(spec)
}

/// Large-S effective model near empty filling: boson hopping, incoherent
/// A→B hops `b†_B b_A` at rate Γ and optional dephasing `2n − 1` at rate Γ_z.
pub fn model_eff_n0(
    lattice: &Lattice,
    j: f64,
    gamma: f64,
    gamma_z: f64,
    n_max: u32,
) -> Result<LindbladSpec> {
    let space = HilbertSpace::full(lattice.site_count(), boson_algebra(n_max)?)?;
    model_eff_n0_on(Arc::new(space), lattice, j, gamma, gamma_z)
}

/// [`model_eff_n0`] restricted to `n` bosons.
pub fn model_eff_n0_in(
    lattice: &Lattice,
    j: f64,
    gamma: f64,
    gamma_z: f64,
    n_max: u32,
    n: i64,
) -> Result<LindbladSpec> {
    let space = HilbertSpace::sector(lattice.site_count(), boson_algebra(n_max)?, n)?;
    model_eff_n0_on(Arc::new(space), lattice, j, gamma, gamma_z)
}

fn model_eff_n0_on(
    space: Arc<HilbertSpace>,
    lattice: &Lattice,
    j: f64,
    gamma: f64,
    gamma_z: f64,
) -> Result<LindbladSpec> {
    check_finite("J", j)?;
    check_rate("Gamma", gamma)?;
    check_rate("Gamma_z", gamma_z)?;
    let a = space.algebra().clone();
    let bonds = lattice.bonds();
    let mut terms = Vec::new();
    for &(x, y) in &bonds {
        terms.push(Term::real(
            j,
            vec![(x, a.raise.clone()), (y, a.lower.clone())],
        ));
        terms.push(Term::real(
            j,
            vec![(y, a.raise.clone()), (x, a.lower.clone())],
        ));
    }
    let h = space.operator(&terms)?;
    let mut jumps = Vec::new();
    for &(x, y) in &bonds {
        jumps.push(Jump {
            rate: gamma,
            op: space.operator(&[Term::real(
                1.0,
                vec![(y, a.raise.clone()), (x, a.lower.clone())],
            )])?,
        });
    }
    if gamma_z > 0.0 {
        let sz = a.diag.scale(re(2.0)).add_scaled(&a.identity(), re(-1.0))?;
        for s in 0..space.sites() {
            jumps.push(Jump {
                rate: gamma_z,
                op: space.embed(&sz, s)?,
            });
        }
    }
    let mut label = ModelLabel::new(ModelKind::EffN0);
    label.j = j;
    label.gamma = gamma;
    label.gamma_z = gamma_z;
    let mut spec = LindbladSpec::new(space, h, jumps, label)?;
    spec.translation = chain_translation(lattice);
    Ok(spec)
}

/// Large-S effective model near half filling: pair creation/annihilation
/// `J(b†b† + bb)` per bond and pair loss `b_i b_j` at rate Γ.
pub fn model_eff_nhalf(lattice: &Lattice, j: f64, gamma: f64, n_max: u32) -> Result<LindbladSpec> {
    let space = HilbertSpace::full(lattice.site_count(), boson_algebra(n_max)?)?;
    model_eff_nhalf_on(Arc::new(space), lattice, j, gamma)
}

/// [`model_eff_nhalf`] restricted to `Σ_A n − Σ_B n = q`.
pub fn model_eff_nhalf_in(
    lattice: &Lattice,
    j: f64,
    gamma: f64,
    n_max: u32,
    q: i64,
) -> Result<LindbladSpec> {
    let space = HilbertSpace::weighted_sector(
        lattice.site_count(),
        boson_algebra(n_max)?,
        staggered_weights(lattice),
        q,
    )?;
    model_eff_nhalf_on(Arc::new(space), lattice, j, gamma)
}

pub fn staggered_weights(lattice: &Lattice) -> Vec<i64> {
    (0..lattice.site_count())
        .map(|s| match lattice.sublattice(s) {
            Sublattice::A => 1,
            Sublattice::B => -1,
        })
        .collect()
}

fn model_eff_nhalf_on(
    space: Arc<HilbertSpace>,
    lattice: &Lattice,
    j: f64,
    gamma: f64,
) -> Result<LindbladSpec> {
    check_finite("J", j)?;
    check_rate("Gamma", gamma)?;
    let a = space.algebra().clone();
    let bonds = lattice.bonds();
    let mut terms = Vec::new();
    for &(x, y) in &bonds {
        terms.push(Term::real(
            j,
            vec![(x, a.raise.clone()), (y, a.raise.clone())],
        ));
        terms.push(Term::real(
            j,
            vec![(y, a.lower.clone()), (x, a.lower.clone())],
        ));
    }
    let h = space.operator(&terms)?;
    let mut jumps = Vec::new();
    for &(x, y) in &bonds {
        jumps.push(Jump {
            rate: gamma,
            op: space.operator(&[Term::real(
                1.0,
                vec![(x, a.lower.clone()), (y, a.lower.clone())],
            )])?,
        });
    }
    let mut label = ModelLabel::new(ModelKind::EffNHalf);
    label.j = j;
    label.gamma = gamma;
    let mut spec = LindbladSpec::new(space, h, jumps, label)?;
    spec.charge_weights = staggered_weights(lattice);
    spec.translation = chain_translation(lattice);
    Ok(spec)
}

/// `H → H + μN` with `N` the model's natural charge; jumps unchanged.
pub fn add_chemical_shift(spec: &LindbladSpec, mu: f64) -> Result<LindbladSpec> {
    check_finite("mu", mu)?;
    let mut out = spec.clone();
    out.hamiltonian = spec.hamiltonian.add_scaled(&spec.charge().op, re(mu))?;
    out.label.mu += mu;
    Ok(out)
}

/// Fidelity loss rate `−⟨ψ|L[|ψ⟩⟨ψ|]|ψ⟩` of a normalised pure state.
pub fn pure_state_decay_rate(spec: &LindbladSpec, psi: &[Complex64]) -> Result<f64> {
    let d = spec.hilbert_dim();
    if psi.len() != d {
        return Err(Error::DimensionMismatch("state length".into()));
    }
    let rho = Array2::from_shape_fn((d, d), |(a, b)| psi[a] * psi[b].conj());
    let l = spec.apply(&rho)?;
    let mut f = ZERO;
    for a in 0..d {
        for b in 0..d {
            f += psi[a].conj() * l[[a, b]] * psi[b];
        }
    }
    Ok(-f.re)
}

fn columns(m: &SparseMatrix) -> Vec<Vec<(usize, Complex64)>> {
    let mut c = vec![Vec::new(); m.ncols()];
    for (r, cc, v) in m.iter() {
        c[cc].push((r, v));
    }
    c
}

type Columns = Vec<Vec<(usize, Complex64)>>;

/// Vectorized generator, assembled lazily column by column.
#[derive(Clone, Debug)]
pub struct Superoperator {
    d: usize,
    k_cols: Columns,
    jump_cols: Vec<(f64, Columns)>,
    charge: Vec<i64>,
}

/// Doubled-space index of the pair `(left j, right k)`.
pub fn pair_index(d: usize, j: usize, k: usize) -> usize {
    j * d + k
}

/// Build the superoperator of `spec` (see the module docs for conventions).
pub fn vectorize(spec: &LindbladSpec) -> Result<Superoperator> {
    let d = spec.hilbert_dim();
    let mut k = spec.hamiltonian.scale(-I);
    let mut jump_cols = Vec::new();
    for j in &spec.jumps {
        if j.op.shape() != (d, d) {
            return Err(Error::DimensionMismatch("jump operator shape".into()));
        }
        if j.rate == 0.0 {
            continue;
        }
        let ldl = j.op.adjoint().matmul(&j.op)?;
        k = k.add_scaled(&ldl, re(-j.rate))?;
        jump_cols.push((2.0 * j.rate, columns(&j.op)));
    }
    Ok(Superoperator {
        d,
        k_cols: columns(&k),
        jump_cols,
        charge: spec.charge().eigenvalues,
    })
}

impl Superoperator {
    /// Hilbert-space dimension D.
    pub fn hilbert_dim(&self) -> usize {
        self.d
    }

    /// Doubled-space dimension D².
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub fn charge(&self) -> &[i64] {
        &self.charge
    }

    /// `(left, right)` physical indices of a doubled-space index.
    pub fn basis_pair(&self, index: usize) -> (usize, usize) {
        (index / self.d, index % self.d)
    }

    /// Entries `(row, value)` of column `(j, k)`; rows may repeat.
    pub fn column(&self, j: usize, k: usize, out: &mut Vec<(usize, Complex64)>) {
        let d = self.d;
        out.clear();
        for &(a, v) in &self.k_cols[j] {
            out.push((a * d + k, v));
        }
        for &(b, v) in &self.k_cols[k] {
            out.push((j * d + b, v.conj()));
        }
        for (w, cols) in &self.jump_cols {
            for &(a, va) in &cols[j] {
                for &(b, vb) in &cols[k] {
                    out.push((a * d + b, re(*w) * va * vb.conj()));
                }
            }
        }
    }

    /// Fully assembled sparse matrix.
    pub fn matrix(&self) -> SparseMatrix {
        let d = self.d;
        let mut trip = Vec::new();
        let mut buf = Vec::new();
        for j in 0..d {
            for k in 0..d {
                self.column(j, k, &mut buf);
                let c = j * d + k;
                trip.extend(buf.iter().map(|&(r, v)| (r, c, v)));
            }
        }
        SparseMatrix::from_triplets(d * d, d * d, trip)
    }

    /// Restriction to the given doubled-space indices, with the Frobenius norm
    /// of entries leaving the block from its columns.
    pub fn block(&self, indices: &[usize]) -> (SparseMatrix, f64) {
        let pos: HashMap<usize, usize> = indices.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let mut trip = Vec::new();
        let mut leak: HashMap<(usize, usize), Complex64> = HashMap::new();
        let mut buf = Vec::new();
        for (c, &idx) in indices.iter().enumerate() {
            let (j, k) = self.basis_pair(idx);
            self.column(j, k, &mut buf);
            for &(r, v) in &buf {
                match pos.get(&r) {
                    Some(&p) => trip.push((p, c, v)),
                    None => *leak.entry((r, c)).or_insert(ZERO) += v,
                }
            }
        }
        let n = indices.len();
        let leakage = leak.values().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        (SparseMatrix::from_triplets(n, n, trip), leakage)
    }

    /// `L|ρ⟩⟩` for a vectorized density matrix.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let d = self.d;
        let mut y = vec![ZERO; d * d];
        let mut buf = Vec::new();
        for (c, &xc) in x.iter().enumerate() {
            if xc == ZERO {
                continue;
            }
            self.column(c / d, c % d, &mut buf);
            for &(r, v) in &buf {
                y[r] += v * xc;
            }
        }
        y
    }

    /// Norms of the commutators of the generator with `N⊗I`, `I⊗Nᵀ` and
    /// `N⊗I − I⊗Nᵀ`, relative to the generator's Frobenius norm.
    pub fn charge_commutators(&self, charge: &[i64]) -> (f64, f64, f64, f64) {
        let d = self.d;
        let (mut left, mut right, mut diff, mut total) = (0.0, 0.0, 0.0, 0.0);
        let mut buf = Vec::new();
        let mut acc: HashMap<usize, Complex64> = HashMap::new();
        for j in 0..d {
            for k in 0..d {
                self.column(j, k, &mut buf);
                acc.clear();
                for &(r, v) in &buf {
                    *acc.entry(r).or_insert(ZERO) += v;
                }
                for (&r, v) in &acc {
                    let (a, b) = (r / d, r % d);
                    let w = v.norm_sqr();
                    let dl = (charge[a] - charge[j]) as f64;
                    let dr = (charge[b] - charge[k]) as f64;
                    left += w * dl * dl;
                    right += w * dr * dr;
                    diff += w * (dl - dr) * (dl - dr);
                    total += w;
                }
            }
        }
        (left.sqrt(), right.sqrt(), diff.sqrt(), total.sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryClass {
    Strong,
    Weak,
    None,
}

/// Classify the U(1) symmetry generated by `charge`: strong if the
/// vectorized generator commutes with `N⊗I` and `I⊗Nᵀ`, weak if it commutes
/// only with their difference.
pub fn symmetry_check(spec: &LindbladSpec, charge: &ChargeOperator) -> Result<SymmetryClass> {
    let sup = vectorize(spec)?;
    if charge.dim() != sup.hilbert_dim() {
        return Err(Error::DimensionMismatch("charge operator dimension".into()));
    }
    Ok(classify(&sup, &charge.eigenvalues))
}

fn classify(sup: &Superoperator, charge: &[i64]) -> SymmetryClass {
    let (left, right, diff, total) = sup.charge_commutators(charge);
    let tol = 1e-10 * total.max(1.0);
    if left <= tol && right <= tol {
        SymmetryClass::Strong
    } else if diff <= tol {
        SymmetryClass::Weak
    } else {
        SymmetryClass::None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SectorLabel {
    /// `(N_L, N_R)`.
    Pair(i64, i64),
    /// `N_L − N_R`.
    Difference(i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorMode {
    Pair,
    Difference,
}

#[derive(Clone, Debug)]
pub struct SectorBlock {
    pub label: SectorLabel,
    /// Doubled-space indices, ascending.
    pub indices: Vec<usize>,
    pub matrix: SparseMatrix,
    /// Frobenius norm of generator entries connecting this block to others.
    pub leakage: f64,
    /// Hilbert-space dimension D of the parent generator.
    pub hilbert_dim: usize,
}

impl SectorBlock {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// Indices of the doubled-space basis grouped by sector label.
pub fn sector_indices(sup: &Superoperator, mode: SectorMode) -> BTreeMap<SectorLabel, Vec<usize>> {
    let d = sup.d;
    let mut groups: BTreeMap<SectorLabel, Vec<usize>> = BTreeMap::new();
    for j in 0..d {
        for k in 0..d {
            let (nl, nr) = (sup.charge[j], sup.charge[k]);
            let label = match mode {
                SectorMode::Pair => SectorLabel::Pair(nl, nr),
                SectorMode::Difference => SectorLabel::Difference(nl - nr),
            };
            groups.entry(label).or_default().push(j * d + k);
        }
    }
    groups
}

/// Split the generator into symmetry blocks of the superoperator's charge.
/// Pair mode requires a strong symmetry, difference mode at least a weak one.
pub fn sector_decompose(sup: &Superoperator, mode: SectorMode) -> Result<Vec<SectorBlock>> {
    let class = classify(sup, &sup.charge);
    match (mode, class) {
        (_, SymmetryClass::None) => {
            return Err(Error::Symmetry("generator has no U(1) symmetry".into()))
        }
        (SectorMode::Pair, SymmetryClass::Weak) => {
            return Err(Error::Symmetry(
                "pair sectors need a strong symmetry; this generator is only weakly symmetric"
                    .into(),
            ))
        }
        _ => {}
    }
    let groups: Vec<(SectorLabel, Vec<usize>)> = sector_indices(sup, mode).into_iter().collect();
    Ok(groups
        .into_par_iter()
        .map(|(label, indices)| {
            let (matrix, leakage) = sup.block(&indices);
            SectorBlock {
                label,
                indices,
                matrix,
                leakage,
                hilbert_dim: sup.d,
            }
        })
        .collect())
}

/// A single block by label, without assembling the others.
pub fn sector_block(sup: &Superoperator, label: SectorLabel) -> SectorBlock {
    let d = sup.d;
    let indices: Vec<usize> = (0..d * d)
        .filter(|&i| {
            let (nl, nr) = (sup.charge[i / d], sup.charge[i % d]);
            match label {
                SectorLabel::Pair(a, b) => nl == a && nr == b,
                SectorLabel::Difference(q) => nl - nr == q,
            }
        })
        .collect();
    let (matrix, leakage) = sup.block(&indices);
    SectorBlock {
        label,
        indices,
        matrix,
        leakage,
        hilbert_dim: d,
    }
}
