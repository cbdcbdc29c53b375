// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Local spin-S and truncated-boson algebras, many-body basis construction
//! (full space or a fixed-charge sector) and sparse operator assembly.
//!
//! Basis states are product configurations ordered site-major: site 0 is the
//! most significant digit and the local index on the last site runs fastest.
//! For spins local index 0 is `m = +S`; for bosons the local index is the
//! occupation number.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Sparse columns: `(row, value)` lists indexed by column.
type Columns = Vec<Vec<(usize, Complex64)>>;

/// Sparse operator on a many-body Hilbert space.
pub type OperatorMatrix = SparseMatrix;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgebraKind {
    /// Spin `S = two_s / 2`.
    Spin { two_s: u32 },
    /// Boson truncated at `n_max` quanta.
    Boson { n_max: u32 },
}

/// Single-site operator algebra: raising, lowering and diagonal operator
/// (`S⁺, S⁻, Sᶻ` or `b†, b, n`) plus the U(1) charge of each local state.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalAlgebra {
    pub kind: AlgebraKind,
    pub dim: usize,
    pub raise: SparseMatrix,
    pub lower: SparseMatrix,
    pub diag: SparseMatrix,
    /// Charge `n = Sᶻ + S` (spin) or occupation (boson) of each local state.
    pub charge: Vec<i64>,
}

/// Spin-S algebra with `2S = two_s`.
pub fn spin_algebra(two_s: u32) -> Result<LocalAlgebra> {
    if two_s == 0 {
        return Err(Error::param("S", "2S must be a positive integer"));
    }
    let dim = two_s as usize + 1;
    let s = two_s as f64 / 2.0;
    let m = |i: usize| s - i as f64;
    // S⁺|m⟩ = sqrt(s(s+1) - m(m+1)) |m+1⟩, and |m+1⟩ has index i-1.
    let raise = SparseMatrix::from_triplets(
        dim,
        dim,
        (1..dim).map(|i| (i - 1, i, re((s * (s + 1.0) - m(i) * (m(i) + 1.0)).sqrt()))),
    );
    let lower = raise.adjoint();
    let diag = SparseMatrix::diagonal(&(0..dim).map(|i| re(m(i))).collect::<Vec<_>>());
    Ok(LocalAlgebra {
        kind: AlgebraKind::Spin { two_s },
        dim,
        raise,
        lower,
        diag,
        charge: (0..dim).map(|i| two_s as i64 - i as i64).collect(),
    })
}

/// Spin algebra from a real `S`; `2S` must be a positive integer.
pub fn spin_algebra_f(s: f64) -> Result<LocalAlgebra> {
    let two_s = 2.0 * s;
    if !(two_s.is_finite() && two_s >= 1.0 && (two_s - two_s.round()).abs() < 1e-12) {
        return Err(Error::param(
            "S",
            format!("{s} is not a positive half-integer"),
        ));
    }
    spin_algebra(two_s.round() as u32)
}

/// Boson algebra truncated at `n_max` quanta (`b†|n_max⟩ = 0`).
pub fn boson_algebra(n_max: u32) -> Result<LocalAlgebra> {
    if n_max < 1 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let dim = n_max as usize + 1;
    let raise = SparseMatrix::from_triplets(
        dim,
        dim,
        (0..dim - 1).map(|n| (n + 1, n, re(((n + 1) as f64).sqrt()))),
    );
    let lower = raise.adjoint();
    let diag = SparseMatrix::diagonal(&(0..dim).map(|n| re(n as f64)).collect::<Vec<_>>());
    Ok(LocalAlgebra {
        kind: AlgebraKind::Boson { n_max },
        dim,
        raise,
        lower,
        diag,
        charge: (0..dim as i64).collect(),
    })
}

impl LocalAlgebra {
    pub fn identity(&self) -> SparseMatrix {
        SparseMatrix::identity(self.dim)
    }

    /// Largest local charge (2S or n_max).
    pub fn max_charge(&self) -> i64 {
        *self.charge.iter().max().unwrap_or(&0)
    }

    /// Hermitian `raise + lower` (σˣ for spin 1/2).
    pub fn x(&self) -> SparseMatrix {
        self.raise
            .add_scaled(&self.lower, re(1.0))
            .expect("local matrices share a shape")
    }
}

/// Many-body basis: either the full product space or the states whose
/// weighted charge `Σ_i w_i n_i` equals a fixed value.
#[derive(Clone, Debug)]
pub struct HilbertSpace {
    sites: usize,
    algebra: LocalAlgebra,
    states: Option<Vec<u64>>,
    lookup: HashMap<u64, usize>,
    weights: Option<Vec<i64>>,
    sector: Option<i64>,
}

impl HilbertSpace {
    pub fn full(sites: usize, algebra: LocalAlgebra) -> Result<Self> {
        let d = algebra.dim as f64;
        if sites == 0 || d.powi(sites as i32) > 2f64.powi(40) {
            return Err(Error::param("sites", "full Hilbert space too large"));
        }
        Ok(Self {
            sites,
            algebra,
            states: None,
            lookup: HashMap::new(),
            weights: None,
            sector: None,
        })
    }

    /// States with `Σ_i n_i = value`.
    pub fn sector(sites: usize, algebra: LocalAlgebra, value: i64) -> Result<Self> {
        Self::weighted_sector(sites, algebra, vec![1; sites], value)
    }

    /// States with `Σ_i weights[i] n_i = value`.
    pub fn weighted_sector(
        sites: usize,
        algebra: LocalAlgebra,
        weights: Vec<i64>,
        value: i64,
    ) -> Result<Self> {
        if weights.len() != sites {
            return Err(Error::DimensionMismatch(
                "one charge weight per site".into(),
            ));
        }
        if sites == 0 || sites > 40 {
            return Err(Error::param("sites", "must be between 1 and 40"));
        }
        let d = algebra.dim;
        let qmax = algebra.max_charge();
        // Reachable remaining charge range for sites s.. to prune the search.
        let mut lo = vec![0i64; sites + 1];
        let mut hi = vec![0i64; sites + 1];
        for s in (0..sites).rev() {
            let (a, b) = (0, weights[s] * qmax);
            lo[s] = lo[s + 1] + a.min(b);
            hi[s] = hi[s + 1] + a.max(b);
        }
        let mut states = Vec::new();
        let mut config = vec![0usize; sites];
        #[allow(clippy::type_complexity)]
        fn dfs(
            s: usize,
            acc: i64,
            code: u64,
            ctx: (&[i64], &[i64], &[i64], &[i64], usize, i64),
            config: &mut [usize],
            out: &mut Vec<u64>,
        ) {
            let (weights, charge, lo, hi, d, target) = ctx;
            if s == config.len() {
                if acc == target {
                    out.push(code);
                }
                return;
            }
            let rem = target - acc;
            if rem < lo[s] || rem > hi[s] {
                return;
            }
            for (i, &q) in charge.iter().enumerate().take(d) {
                config[s] = i;
                dfs(
                    s + 1,
                    acc + weights[s] * q,
                    code * d as u64 + i as u64,
                    ctx,
                    config,
                    out,
                );
            }
        }
        let charge = algebra.charge.clone();
        dfs(
            0,
            0,
            0,
            (&weights, &charge, &lo, &hi, d, value),
            &mut config,
            &mut states,
        );
        let lookup = states.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(Self {
            sites,
            algebra,
            states: Some(states),
            lookup,
            weights: Some(weights),
            sector: Some(value),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn algebra(&self) -> &LocalAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        match &self.states {
            Some(s) => s.len(),
            None => self.algebra.dim.pow(self.sites as u32),
        }
    }

    pub fn is_full(&self) -> bool {
        self.states.is_none()
    }

    /// The fixed weighted charge of a sector space.
    pub fn sector_value(&self) -> Option<i64> {
        self.sector
    }

    pub fn sector_weights(&self) -> Option<&[i64]> {
        self.weights.as_deref()
    }

    fn code(&self, index: usize) -> u64 {
        match &self.states {
            Some(s) => s[index],
            None => index as u64,
        }
    }

    fn index_of_code(&self, code: u64) -> Option<usize> {
        match &self.states {
            Some(_) => self.lookup.get(&code).copied(),
            None => Some(code as usize),
        }
    }

    /// Local indices of basis state `index`, site 0 first.
    pub fn config(&self, index: usize) -> Vec<usize> {
        let d = self.algebra.dim as u64;
        let mut code = self.code(index);
        let mut c = vec![0usize; self.sites];
        for s in (0..self.sites).rev() {
            c[s] = (code % d) as usize;
            code /= d;
        }
        c
    }

    pub fn index_of(&self, config: &[usize]) -> Option<usize> {
        if config.len() != self.sites || config.iter().any(|&i| i >= self.algebra.dim) {
            return None;
        }
        let d = self.algebra.dim as u64;
        let code = config.iter().fold(0u64, |acc, &i| acc * d + i as u64);
        self.index_of_code(code)
    }

    /// Total charge `Σ_i n_i` of basis state `index`.
    pub fn charge_of(&self, index: usize) -> i64 {
        self.config(index)
            .iter()
            .map(|&i| self.algebra.charge[i])
            .sum()
    }

    /// Basis permutation induced by moving site `s` to `perm[s]`.
    pub fn site_permutation(&self, perm: &[usize]) -> Result<Vec<usize>> {
        if perm.len() != self.sites {
            return Err(Error::DimensionMismatch("site permutation length".into()));
        }
        (0..self.dim())
            .map(|i| {
                let c = self.config(i);
                let mut out = vec![0usize; self.sites];
                for (s, &ci) in c.iter().enumerate() {
                    out[perm[s]] = ci;
                }
                self.index_of(&out).ok_or(Error::NotClosed { state: i })
            })
            .collect()
    }

    /// Assemble `Σ_t coeff_t ∏ factors_t` where factors act right to left.
    pub fn operator(&self, terms: &[Term]) -> Result<OperatorMatrix> {
        let dim = self.dim();
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        // Column access for each local factor.
        let cols: Vec<Vec<Columns>> = terms
            .iter()
            .map(|t| {
                t.factors
                    .iter()
                    .map(|(_, m)| {
                        let mut c = vec![Vec::new(); m.ncols()];
                        for (r, cc, v) in m.iter() {
                            c[cc].push((r, v));
                        }
                        c
                    })
                    .collect()
            })
            .collect();
        for t in terms {
            for &(site, ref m) in &t.factors {
                if site >= self.sites {
                    return Err(Error::IndexOutOfRange {
                        index: site,
                        size: self.sites,
                    });
                }
                if m.shape() != (self.algebra.dim, self.algebra.dim) {
                    return Err(Error::DimensionMismatch(format!(
                        "local factor {:?} on a site of dimension {}",
                        m.shape(),
                        self.algebra.dim
                    )));
                }
            }
        }
        for col in 0..dim {
            let config = self.config(col);
            for (t, tcols) in terms.iter().zip(&cols) {
                let mut branch: Vec<(Vec<usize>, Complex64)> = vec![(config.clone(), t.coeff)];
                for ((site, _), fcols) in t.factors.iter().zip(tcols).rev() {
                    let mut next = Vec::with_capacity(branch.len());
                    for (c, amp) in branch {
                        for &(r, v) in &fcols[c[*site]] {
                            let mut c2 = c.clone();
                            c2[*site] = r;
                            next.push((c2, amp * v));
                        }
                    }
                    branch = next;
                    if branch.is_empty() {
                        break;
                    }
                }
                for (c, amp) in branch {
                    if amp == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    match self.index_of(&c) {
                        Some(row) => rows[row].push((col, amp)),
                        None => return Err(Error::NotClosed { state: col }),
                    }
                }
            }
        }
        Ok(SparseMatrix::from_rows(dim, rows))
    }

    /// `local` acting on `site`, identity elsewhere.
    pub fn embed(&self, local: &SparseMatrix, site: usize) -> Result<OperatorMatrix> {
        self.operator(&[Term::new(re(1.0), vec![(site, local.clone())])])
    }

    /// Diagonal operator from per-state values.
    pub fn diagonal_from<F: Fn(&[usize]) -> f64>(&self, f: F) -> OperatorMatrix {
        let vals: Vec<Complex64> = (0..self.dim()).map(|i| re(f(&self.config(i)))).collect();
        SparseMatrix::diagonal(&vals)
    }
}

/// Product of local factors with a coefficient; factors apply right to left.
#[derive(Clone, Debug)]
pub struct Term {
    pub coeff: Complex64,
    pub factors: Vec<(usize, SparseMatrix)>,
}

impl Term {
    pub fn new(coeff: Complex64, factors: Vec<(usize, SparseMatrix)>) -> Self {
        Self { coeff, factors }
    }

    pub fn real(coeff: f64, factors: Vec<(usize, SparseMatrix)>) -> Self {
        Self::new(re(coeff), factors)
    }
}

/// Diagonal U(1) charge operator together with its integer eigenvalues.
#[derive(Clone, Debug)]
pub struct ChargeOperator {
    pub op: OperatorMatrix,
    pub eigenvalues: Vec<i64>,
}

impl ChargeOperator {
    pub fn from_values(values: Vec<i64>) -> Self {
        let op = SparseMatrix::diagonal(&values.iter().map(|&v| re(v as f64)).collect::<Vec<_>>());
        Self {
            op,
            eigenvalues: values,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Distinct eigenvalues, ascending.
    pub fn values(&self) -> Vec<i64> {
        let mut v = self.eigenvalues.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// `N = Σ_i n_i` with `n = Sᶻ + S` or `b†b`.
pub fn total_charge(space: &HilbertSpace) -> ChargeOperator {
    weighted_charge(space, &vec![1; space.sites()])
}

/// `Σ_i w_i n_i`.
pub fn weighted_charge(space: &HilbertSpace, weights: &[i64]) -> ChargeOperator {
    let q = &space.algebra().charge;
    ChargeOperator::from_values(
        (0..space.dim())
            .map(|i| {
                space
                    .config(i)
                    .iter()
                    .zip(weights)
                    .map(|(&c, &w)| w * q[c])
                    .sum()
            })
            .collect(),
    )
}

/// Basis indices with charge `value`, ascending; empty if unattained.
pub fn sector_basis(charge: &ChargeOperator, value: i64) -> Vec<usize> {
    charge
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == value)
        .map(|(i, _)| i)
        .collect()
}
