// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Periodic bipartite hypercubic lattices, B-sublattice momentum grids and
//! the Bose-surface predicate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// Periodic hypercubic lattice with checkerboard sublattices. Sites are
/// numbered with the first coordinate slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    dims: Vec<usize>,
    sublattice: Vec<Sublattice>,
    neighbors: Vec<Vec<usize>>,
}

impl Lattice {
    /// Periodic hypercubic lattice with every side even and at least 2.
    pub fn hypercubic(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::InvalidLattice(format!(
                "dimension must be 1, 2 or 3, got {}",
                dims.len()
            )));
        }
        for &l in dims {
            if l < 2 || l % 2 != 0 {
                return Err(Error::InvalidLattice(format!(
                    "side length {l} is not an even number >= 2"
                )));
            }
        }
        let n: usize = dims.iter().product();
        let mut lat = Self {
            dims: dims.to_vec(),
            sublattice: Vec::with_capacity(n),
            neighbors: Vec::with_capacity(n),
        };
        for s in 0..n {
            let x = lat.coords(s);
            let parity: usize = x.iter().sum();
            lat.sublattice.push(if parity.is_multiple_of(2) {
                Sublattice::A
            } else {
                Sublattice::B
            });
            let mut nb = Vec::with_capacity(2 * dims.len());
            for axis in 0..dims.len() {
                for step in [-1isize, 1] {
                    let mut y = x.clone();
                    y[axis] = (x[axis] as isize + step).rem_euclid(dims[axis] as isize) as usize;
                    nb.push(lat.site_at(&y));
                }
            }
            lat.neighbors.push(nb);
        }
        Ok(lat)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn site_count(&self) -> usize {
        self.sublattice.len()
    }

    pub fn sublattice(&self, site: usize) -> Sublattice {
        self.sublattice[site]
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    pub fn sites_of(&self, sub: Sublattice) -> Vec<usize> {
        (0..self.site_count())
            .filter(|&s| self.sublattice[s] == sub)
            .collect()
    }

    /// Nearest-neighbour bonds as `(a, b)` with `a` on A and `b` on B. Each A
    /// site contributes one bond per neighbour-list entry, so a side of length
    /// 2 yields the periodic bond twice.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in self.sites_of(Sublattice::A) {
            for &b in &self.neighbors[a] {
                out.push((a, b));
            }
        }
        out
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut x = vec![0; self.dims.len()];
        let mut rem = site;
        for axis in (0..self.dims.len()).rev() {
            x[axis] = rem % self.dims[axis];
            rem /= self.dims[axis];
        }
        x
    }

    pub fn site_at(&self, x: &[usize]) -> usize {
        x.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&xi, &l)| acc * l + xi % l)
    }

    /// Site permutation `s -> s + shift` (periodic).
    pub fn translation(&self, shift: &[isize]) -> Result<Vec<usize>> {
        if shift.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "shift of length {} on a {}-dimensional lattice",
                shift.len(),
                self.dims.len()
            )));
        }
        Ok((0..self.site_count())
            .map(|s| {
                let x: Vec<usize> = self
                    .coords(s)
                    .iter()
                    .zip(shift)
                    .zip(&self.dims)
                    .map(|((&xi, &d), &l)| (xi as isize + d).rem_euclid(l as isize) as usize)
                    .collect();
                self.site_at(&x)
            })
            .collect())
    }

    /// Momenta of the B-sublattice Bravais grid, in Bravais coordinates.
    ///
    /// In 1D the B sites form a chain of spacing 2 and `k` is conjugate to
    /// the cell index. In 2D the Bravais vectors are `(1, 1)` and `(1, -1)`
    /// and `k = (p_x + p_y, p_x - p_y)` for physical momentum `p`.
    pub fn b_momenta(&self) -> Result<Vec<Momentum>> {
        match self.dims.as_slice() {
            [l] => {
                let cells = l / 2;
                Ok((0..cells)
                    .map(|m| Momentum::new(vec![wrap(2.0 * PI * m as f64 / cells as f64)]))
                    .collect())
            }
            [lx, ly] => {
                let mut out: Vec<Momentum> = Vec::new();
                for mx in 0..*lx {
                    for my in 0..*ly {
                        let px = 2.0 * PI * mx as f64 / *lx as f64;
                        let py = 2.0 * PI * my as f64 / *ly as f64;
                        let k = Momentum::new(vec![wrap(px + py), wrap(px - py)]);
                        if !out.iter().any(|q| q.approx_eq(&k, 1e-9)) {
                            out.push(k);
                        }
                    }
                }
                Ok(out)
            }
            _ => Err(Error::InvalidLattice(
                "B-sublattice momenta implemented for d <= 2".into(),
            )),
        }
    }

    /// Normalised plane-wave amplitudes on the B sites (zero on A sites).
    pub fn b_plane_wave(&self, k: &Momentum) -> Result<Vec<Complex64>> {
        if k.components.len() != self.dims.len() {
            return Err(Error::DimensionMismatch("momentum dimension".into()));
        }
        let nb = self.site_count() / 2;
        let norm = 1.0 / (nb as f64).sqrt();
        let phase = |s: usize| -> f64 {
            let x = self.coords(s);
            match x.len() {
                1 => k.components[0] * ((x[0] - 1) / 2) as f64,
                _ => {
                    // p = ((k1 + k2)/2, (k1 - k2)/2) relative to the B site (1, 0).
                    let px = 0.5 * (k.components[0] + k.components[1]);
                    let py = 0.5 * (k.components[0] - k.components[1]);
                    px * (x[0] as f64 - 1.0) + py * x[1] as f64
                }
            }
        };
        if self.dims.len() > 2 {
            return Err(Error::InvalidLattice(
                "B-sublattice plane waves implemented for d <= 2".into(),
            ));
        }
        Ok((0..self.site_count())
            .map(|s| match self.sublattice[s] {
                Sublattice::A => Complex64::new(0.0, 0.0),
                Sublattice::B => Complex64::from_polar(norm, phase(s)),
            })
            .collect())
    }
}

/// Periodic chain of even length `l >= 2`; site `i` is on A iff `i` is even.
pub fn build_chain(l: usize) -> Result<Lattice> {
    Lattice::hypercubic(&[l])
}

/// Periodic `lx × ly` square lattice with checkerboard sublattices.
pub fn build_square(lx: usize, ly: usize) -> Result<Lattice> {
    Lattice::hypercubic(&[lx, ly])
}

fn wrap(k: f64) -> f64 {
    let mut k = k.rem_euclid(2.0 * PI);
    if k > PI + 1e-12 {
        k -= 2.0 * PI;
    }
    k
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub components: Vec<f64>,
}

impl Momentum {
    pub fn new(components: Vec<f64>) -> Self {
        Self { components }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.components.len() == other.components.len()
            && self.components.iter().zip(&other.components).all(|(a, b)| {
                let d = (a - b).rem_euclid(2.0 * PI);
                d.min(2.0 * PI - d) <= tol
            })
    }
}

/// Default tolerance for [`on_bose_surface`] on exact grid momenta.
pub const BOSE_SURFACE_TOL: f64 = 1e-12;

/// True iff `|∏ cos(k_i / 2)| <= tol`.
pub fn on_bose_surface(k: &Momentum, tol: f64) -> bool {
    k.components
        .iter()
        .map(|&ki| (ki / 2.0).cos())
        .product::<f64>()
        .abs()
        <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smallest_chain() {
        let l = build_chain(2).unwrap();
        assert_eq!(l.sublattice(0), Sublattice::A);
        assert_eq!(l.sublattice(1), Sublattice::B);
        assert_eq!(l.neighbors(0), &[1, 1]);
        assert_eq!(l.neighbors(1), &[0, 0]);
    }

    #[test]
    fn chain_parity_and_errors() {
        let l = build_chain(6).unwrap();
        assert_eq!(l.sites_of(Sublattice::A), vec![0, 2, 4]);
        assert!(matches!(build_chain(3), Err(Error::InvalidLattice(_))));
        assert!(build_chain(0).is_err());
    }

    #[test]
    fn square_lattice() {
        let l = build_square(2, 2).unwrap();
        assert_eq!(l.sites_of(Sublattice::A).len(), 2);
        let l = build_square(4, 4).unwrap();
        for s in 0..16 {
            assert_eq!(l.neighbors(s).len(), 4);
            for &t in l.neighbors(s) {
                assert_ne!(l.sublattice(s), l.sublattice(t));
            }
        }
        assert!(build_square(2, 3).is_err());
    }

    #[test]
    fn bose_surface_examples() {
        assert!(on_bose_surface(
            &Momentum::new(vec![PI, 0.3]),
            BOSE_SURFACE_TOL
        ));
        assert!(on_bose_surface(&Momentum::new(vec![PI]), BOSE_SURFACE_TOL));
        assert!(!on_bose_surface(
            &Momentum::new(vec![0.0, 0.0]),
            BOSE_SURFACE_TOL
        ));
    }

    #[test]
    fn b_grid_sizes() {
        assert_eq!(build_chain(12).unwrap().b_momenta().unwrap().len(), 6);
        assert_eq!(build_square(4, 4).unwrap().b_momenta().unwrap().len(), 8);
        assert_eq!(build_square(4, 6).unwrap().b_momenta().unwrap().len(), 12);
    }

    #[test]
    fn surface_on_2d_grid_is_the_two_lines() {
        let lat = build_square(4, 4).unwrap();
        for k in lat.b_momenta().unwrap() {
            let on_line = k.components.iter().any(|c| (c.abs() - PI).abs() < 1e-9);
            assert_eq!(on_bose_surface(&k, 1e-9), on_line);
        }
    }

    #[test]
    fn plane_wave_is_normalised_and_lives_on_b() {
        let lat = build_square(4, 4).unwrap();
        for k in lat.b_momenta().unwrap() {
            let w = lat.b_plane_wave(&k).unwrap();
            let n: f64 = w.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
            for a in lat.sites_of(Sublattice::A) {
                assert_eq!(w[a], Complex64::new(0.0, 0.0));
            }
        }
    }

    proptest! {
        #[test]
        fn neighbor_relation_is_symmetric_and_bipartite(
            lx in 1usize..5, ly in 1usize..5,
        ) {
            let lat = build_square(2 * lx, 2 * ly).unwrap();
            for s in 0..lat.site_count() {
                for &t in lat.neighbors(s) {
                    prop_assert!(lat.neighbors(t).contains(&s));
                    prop_assert_ne!(lat.sublattice(s), lat.sublattice(t));
                }
            }
        }

        #[test]
        fn translation_is_a_permutation(l in 1usize..8, shift in -5isize..5) {
            let lat = build_chain(2 * l).unwrap();
            let mut p = lat.translation(&[shift]).unwrap();
            p.sort_unstable();
            prop_assert_eq!(p, (0..2 * l).collect::<Vec<_>>());
        }
    }
}
