// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! Lindbladians, symmetry sectors and stochastic hydrodynamics for
//! U(1)-symmetric open spin models.

pub mod cli;
pub mod error;
pub mod hilbert;
pub mod hydro;
pub mod lattice;
pub mod linalg;
pub mod lindblad;
pub mod meanfield;
pub mod observables;
pub mod perturbation;
pub mod sparse;
pub mod spectral;
