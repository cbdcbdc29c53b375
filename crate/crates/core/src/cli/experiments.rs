// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{CliError, Experiment, ExperimentConfig, Model, ResultTable, Violation};
use crate::hydro::{
    cgle_run, conserved_density_run, heat_kernel, k_hat2, kpz_run, phase_diffusion_variance,
    structure_factor, width_growth, CGLEParams, FieldGrid, FieldTrajectory, HydroParams,
    RunControl,
};
use crate::lattice::{build_chain, build_square, Lattice};
use crate::lindblad::symmetry_check;
use crate::lindblad::{
    add_chemical_shift, model_eff_n0, model_eff_nhalf, model_i, model_ii, model_iii, sector_block,
    vectorize, LindbladSpec, SectorLabel,
};
use crate::meanfield::instability_threshold;
use crate::meanfield::{
    distance_mod_phase, fixed_point_model_i, fixed_point_model_ii, integrate, rhs_model_i,
    rhs_model_ii, stability, MFModel, MFParams, MeanFieldState,
};
use crate::observables::{binomial, renyi2_correlator, sector_steady_state, two_point};
use crate::perturbation::single_site_loss_spectrum;
use crate::perturbation::{compare_perturbative_i, effective_generator_iii, validate_iii_at};
use crate::spectral::{
    detect_oscillation, evolve_strided, rightmost, SpectrumOptions, DENSE_THRESHOLD, ZERO_MODE_TOL,
};

type Outcome = (Vec<ResultTable>, BTreeMap<String, Value>);

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Real,
    /// Finite and ≥ 0.
    Rate,
    /// Finite and > 0.
    Positive,
    Count,
    Seed,
    RealList,
    CountList,
    Sector,
    Window,
    Choice(&'static [&'static str]),
}

struct Key {
    name: &'static str,
    kind: Kind,
    required: bool,
}

const fn req(name: &'static str, kind: Kind) -> Key {
    Key {
        name,
        kind,
        required: true,
    }
}

const fn opt(name: &'static str, kind: Kind) -> Key {
    Key {
        name,
        kind,
        required: false,
    }
}

const EQUATIONS: &[&str] = &["ew", "kpz", "density", "cgle"];
const CLUSTERS: &[&str] = &["lattice", "single-site"];

fn schema(exp: Experiment, model: Option<Model>, params: &BTreeMap<String, String>) -> Vec<Key> {
    use Kind::*;
    let mut keys = vec![opt("seed", Seed)];
    let coupling = |keys: &mut Vec<Key>, sweep: bool| {
        let j = if sweep { "J_values" } else { "J" };
        let jk = if sweep { RealList } else { Real };
        match model {
            Some(Model::I) => keys.extend([
                req("L", Count),
                opt("Ly", Count),
                req(j, jk),
                opt("J_z", Real),
                req("Gamma", Rate),
            ]),
            Some(Model::II) => keys.extend([
                req("L", Count),
                opt("Ly", Count),
                req(j, jk),
                opt("J_z", Real),
                req("Gamma", Rate),
                opt("Gamma_z", Rate),
            ]),
            Some(Model::III) => {
                let j = if sweep { "J_values" } else { "J_xy" };
                keys.extend([
                    req("L", Count),
                    opt("S", Positive),
                    req(j, jk),
                    opt("J_z", Real),
                    req("Gamma", Rate),
                ])
            }
            Some(Model::EffN0) => keys.extend([
                req("L", Count),
                opt("Ly", Count),
                req(j, jk),
                req("Gamma", Rate),
                opt("Gamma_z", Rate),
                req("n_max", Count),
            ]),
            Some(Model::EffNHalf) => keys.extend([
                req("L", Count),
                opt("Ly", Count),
                req(j, jk),
                req("Gamma", Rate),
                req("n_max", Count),
            ]),
            None => {}
        }
    };
    match exp {
        Experiment::Spectrum => {
            coupling(&mut keys, false);
            keys.extend([opt("sector", Sector), opt("count", Count), opt("h_x", Real)]);
        }
        Experiment::GapSweep => {
            coupling(&mut keys, true);
            let needs_sector = !matches!(model, Some(Model::I));
            keys.push(Key {
                name: "sector",
                kind: Sector,
                required: needs_sector,
            });
        }
        Experiment::Meanfield => {
            keys.extend([
                req("J", Rate),
                req("Gamma", Rate),
                req("d", Count),
                req("T", Rate),
                req("dt", Positive),
                opt("stride", Count),
            ]);
            if model == Some(Model::II) {
                keys.extend([req("n", Rate), opt("Gamma_z", Rate), opt("bisect", Window)]);
            }
        }
        Experiment::PerturbationCheck => match model {
            Some(Model::I) if params.get("cluster").map(String::as_str) == Some("single-site") => {
                keys.extend([req("Gamma", Rate), req("cluster", Choice(CLUSTERS))])
            }
            Some(Model::I) => keys.extend([
                req("L", Count),
                opt("Ly", Count),
                req("J", Real),
                req("Gamma", Rate),
                opt("cluster", Choice(CLUSTERS)),
            ]),
            _ => keys.extend([
                req("L", Count),
                opt("S", Positive),
                req("J_xy", Real),
                opt("J_z", Real),
                req("Gamma", Rate),
                opt("n", Count),
                opt("momenta", CountList),
            ]),
        },
        Experiment::Correlators => keys.extend([
            req("L", Count),
            opt("S", Positive),
            req("J_xy", Real),
            opt("J_z", Real),
            req("Gamma", Rate),
            req("n", Count),
        ]),
        Experiment::Timecrystal => keys.extend([
            req("L", Count),
            opt("S", Positive),
            req("J_xy", Real),
            opt("J_z", Real),
            req("Gamma", Rate),
            req("mu", Real),
            req("T", Positive),
            req("dt", Positive),
        ]),
        Experiment::Hydro => {
            keys.extend([
                req("equation", Choice(EQUATIONS)),
                req("d", Count),
                req("L", Count),
                opt("dx", Positive),
                req("dt", Positive),
                req("T", Rate),
                opt("realizations", Count),
                opt("stride", Count),
                opt("window", Window),
                opt("stationary", Window),
            ]);
            match params.get("equation").map(String::as_str) {
                Some("ew") => keys.extend([req("D", Positive), req("Delta", Rate)]),
                Some("kpz") => {
                    keys.extend([req("D", Positive), req("Delta", Rate), req("lambda", Real)])
                }
                Some("density") => keys.extend([
                    req("D", Positive),
                    req("sigma_n", Rate),
                    opt("init", Choice(&["delta", "flat"])),
                ]),
                Some("cgle") => keys.extend([
                    req("K_c", Real),
                    req("K_d", Rate),
                    req("r_c", Real),
                    req("r_d", Real),
                    req("g_c", Real),
                    req("g_d", Positive),
                    req("gamma", Rate),
                    opt("psi0", Rate),
                ]),
                _ => {}
            }
        }
    }
    keys
}

fn check_value(name: &str, kind: Kind, value: &str) -> Option<String> {
    let real = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let list = |s: &str| s.split(',').map(real).collect::<Option<Vec<f64>>>();
    match kind {
        Kind::Real => real(value)
            .is_none()
            .then(|| "must be a finite number".into()),
        Kind::Rate => match real(value) {
            Some(v) if v >= 0.0 => None,
            Some(_) => Some("must be nonnegative".into()),
            None => Some("must be a finite number".into()),
        },
        Kind::Positive => match real(value) {
            Some(v) if v > 0.0 => None,
            _ => Some("must be a positive number".into()),
        },
        Kind::Count => value
            .parse::<usize>()
            .is_err()
            .then(|| "must be a nonnegative integer".into()),
        Kind::Seed => value
            .parse::<u64>()
            .is_err()
            .then(|| "must be an unsigned 64-bit integer".into()),
        Kind::RealList => match list(value) {
            Some(v) if !v.is_empty() => None,
            _ => Some("must be a comma-separated list of numbers".into()),
        },
        Kind::CountList => value
            .split(',')
            .any(|s| s.trim().parse::<usize>().is_err())
            .then(|| "must be a comma-separated list of integers".into()),
        Kind::Sector => parse_sector(value)
            .is_none()
            .then(|| "must be `q` or `a,b`".into()),
        Kind::Window => match list(value) {
            Some(v) if v.len() == 2 && v[0] <= v[1] => None,
            _ => Some("must be `t0,t1` with t0 ≤ t1".into()),
        },
        Kind::Choice(options) => (!options.contains(&value))
            .then(|| format!("`{name}` must be one of {}", options.join(", "))),
    }
}

fn parse_sector(s: &str) -> Option<SectorLabel> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [q] => q.parse().ok().map(SectorLabel::Difference),
        [a, b] => Some(SectorLabel::Pair(a.parse().ok()?, b.parse().ok()?)),
        _ => None,
    }
}

pub(super) fn validate(cfg: &ExperimentConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let allowed = cfg.experiment.models();
    match cfg.model {
        None if !allowed.is_empty() => out.push(Violation::new("model", "missing")),
        Some(m) if !allowed.contains(&m) => out.push(Violation::new(
            "model",
            format!("`{}` is not available for {}", m.name(), cfg.experiment),
        )),
        _ => {}
    }
    let keys = schema(cfg.experiment, cfg.model, &cfg.params);
    for key in &keys {
        match cfg.params.get(key.name) {
            Some(v) => {
                if let Some(msg) = check_value(key.name, key.kind, v) {
                    out.push(Violation::new(key.name, msg));
                }
            }
            None if key.required => out.push(Violation::new(key.name, "missing")),
            None => {}
        }
    }
    for k in cfg.params.keys() {
        if !keys.iter().any(|key| key.name == k) {
            out.push(Violation::new(
                k,
                format!("not a parameter of {}", cfg.experiment),
            ));
        }
    }
    if !out.is_empty() {
        return out;
    }
    // Cross-field rules.
    let p = Params(&cfg.params);
    if cfg.experiment == Experiment::Meanfield {
        if let Some(n) = p.f64("n") {
            if n > 1.0 {
                out.push(Violation::new("n", "filling must lie in [0, 1]"));
            }
        }
        if !(1..=3).contains(&p.usize("d").unwrap_or(0)) {
            out.push(Violation::new("d", "must be 1, 2 or 3"));
        }
    }
    if cfg.model == Some(Model::I) {
        if let Some(SectorLabel::Pair(..)) = p.sector() {
            out.push(Violation::new(
                "sector",
                "model I is only weakly symmetric; give a single N_L − N_R value",
            ));
        }
    }
    if matches!(cfg.experiment, Experiment::Timecrystal) && p.usize("L").unwrap_or(0) % 4 != 0 {
        out.push(Violation::new(
            "L",
            "must be a multiple of 4 so the probe magnon sits at k = π/2",
        ));
    }
    if cfg.experiment == Experiment::Hydro
        && p.str("equation") == Some("cgle")
        && p.f64("g_d") == Some(0.0)
    {
        out.push(Violation::new("g_d", "must be positive"));
    }
    out
}

/// Typed view of validated parameters.
struct Params<'a>(&'a BTreeMap<String, String>);

impl Params<'_> {
    fn str(&self, k: &str) -> Option<&str> {
        self.0.get(k).map(String::as_str)
    }

    fn f64(&self, k: &str) -> Option<f64> {
        self.0.get(k).and_then(|v| v.trim().parse().ok())
    }

    fn f64_or(&self, k: &str, default: f64) -> f64 {
        self.f64(k).unwrap_or(default)
    }

    fn usize(&self, k: &str) -> Option<usize> {
        self.0.get(k).and_then(|v| v.trim().parse().ok())
    }

    fn list(&self, k: &str) -> Vec<f64> {
        self.0
            .get(k)
            .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect())
            .unwrap_or_default()
    }

    fn window(&self, k: &str) -> Option<(f64, f64)> {
        let v = self.list(k);
        (v.len() == 2).then(|| (v[0], v[1]))
    }

    fn sector(&self) -> Option<SectorLabel> {
        self.str("sector").and_then(parse_sector)
    }

    fn lattice(&self) -> crate::error::Result<Lattice> {
        let l = self.usize("L").unwrap_or(0);
        match self.usize("Ly") {
            Some(ly) => build_square(l, ly),
            None => build_chain(l),
        }
    }

    fn spin(&self) -> f64 {
        self.f64_or("S", 0.5)
    }
}

fn build_model(model: Model, p: &Params, j: f64) -> crate::error::Result<LindbladSpec> {
    let jz = p.f64_or("J_z", 0.0);
    let gamma = p.f64_or("Gamma", 0.0);
    let gz = p.f64_or("Gamma_z", 0.0);
    match model {
        Model::I => model_i(&p.lattice()?, j, jz, gamma),
        Model::II => model_ii(&p.lattice()?, j, jz, gamma, gz),
        Model::III => model_iii(p.usize("L").unwrap_or(0), p.spin(), j, jz, gamma),
        Model::EffN0 => model_eff_n0(
            &p.lattice()?,
            j,
            gamma,
            gz,
            p.usize("n_max").unwrap_or(1) as u32,
        ),
        Model::EffNHalf => model_eff_nhalf(
            &p.lattice()?,
            j,
            gamma,
            p.usize("n_max").unwrap_or(1) as u32,
        ),
    }
}

fn coupling_key(model: Model) -> &'static str {
    if model == Model::III {
        "J_xy"
    } else {
        "J"
    }
}

pub(super) fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = Params(&cfg.params);
    match cfg.experiment {
        Experiment::Spectrum => spectrum(cfg.model.expect("validated"), &p),
        Experiment::GapSweep => gap_sweep(cfg.model.expect("validated"), &p),
        Experiment::Meanfield => meanfield(cfg.model.expect("validated"), &p),
        Experiment::PerturbationCheck => perturbation_check(cfg.model.expect("validated"), &p),
        Experiment::Hydro => hydro(&p),
        Experiment::Correlators => correlators(&p),
        Experiment::Timecrystal => timecrystal(&p),
    }
}

fn spectrum(model: Model, p: &Params) -> Result<Outcome, CliError> {
    let mut spec = build_model(model, p, p.f64_or(coupling_key(model), 0.0))?;
    let hx = p.f64_or("h_x", 0.0);
    if hx != 0.0 {
        // Transverse field Σ_i X_i, which breaks every U(1) symmetry.
        let x = spec.space.algebra().x();
        for i in 0..spec.space.sites() {
            let xi = spec.space.embed(&x, i)?;
            spec.hamiltonian = spec.hamiltonian.add_scaled(&xi, Complex64::new(hx, 0.0))?;
        }
    }
    let class = symmetry_check(&spec, &spec.charge())?;
    let sup = vectorize(&spec)?;
    let mut leakage = None;
    let matrix = match p.sector() {
        Some(label) => {
            let b = sector_block(&sup, label);
            leakage = Some(b.leakage);
            b.matrix
        }
        None => sup.matrix(),
    };
    let dim = matrix.nrows();
    let count = p
        .usize("count")
        .unwrap_or(if dim <= DENSE_THRESHOLD { dim } else { 10 })
        .min(dim);
    let pairs = rightmost(&matrix, count, &SpectrumOptions::default())?;
    let scale = matrix.norm_one().max(1.0);
    let zero_modes = pairs
        .iter()
        .filter(|x| x.0.norm() <= ZERO_MODE_TOL * scale)
        .count();
    let gap = pairs
        .iter()
        .find(|x| x.0.norm() > ZERO_MODE_TOL * scale)
        .map(|x| -x.0.re);
    let table = ResultTable::new("eigenvalues")
        .real("index", (0..pairs.len()).map(|i| i as f64).collect())
        .complex("lambda", pairs.iter().map(|x| x.0).collect())
        .real("residual", pairs.iter().map(|x| x.2).collect());
    let mut summary = BTreeMap::new();
    summary.insert("dimension".into(), json!(dim));
    summary.insert("zero_modes".into(), json!(zero_modes));
    summary.insert("gap".into(), json!(gap));
    summary.insert("symmetry".into(), json!(class));
    summary.insert("sector_leakage".into(), json!(leakage));
    Ok((vec![table], summary))
}

fn gap_sweep(model: Model, p: &Params) -> Result<Outcome, CliError> {
    let label = p.sector().unwrap_or(SectorLabel::Difference(1));
    let js = p.list("J_values");
    let gaps = js
        .iter()
        .map(|&j| {
            let spec = build_model(model, p, j)?;
            let block = sector_block(&vectorize(&spec)?, label);
            if block.dim() == 0 {
                return Err(crate::error::Error::param("sector", "empty sector"));
            }
            let count = block.dim().min(8);
            let pairs = rightmost(&block.matrix, count, &SpectrumOptions::default())?;
            let scale = block.matrix.norm_one().max(1.0);
            Ok(pairs
                .iter()
                .find(|x| x.0.norm() > ZERO_MODE_TOL * scale)
                .map(|x| -x.0.re)
                .unwrap_or(f64::NAN))
        })
        .collect::<crate::error::Result<Vec<f64>>>()?;
    let table = ResultTable::new("gap").real("J", js).real("gap", gaps);
    Ok((vec![table], BTreeMap::new()))
}

fn random_state(model: Model, n: f64, rng: &mut ChaCha8Rng) -> MeanFieldState {
    let transverse = |z: f64, rng: &mut ChaCha8Rng| {
        let r = 0.5 * (1.0 - z * z).max(0.0).sqrt() * rng.random_range(0.2..0.9);
        Complex64::from_polar(r, rng.random_range(0.0..2.0 * PI))
    };
    let (za, zb) = match model {
        Model::II => {
            // σ_Aᶻ + σ_Bᶻ = 4n − 2 with both inside [−1, 1].
            let total = 4.0 * n - 2.0;
            let lo = (total - 1.0).max(-1.0);
            let hi = (total + 1.0).min(1.0);
            let za = if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            };
            (za, total - za)
        }
        _ => (rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9)),
    };
    MeanFieldState {
        sa_plus: transverse(za, rng),
        sb_plus: transverse(zb, rng),
        sa_z: za,
        sb_z: zb,
    }
}

fn meanfield(model: Model, p: &Params) -> Result<Outcome, CliError> {
    let mut mf = MFParams::new(
        p.f64_or("J", 0.0),
        p.f64_or("Gamma", 0.0),
        p.usize("d").unwrap_or(1),
    );
    mf.gamma_z = p.f64_or("Gamma_z", 0.0);
    mf.n = p.f64_or("n", 0.5);
    mf.validate()?;
    let seed = p.usize("seed").unwrap_or(0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = random_state(model, mf.n, &mut rng);
    let (t, dt) = (p.f64_or("T", 0.0), p.f64_or("dt", 0.01));
    let stride = p.usize("stride").unwrap_or(100);
    let (traj, fp, mfm) = match model {
        Model::I => (
            integrate(|s| rhs_model_i(s, &mf), &init, t, dt, stride)?,
            fixed_point_model_i(&mf)?,
            MFModel::I,
        ),
        _ => (
            integrate(|s| rhs_model_ii(s, &mf), &init, t, dt, stride)?,
            fixed_point_model_ii(&mf)?,
            MFModel::II,
        ),
    };
    let st = stability(mfm, &fp, &mf)?;
    let s = &traj.states;
    let table = ResultTable::new("trajectory")
        .real("t", traj.times.clone())
        .complex("sA_plus", s.iter().map(|x| x.sa_plus).collect())
        .complex("sB_plus", s.iter().map(|x| x.sb_plus).collect())
        .real("sA_z", s.iter().map(|x| x.sa_z).collect())
        .real("sB_z", s.iter().map(|x| x.sb_z).collect())
        .real("filling", s.iter().map(|x| x.filling()).collect());
    let fixed = ResultTable::new("fixed_point")
        .complex("sA_plus", vec![fp.sa_plus])
        .complex("sB_plus", vec![fp.sb_plus])
        .real("sA_z", vec![fp.sa_z])
        .real("sB_z", vec![fp.sb_z]);
    let drift = s
        .iter()
        .map(|x| (x.filling() - init.filling()).abs())
        .fold(0.0, f64::max);
    let mut summary = BTreeMap::new();
    summary.insert(
        "distance_to_fixed_point".into(),
        json!(distance_mod_phase(traj.last(), &fp)),
    );
    summary.insert("stability_max_real".into(), json!(st.max_real()));
    if model == Model::II {
        summary.insert("filling_drift".into(), json!(drift));
    }
    if let Some((lo, hi)) = p.window("bisect") {
        let threshold = instability_threshold(&mf, lo, hi, 1e-6)?;
        summary.insert("instability_threshold".into(), json!(threshold));
    }
    Ok((vec![table, fixed], summary))
}

fn perturbation_check(model: Model, p: &Params) -> Result<Outcome, CliError> {
    let gamma = p.f64_or("Gamma", 1.0);
    let mut summary = BTreeMap::new();
    if model == Model::I && p.str("cluster") == Some("single-site") {
        let modes = single_site_loss_spectrum(gamma)?;
        let mut worst: f64 = 0.0;
        for (a, ma) in modes.iter().enumerate() {
            for (b, mb) in modes.iter().enumerate() {
                let overlap: Complex64 = ma
                    .left
                    .iter()
                    .zip(mb.right.iter())
                    .map(|(l, r)| l.conj() * r)
                    .sum();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((overlap - want).norm());
            }
        }
        let table = ResultTable::new("eigenvalues")
            .real("lambda", modes.iter().map(|m| m.eigenvalue).collect());
        summary.insert("biorthonormality_error".into(), json!(worst));
        return Ok((vec![table], summary));
    }
    if model == Model::I {
        let lat = p.lattice()?;
        let j = p.f64_or("J", 0.0);
        let cmp = compare_perturbative_i(&lat, j, gamma)?;
        let mut eff = cmp.effective.clone();
        eff.sort_by(|a, b| b.re.total_cmp(&a.re));
        let table = ResultTable::new("eigenvalues")
            .complex("exact", cmp.exact.clone())
            .complex("effective", eff);
        let first_order = gamma - 2.0 * j * lat.dimension() as f64;
        summary.insert("max_deviation".into(), json!(cmp.max_deviation));
        summary.insert("exact_gap".into(), json!(cmp.exact_gap));
        summary.insert("first_order_gap".into(), json!(first_order));
        summary.insert(
            "gap_deviation".into(),
            json!((cmp.exact_gap - first_order).abs()),
        );
        return Ok((vec![table], summary));
    }
    let l = p.usize("L").unwrap_or(0);
    let s = p.spin();
    let jxy = p.f64_or("J_xy", 0.0);
    let n = p
        .usize("n")
        .map(|n| n as i64)
        .unwrap_or((l as f64 * s).round() as i64);
    let ms: Vec<usize> = match p.str("momenta") {
        Some(v) => v.split(',').filter_map(|x| x.trim().parse().ok()).collect(),
        None => (1..l).collect(),
    };
    let pts = validate_iii_at(l, s, jxy, p.f64_or("J_z", 0.0), gamma, n, &ms)?;
    let heff = effective_generator_iii(l, s, jxy, gamma, n)?.hermitian_eigenvalues()?;
    let scale = heff.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let min = heff.iter().cloned().fold(f64::INFINITY, f64::min);
    let zeros = heff.iter().filter(|v| v.abs() <= 1e-10 * scale).count();
    let table = ResultTable::new("dispersion")
        .real("k", pts.iter().map(|x| x.k).collect())
        .real("exact", pts.iter().map(|x| x.exact).collect())
        .real("effective", pts.iter().map(|x| x.effective).collect())
        .real("one_magnon", pts.iter().map(|x| x.one_magnon).collect())
        .real(
            "relative_deviation",
            pts.iter().map(|x| x.relative_deviation()).collect(),
        );
    let worst = pts
        .iter()
        .map(|x| x.relative_deviation())
        .fold(0.0, f64::max);
    summary.insert("max_relative_deviation".into(), json!(worst));
    summary.insert("effective_min_eigenvalue".into(), json!(min));
    summary.insert("effective_zero_modes".into(), json!(zeros));
    Ok((vec![table], summary))
}

fn correlators(p: &Params) -> Result<Outcome, CliError> {
    let l = p.usize("L").unwrap_or(0);
    let n = p.usize("n").unwrap_or(0) as i64;
    let spec = model_iii(
        l,
        p.spin(),
        p.f64_or("J_xy", 0.0),
        p.f64_or("J_z", 0.0),
        p.f64_or("Gamma", 0.0),
    )?;
    let rho = sector_steady_state(&spec, n)?;
    let mut renyi = Vec::new();
    let mut tp = Vec::new();
    for j in 1..l {
        renyi.push(renyi2_correlator(&rho, 0, j)?);
        tp.push(two_point(&rho, 0, j)?);
    }
    let table = ResultTable::new("correlators")
        .real("j", (1..l).map(|j| j as f64).collect())
        .real("distance", (1..l).map(|j| j.min(l - j) as f64).collect())
        .real("renyi2", renyi)
        .complex("two_point", tp);
    let mut summary = BTreeMap::new();
    if (p.spin() - 0.5).abs() < 1e-12 && n >= 1 {
        let (l, n) = (l as u64, n as u64);
        summary.insert(
            "renyi2_uniform_prediction".into(),
            json!(binomial(l - 2, n - 1) / binomial(l, n)),
        );
    }
    Ok((vec![table], summary))
}

/// Probe of the chemical-potential shift: the `N_L − N_R = q` blocks move by
/// exactly `−iμq`, and the coherence between the empty state and the `k = π/2`
/// magnon oscillates at `μ` (its unshifted frequency vanishes at `k = π/2`
/// when `J_z = 0`).
fn timecrystal(p: &Params) -> Result<Outcome, CliError> {
    let l = p.usize("L").unwrap_or(0);
    let mu = p.f64_or("mu", 0.0);
    let spec = model_iii(
        l,
        p.spin(),
        p.f64_or("J_xy", 0.0),
        p.f64_or("J_z", 0.0),
        p.f64_or("Gamma", 0.0),
    )?;
    let shifted = add_chemical_shift(&spec, mu)?;
    let (a, b) = (vectorize(&spec)?, vectorize(&shifted)?);
    let mut shift_error: f64 = 0.0;
    let mut qs = Vec::new();
    let mut base = Vec::new();
    let mut moved = Vec::new();
    for q in 1..=2i64 {
        let ba = sector_block(&a, SectorLabel::Difference(q)).matrix;
        let bb = sector_block(&b, SectorLabel::Difference(q)).matrix;
        if ba.nrows() == 0 || ba.nrows() > DENSE_THRESHOLD {
            continue;
        }
        let mut ea = crate::linalg::eigvals(&ba.to_dense())?;
        let mut eb = crate::linalg::eigvals(&bb.to_dense())?;
        let key = |z: &Complex64| (z.re, z.im);
        ea.sort_by(|x, y| key(x).partial_cmp(&key(y)).expect("finite"));
        eb.sort_by(|x, y| key(x).partial_cmp(&key(y)).expect("finite"));
        let want: Vec<Complex64> = ea
            .iter()
            .map(|z| z - Complex64::new(0.0, mu * q as f64))
            .collect();
        shift_error = shift_error.max(crate::perturbation::multiset_distance(&want, &eb));
        qs.extend(std::iter::repeat_n(q as f64, ea.len()));
        base.extend(ea);
        moved.extend(eb);
    }
    // |ψ⟩ = (|vac⟩ + |k = π/2⟩)/√2 with |vac⟩ the lowest-charge state.
    let space = &spec.space;
    let d = space.dim();
    let vac = (0..d)
        .find(|&i| space.charge_of(i) == 0)
        .expect("empty state present");
    let vac_cfg = space.config(vac);
    let k = PI / 2.0;
    let mut psi = vec![Complex64::new(0.0, 0.0); d];
    psi[vac] = Complex64::new(1.0, 0.0);
    for site in 0..l {
        let mut c = vac_cfg.clone();
        c[site] -= 1;
        let idx = space
            .index_of(&c)
            .expect("single excitation lies in the space");
        psi[idx] += Complex64::from_polar(1.0 / (l as f64).sqrt(), k * site as f64);
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    let rho0 = Array2::from_shape_fn((d, d), |(x, y)| psi[x] * psi[y].conj());
    let (t_final, dt) = (p.f64_or("T", 0.0), p.f64_or("dt", 0.01));
    let stride = ((0.05 / dt).round() as usize).max(1);
    let traj = evolve_strided(&rho0, &shifted, t_final, dt, stride)?;
    // ⟨magnon|ρ|vac⟩.
    let magnon: Vec<(usize, Complex64)> = (0..d)
        .filter(|&i| psi[i].norm() > 0.0 && i != vac)
        .map(|i| (i, psi[i]))
        .collect();
    let signal: Vec<Complex64> = traj
        .states
        .iter()
        .map(|r| magnon.iter().map(|&(i, c)| c.conj() * r[[i, vac]]).sum())
        .collect();
    let omega = detect_oscillation(&traj.times, &signal);
    let eig = ResultTable::new("shifted_eigenvalues")
        .real("q", qs)
        .complex("lambda", base)
        .complex("lambda_shifted", moved);
    let sig = ResultTable::new("coherence")
        .real("t", traj.times.clone())
        .complex("signal", signal);
    let mut summary = BTreeMap::new();
    summary.insert("shift_error".into(), json!(shift_error));
    summary.insert("detected_frequency".into(), json!(omega));
    summary.insert("frequency_resolution".into(), json!(2.0 * PI / t_final));
    Ok((vec![eig, sig], summary))
}

fn run_ensemble<T: Send, F: Fn(u64) -> crate::error::Result<T> + Sync + Send>(
    r: usize,
    f: F,
) -> crate::error::Result<Vec<T>> {
    (0..r as u64).into_par_iter().map(f).collect()
}

fn structure_table(
    trajs: &[FieldTrajectory<f64>],
    window: (f64, f64),
    theory: impl Fn(f64) -> f64,
) -> Result<ResultTable, CliError> {
    let sf = structure_factor(trajs, window)?;
    let mut m = Vec::new();
    let mut k2 = Vec::new();
    for i in 0..sf.values.len() {
        let mut c = vec![0; sf.d];
        let mut r = i;
        for a in (0..sf.d).rev() {
            c[a] = r % sf.l;
            r /= sf.l;
        }
        m.push(i as f64);
        k2.push(k_hat2(&c, sf.l, sf.dx));
    }
    let th = k2
        .iter()
        .map(|&k| if k > 0.0 { theory(k) } else { f64::NAN })
        .collect();
    Ok(ResultTable::new("structure_factor")
        .real("mode", m)
        .real("k_hat2", k2)
        .real("S", sf.values.clone())
        .real("error", sf.errors.clone())
        .real("theory", th))
}

fn hydro(p: &Params) -> Result<Outcome, CliError> {
    let d = p.usize("d").unwrap_or(1);
    let l = p.usize("L").unwrap_or(0);
    let dx = p.f64_or("dx", 1.0);
    let dt = p.f64_or("dt", 0.01);
    let t_final = p.f64_or("T", 0.0);
    let realizations = p.usize("realizations").unwrap_or(1).max(1);
    let stride = p
        .usize("stride")
        .unwrap_or(((1.0 / dt).round() as usize).max(1));
    let control = RunControl::new(t_final, stride, p.usize("seed").unwrap_or(0) as u64);
    let equation = p.str("equation").unwrap_or("ew");
    let mut summary = BTreeMap::new();
    let mut tables = Vec::new();
    if equation == "cgle" {
        let params = CGLEParams {
            k_c: p.f64_or("K_c", 0.0),
            k_d: p.f64_or("K_d", 0.0),
            r_c: p.f64_or("r_c", 0.0),
            r_d: p.f64_or("r_d", 0.0),
            g_c: p.f64_or("g_c", 0.0),
            g_d: p.f64_or("g_d", 1.0),
            gamma: p.f64_or("gamma", 0.0),
            dt,
        };
        let init = FieldGrid::filled(d, l, dx, Complex64::new(p.f64_or("psi0", 0.1), 0.0))?;
        let trajs = run_ensemble(realizations, |r| {
            cgle_run(&params, &init, &control.realization(r))
        })?;
        let times = trajs[0].times.clone();
        let dens: Vec<f64> = (0..times.len())
            .map(|i| {
                trajs
                    .iter()
                    .map(|t| t.snapshots[i].mean_density())
                    .sum::<f64>()
                    / trajs.len() as f64
            })
            .collect();
        summary.insert("final_density".into(), json!(dens.last()));
        summary.insert("rho0".into(), json!(params.rho0()));
        tables.push(
            ResultTable::new("density")
                .real("t", times)
                .real("mean_density", dens),
        );
        return Ok((tables, summary));
    }
    let params = HydroParams {
        diffusion: p.f64_or("D", 1.0),
        lambda: p.f64_or("lambda", 0.0),
        delta: p.f64_or("Delta", 0.0),
        sigma_n: p.f64_or("sigma_n", 0.0),
        dt,
    };
    let stationary = p.window("stationary").unwrap_or((0.5 * t_final, t_final));
    if equation == "density" {
        let mut init = FieldGrid::filled(d, l, dx, 0.0)?;
        if p.str("init").unwrap_or("delta") == "delta" {
            init.data[0] = 1.0 / dx.powi(d as i32);
        }
        let trajs = run_ensemble(realizations, |r| {
            conserved_density_run(&params, &init, &control.realization(r))
        })?;
        let last = trajs[0].last();
        let length = l as f64 * dx;
        let kernel: Vec<f64> = (0..last.len())
            .map(|i| {
                let x: Vec<f64> = last
                    .coords(i)
                    .iter()
                    .map(|&c| {
                        if c <= l / 2 {
                            c as f64 * dx
                        } else {
                            (c as f64 - l as f64) * dx
                        }
                    })
                    .collect();
                heat_kernel(&x, params.diffusion, t_final, length)
            })
            .collect();
        let num: f64 = last
            .data
            .iter()
            .zip(&kernel)
            .map(|(u, k)| (u - k).powi(2))
            .sum();
        let den: f64 = kernel.iter().map(|k| k * k).sum();
        summary.insert("total_initial".into(), json!(init.total()));
        summary.insert("total_final".into(), json!(last.total()));
        summary.insert("heat_kernel_l2_error".into(), json!((num / den).sqrt()));
        tables.push(
            ResultTable::new("profile")
                .real("site", (0..last.len()).map(|i| i as f64).collect())
                .real("u", last.data.clone())
                .real("heat_kernel", kernel),
        );
        if params.sigma_n > 0.0 {
            let flat = params.sigma_n / params.diffusion;
            tables.push(structure_table(&trajs, stationary, |k| {
                flat / (1.0 - 0.5 * params.diffusion * k * params.dt)
            })?);
        }
        return Ok((tables, summary));
    }
    let init = FieldGrid::filled(d, l, dx, 0.0)?;
    let trajs = run_ensemble(realizations, |r| {
        kpz_run(&params, &init, &control.realization(r))
    })?;
    let window = p.window("window").unwrap_or((0.1 * t_final, t_final));
    let growth = width_growth(&trajs, window)?;
    summary.insert("beta".into(), json!(growth.beta));
    summary.insert("flat".into(), json!(growth.flat));
    tables.push(
        ResultTable::new("width")
            .real("t", growth.times.clone())
            .real("W", growth.width.clone()),
    );
    if equation == "ew" {
        tables.push(structure_table(&trajs, stationary, |k| {
            phase_diffusion_variance(&params, k)
        })?);
    }
    Ok((tables, summary))
}

#[cfg(test)]
mod tests {
    use super::super::{run, ExperimentConfig};

    fn go(text: &str) -> super::super::ResultRecord {
        run(&ExperimentConfig::parse(text, None).unwrap(), None).unwrap()
    }

    #[test]
    fn spectrum_of_model_iii_sector_has_a_zero_mode() {
        let r = go("experiment: spectrum\nmodel: III\nL: 4\nJ_xy: 0.3\nGamma: 1\nsector: 2,2\n");
        assert_eq!(r.summary["zero_modes"], 1);
        let csv = r.table("eigenvalues").unwrap().to_csv();
        assert!(csv.starts_with("index,lambda_re,lambda_im,residual\n"));
    }

    #[test]
    fn gap_sweep_trends_down() {
        let r = go("experiment: gap-sweep\nmodel: I\nL: 4\nGamma: 1\nJ_values: 0.05, 0.2, 0.4\n");
        let t = r.table("gap").unwrap();
        let super::super::ColumnData::Real(g) = t.column("gap").unwrap() else {
            panic!()
        };
        assert!(g[0] > g[1] && g[1] > g[2], "{g:?}");
    }

    #[test]
    fn mean_field_runs_are_reproducible() {
        let text =
            "experiment: meanfield\nmodel: I\nJ: 0.5\nGamma: 1\nd: 2\nT: 50\ndt: 0.01\nseed: 3\n";
        let a = go(text);
        let b = go(text);
        assert_eq!(a.tables[0].to_csv(), b.tables[0].to_csv());
        assert!(a.summary["distance_to_fixed_point"].as_f64().unwrap() < 1e-6);
    }

    #[test]
    fn timecrystal_detects_mu() {
        let r = go("experiment: timecrystal\nmodel: III\nL: 4\nJ_xy: 0.3\nGamma: 0.2\nmu: 0.4\nT: 100\ndt: 0.01\n");
        assert!(r.summary["shift_error"].as_f64().unwrap() < 1e-10);
        let w = r.summary["detected_frequency"].as_f64().unwrap();
        assert!((w - 0.4).abs() < r.summary["frequency_resolution"].as_f64().unwrap());
    }

    #[test]
    fn hydro_density_conserves_total() {
        let r = go("experiment: hydro\nequation: density\nd: 1\nL: 32\nD: 0.5\nsigma_n: 0\ndt: 0.1\nT: 20\n");
        let a = r.summary["total_initial"].as_f64().unwrap();
        let b = r.summary["total_final"].as_f64().unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(r.summary["heat_kernel_l2_error"].as_f64().unwrap() < 0.05);
    }
}
