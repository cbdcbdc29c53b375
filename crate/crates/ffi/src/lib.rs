// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! C ABI for sslab.
//!
//! Every function returns an [`SslabStatus`]. On failure the message is kept
//! per thread and read with [`sslab_last_error`]. Objects are opaque handles
//! created by a constructor and released with the matching `_free`. Panics
//! never cross the boundary; they surface as `SSLAB_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ndarray::Array2;
use num_complex::Complex64;

use sslab::cli::{run, CliError, ErrorKind, ExperimentConfig, ResultRecord};
use sslab::hilbert::total_charge;
use sslab::lattice::{build_chain, build_square, Lattice};
use sslab::lindblad::{
    model_i, model_ii, model_iii, sector_block, symmetry_check, vectorize, LindbladSpec,
    SectorLabel, SymmetryClass,
};
use sslab::meanfield::{instability_threshold, MFParams};
use sslab::spectral::spectrum;

/// Status codes. Validation, numerical and I/O failures share their values
/// with the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SslabStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Numerical = 3,
    Io = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SslabSymmetry {
    Strong = 0,
    Weak = 1,
    None = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SslabSectorKind {
    /// Left and right charges `(a, b)`.
    Pair = 0,
    /// Charge difference `a`; `b` is ignored.
    Difference = 1,
}

/// A charge sector of the doubled space.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SslabSector {
    pub kind: SslabSectorKind,
    pub a: i64,
    pub b: i64,
}

/// Opaque Lindbladian.
pub struct SslabModel {
    spec: LindbladSpec,
}

/// Opaque experiment result.
pub struct SslabResult {
    record: ResultRecord,
    json: CString,
}

struct Failure {
    status: SslabStatus,
    message: String,
}

impl Failure {
    fn new(status: SslabStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<sslab::error::Error> for Failure {
    fn from(e: sslab::error::Error) -> Self {
        CliError::from(e).into()
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e.kind {
            ErrorKind::Validation => SslabStatus::Validation,
            ErrorKind::Numerical => SslabStatus::Numerical,
            ErrorKind::Io => SslabStatus::Io,
        };
        let mut message = e.message.clone();
        for v in &e.violations {
            message.push_str(&format!("; {}: {}", v.field, v.message));
        }
        Self::new(status, message)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any failure and converts it to a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SslabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SslabStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(panic) => {
            let what = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {what}"));
            SslabStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(
            SslabStatus::NullPointer,
            format!("{name} is null"),
        ))
    } else {
        Ok(())
    }
}

unsafe fn model_ref<'a>(model: *const SslabModel) -> Result<&'a SslabModel, Failure> {
    non_null(model, "model")?;
    Ok(&*model)
}

unsafe fn lattice_from(extents: *const usize, ndim: usize) -> Result<Lattice, Failure> {
    non_null(extents, "extents")?;
    let e = std::slice::from_raw_parts(extents, ndim);
    Ok(match e {
        [l] => build_chain(*l)?,
        [lx, ly] => build_square(*lx, *ly)?,
        _ => {
            return Err(Failure::new(
                SslabStatus::Validation,
                format!("lattices have 1 or 2 dimensions, got {ndim}"),
            ))
        }
    })
}

unsafe fn emit_model(out: *mut *mut SslabModel, spec: LindbladSpec) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(SslabModel { spec }));
    Ok(())
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next sslab call on the same thread.
#[no_mangle]
pub extern "C" fn sslab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn sslab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Model I on a periodic chain (`ndim = 1`) or square lattice (`ndim = 2`).
///
/// # Safety
/// `extents` must point to `ndim` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sslab_model_i_new(
    extents: *const usize,
    ndim: usize,
    j: f64,
    jz: f64,
    gamma: f64,
    out: *mut *mut SslabModel,
) -> SslabStatus {
    guard(|| {
        non_null(out, "out")?;
        let lat = lattice_from(extents, ndim)?;
        emit_model(out, model_i(&lat, j, jz, gamma)?)
    })
}

/// Model II on the full spin-1/2 space.
///
/// # Safety
/// As for [`sslab_model_i_new`].
#[no_mangle]
pub unsafe extern "C" fn sslab_model_ii_new(
    extents: *const usize,
    ndim: usize,
    j: f64,
    jz: f64,
    gamma: f64,
    gamma_z: f64,
    out: *mut *mut SslabModel,
) -> SslabStatus {
    guard(|| {
        non_null(out, "out")?;
        let lat = lattice_from(extents, ndim)?;
        emit_model(out, model_ii(&lat, j, jz, gamma, gamma_z)?)
    })
}

/// Model III on a ring of `l` spins of size `two_s / 2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sslab_model_iii_new(
    l: usize,
    two_s: u32,
    jxy: f64,
    jz: f64,
    gamma: f64,
    out: *mut *mut SslabModel,
) -> SslabStatus {
    guard(|| {
        non_null(out, "out")?;
        emit_model(out, model_iii(l, f64::from(two_s) / 2.0, jxy, jz, gamma)?)
    })
}

/// Releases a model. Null is accepted.
///
/// # Safety
/// `model` must come from an sslab constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sslab_model_free(model: *mut SslabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Hilbert-space dimension D; density matrices are D×D.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sslab_model_hilbert_dim(
    model: *const SslabModel,
    out: *mut usize,
) -> SslabStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = model_ref(model)?.spec.hilbert_dim();
        Ok(())
    })
}

/// Applies the generator to a row-major D×D operator given as separate real
/// and imaginary arrays of length `len = D²`.
///
/// # Safety
/// All four arrays must hold `len` values; outputs may not alias inputs.
#[no_mangle]
pub unsafe extern "C" fn sslab_model_apply(
    model: *const SslabModel,
    rho_re: *const f64,
    rho_im: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
    len: usize,
) -> SslabStatus {
    guard(|| {
        let m = model_ref(model)?;
        for (p, name) in [(rho_re, "rho_re"), (rho_im, "rho_im")] {
            non_null(p, name)?;
        }
        non_null(out_re, "out_re")?;
        non_null(out_im, "out_im")?;
        let d = m.spec.hilbert_dim();
        if len != d * d {
            return Err(Failure::new(
                SslabStatus::Validation,
                format!("expected {} entries, got {len}", d * d),
            ));
        }
        let (re, im) = (
            std::slice::from_raw_parts(rho_re, len),
            std::slice::from_raw_parts(rho_im, len),
        );
        let rho = Array2::from_shape_fn((d, d), |(a, b)| {
            Complex64::new(re[a * d + b], im[a * d + b])
        });
        let l = m.spec.apply(&rho)?;
        let (ore, oim) = (
            std::slice::from_raw_parts_mut(out_re, len),
            std::slice::from_raw_parts_mut(out_im, len),
        );
        for ((a, b), z) in l.indexed_iter() {
            ore[a * d + b] = z.re;
            oim[a * d + b] = z.im;
        }
        Ok(())
    })
}

/// U(1) symmetry class of the model under its total charge.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sslab_model_symmetry(
    model: *const SslabModel,
    out: *mut SslabSymmetry,
) -> SslabStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec = &model_ref(model)?.spec;
        *out = match symmetry_check(spec, &total_charge(&spec.space))? {
            SymmetryClass::Strong => SslabSymmetry::Strong,
            SymmetryClass::Weak => SslabSymmetry::Weak,
            SymmetryClass::None => SslabSymmetry::None,
        };
        Ok(())
    })
}

/// Up to `capacity` slowest eigenvalues of one sector block, sorted by
/// descending real part, and the sector gap. `*out_len` receives the number
/// written. An empty sector writes nothing and a gap of zero.
///
/// # Safety
/// `out_re` and `out_im` must hold `capacity` values; `out_len` and `out_gap`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sslab_model_sector_spectrum(
    model: *const SslabModel,
    sector: SslabSector,
    capacity: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_len: *mut usize,
    out_gap: *mut f64,
) -> SslabStatus {
    guard(|| {
        let spec = &model_ref(model)?.spec;
        non_null(out_re, "out_re")?;
        non_null(out_im, "out_im")?;
        non_null(out_len, "out_len")?;
        non_null(out_gap, "out_gap")?;
        let label = match sector.kind {
            SslabSectorKind::Pair => SectorLabel::Pair(sector.a, sector.b),
            SslabSectorKind::Difference => SectorLabel::Difference(sector.a),
        };
        let block = sector_block(&vectorize(spec)?, label);
        *out_len = 0;
        *out_gap = 0.0;
        if block.dim() == 0 || capacity == 0 {
            return Ok(());
        }
        let res = spectrum(&block, capacity.min(block.dim()))?;
        let n = res.eigenvalues.len().min(capacity);
        let (re, im) = (
            std::slice::from_raw_parts_mut(out_re, capacity),
            std::slice::from_raw_parts_mut(out_im, capacity),
        );
        for (i, z) in res.eigenvalues.iter().take(n).enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        *out_len = n;
        *out_gap = res.gap;
        Ok(())
    })
}

/// Filling at which the symmetric model II mean-field point turns unstable,
/// bisected on `[lo, hi]` to `tol`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sslab_meanfield_ii_threshold(
    j: f64,
    gamma: f64,
    d: usize,
    lo: f64,
    hi: f64,
    tol: f64,
    out: *mut f64,
) -> SslabStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = MFParams {
            n: lo,
            ..MFParams::new(j, gamma, d)
        };
        *out = instability_threshold(&p, lo, hi, tol)?;
        Ok(())
    })
}

/// Parses and runs an experiment config (the CLI file format, including the
/// `experiment` key). `seed` may be null to use the config's seed.
///
/// # Safety
/// `config` must be a nul-terminated UTF-8 string; `seed` null or readable;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sslab_run_config(
    config: *const c_char,
    seed: *const u64,
    out: *mut *mut SslabResult,
) -> SslabStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|_| Failure::new(SslabStatus::Validation, "config is not UTF-8"))?;
        let cfg = ExperimentConfig::parse(text, None).map_err(CliError::validation)?;
        let seed = if seed.is_null() { None } else { Some(*seed) };
        let record = run(&cfg, seed)?;
        let json = CString::new(record.metadata().to_string())
            .map_err(|_| Failure::new(SslabStatus::Internal, "metadata holds a nul byte"))?;
        *out = Box::into_raw(Box::new(SslabResult { record, json }));
        Ok(())
    })
}

/// Result metadata and summary as JSON. The string is owned by the handle.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sslab_result_json(result: *const SslabResult) -> *const c_char {
    if result.is_null() {
        set_last_error("result is null");
        return ptr::null();
    }
    (*result).json.as_ptr()
}

/// A numeric summary entry by name.
///
/// # Safety
/// `result` must be a live handle, `key` a nul-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sslab_result_summary(
    result: *const SslabResult,
    key: *const c_char,
    out: *mut f64,
) -> SslabStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(key, "key")?;
        non_null(out, "out")?;
        let key = CStr::from_ptr(key).to_string_lossy();
        let v = (*result).record.summary.get(key.as_ref()).ok_or_else(|| {
            Failure::new(SslabStatus::Validation, format!("no summary entry {key}"))
        })?;
        *out = v.as_f64().ok_or_else(|| {
            Failure::new(
                SslabStatus::Validation,
                format!("summary entry {key} is not a number"),
            )
        })?;
        Ok(())
    })
}

/// Writes the result tables and metadata into directory `dir`.
///
/// # Safety
/// `result` must be a live handle and `dir` a nul-terminated UTF-8 path.
#[no_mangle]
pub unsafe extern "C" fn sslab_result_write(
    result: *const SslabResult,
    dir: *const c_char,
) -> SslabStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(dir, "dir")?;
        let dir = CStr::from_ptr(dir)
            .to_str()
            .map_err(|_| Failure::new(SslabStatus::Validation, "path is not UTF-8"))?;
        (*result).record.write(Path::new(dir))?;
        Ok(())
    })
}

/// Releases a result. Null is accepted.
///
/// # Safety
/// `result` must come from [`sslab_run_config`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sslab_result_free(result: *mut SslabResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
