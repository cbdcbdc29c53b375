// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

//! The C entry points called from Rust and checked against the core crate.

use std::ffi::{CStr, CString};
use std::ptr;

use ndarray::Array2;
use num_complex::Complex64;
use sslab::linalg::eigvals;
use sslab::lindblad::{model_iii, sector_block, vectorize, SectorLabel};
use sslab_ffi::*;

fn last_error() -> String {
    let p = sslab_last_error();
    assert!(!p.is_null(), "a failed call leaves a message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn model_iii_handle(l: usize) -> *mut SslabModel {
    let mut m = ptr::null_mut();
    let s = unsafe { sslab_model_iii_new(l, 1, 0.3, 0.2, 1.0, &mut m) };
    assert_eq!(s, SslabStatus::Ok);
    m
}

#[test]
fn apply_matches_the_core_generator() {
    let m = model_iii_handle(3);
    let mut d = 0;
    assert_eq!(
        unsafe { sslab_model_hilbert_dim(m, &mut d) },
        SslabStatus::Ok
    );
    assert_eq!(d, 8);
    // A fixed non-Hermitian test operator.
    let rho = Array2::from_shape_fn((d, d), |(a, b)| {
        Complex64::new(((a * 7 + b * 3) % 5) as f64 - 2.0, ((a + 2 * b) % 3) as f64)
    });
    let re: Vec<f64> = rho.iter().map(|z| z.re).collect();
    let im: Vec<f64> = rho.iter().map(|z| z.im).collect();
    let (mut ore, mut oim) = (vec![0.0; d * d], vec![0.0; d * d]);
    let s = unsafe {
        sslab_model_apply(
            m,
            re.as_ptr(),
            im.as_ptr(),
            ore.as_mut_ptr(),
            oim.as_mut_ptr(),
            d * d,
        )
    };
    assert_eq!(s, SslabStatus::Ok);
    let want = model_iii(3, 0.5, 0.3, 0.2, 1.0)
        .unwrap()
        .apply(&rho)
        .unwrap();
    for (i, z) in want.iter().enumerate() {
        assert!((ore[i] - z.re).abs() < 1e-14 && (oim[i] - z.im).abs() < 1e-14);
    }
    let s = unsafe {
        sslab_model_apply(
            m,
            re.as_ptr(),
            im.as_ptr(),
            ore.as_mut_ptr(),
            oim.as_mut_ptr(),
            5,
        )
    };
    assert_eq!(s, SslabStatus::Validation);
    assert!(last_error().contains("expected 64"));
    unsafe { sslab_model_free(m) };
}

#[test]
fn sector_spectrum_matches_dense_eigenvalues() {
    let m = model_iii_handle(4);
    let sector = SslabSector {
        kind: SslabSectorKind::Pair,
        a: 2,
        b: 2,
    };
    let (mut re, mut im) = (vec![0.0; 4], vec![0.0; 4]);
    let (mut len, mut gap) = (0, 0.0);
    let s = unsafe {
        sslab_model_sector_spectrum(
            m,
            sector,
            4,
            re.as_mut_ptr(),
            im.as_mut_ptr(),
            &mut len,
            &mut gap,
        )
    };
    assert_eq!(s, SslabStatus::Ok);
    assert_eq!(len, 4);
    let spec = model_iii(4, 0.5, 0.3, 0.2, 1.0).unwrap();
    let block = sector_block(&vectorize(&spec).unwrap(), SectorLabel::Pair(2, 2));
    let mut all = eigvals(&block.matrix.to_dense()).unwrap();
    all.sort_by(|a, b| b.re.total_cmp(&a.re));
    // The projector onto the sector is the unique zero mode.
    assert!(re[0].abs() < 1e-10 && im[0].abs() < 1e-10);
    for i in 0..4 {
        assert!(
            (re[i] - all[i].re).abs() < 1e-9,
            "{i}: {} vs {}",
            re[i],
            all[i].re
        );
    }
    assert!((gap + all[1].re).abs() < 1e-9);
    // An empty sector writes nothing.
    let empty = SslabSector {
        kind: SslabSectorKind::Pair,
        a: 9,
        b: 9,
    };
    let s = unsafe {
        sslab_model_sector_spectrum(
            m,
            empty,
            4,
            re.as_mut_ptr(),
            im.as_mut_ptr(),
            &mut len,
            &mut gap,
        )
    };
    assert_eq!(s, SslabStatus::Ok);
    assert_eq!(len, 0);
    unsafe { sslab_model_free(m) };
}

#[test]
fn symmetry_classes() {
    let mut class = SslabSymmetry::None;
    let m = model_iii_handle(3);
    assert_eq!(
        unsafe { sslab_model_symmetry(m, &mut class) },
        SslabStatus::Ok
    );
    assert_eq!(class, SslabSymmetry::Strong);
    unsafe { sslab_model_free(m) };
    let mut m = ptr::null_mut();
    let extents = [4usize];
    assert_eq!(
        unsafe { sslab_model_i_new(extents.as_ptr(), 1, 0.3, 0.1, 1.0, &mut m) },
        SslabStatus::Ok
    );
    assert_eq!(
        unsafe { sslab_model_symmetry(m, &mut class) },
        SslabStatus::Ok
    );
    assert_eq!(class, SslabSymmetry::Weak);
    unsafe { sslab_model_free(m) };
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { sslab_model_ii_new(extents.as_ptr(), 1, 0.3, 0.1, 1.0, 0.2, &mut m) },
        SslabStatus::Ok
    );
    assert_eq!(
        unsafe { sslab_model_symmetry(m, &mut class) },
        SslabStatus::Ok
    );
    assert_eq!(class, SslabSymmetry::Strong);
    unsafe { sslab_model_free(m) };
}

#[test]
fn invalid_arguments_report_status_and_message() {
    let mut m = ptr::null_mut();
    let extents = [4usize, 4, 4];
    assert_eq!(
        unsafe { sslab_model_i_new(extents.as_ptr(), 3, 0.3, 0.0, 1.0, &mut m) },
        SslabStatus::Validation
    );
    assert!(last_error().contains("1 or 2 dimensions"));
    assert_eq!(
        unsafe { sslab_model_i_new(ptr::null(), 1, 0.3, 0.0, 1.0, &mut m) },
        SslabStatus::NullPointer
    );
    assert!(last_error().contains("extents"));
    assert_eq!(
        unsafe { sslab_model_iii_new(4, 1, 0.3, 0.0, -1.0, &mut m) },
        SslabStatus::Validation
    );
    assert!(
        m.is_null(),
        "failed constructors leave the output untouched"
    );
    let mut d = 0;
    assert_eq!(
        unsafe { sslab_model_hilbert_dim(ptr::null(), &mut d) },
        SslabStatus::NullPointer
    );
    unsafe {
        sslab_model_free(ptr::null_mut());
        sslab_result_free(ptr::null_mut());
    }
}

#[test]
fn meanfield_threshold_is_one_quarter() {
    let mut nc = 0.0;
    let s = unsafe { sslab_meanfield_ii_threshold(0.3, 1.0, 2, 0.1, 0.45, 1e-6, &mut nc) };
    assert_eq!(s, SslabStatus::Ok);
    assert!((nc - 0.25).abs() < 1e-4, "{nc}");
}

#[test]
fn configs_run_through_the_abi() {
    let text =
        CString::new("experiment: meanfield\nmodel: I\nJ: 0.5\nGamma: 1\nd: 2\nT: 200\ndt: 0.01\n")
            .unwrap();
    let run_with = |seed: u64| {
        let mut r = ptr::null_mut();
        assert_eq!(
            unsafe { sslab_run_config(text.as_ptr(), &seed, &mut r) },
            SslabStatus::Ok
        );
        r
    };
    let (a, b) = (run_with(5), run_with(5));
    let key = CString::new("distance_to_fixed_point").unwrap();
    let (mut da, mut db) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            sslab_result_summary(a, key.as_ptr(), &mut da),
            SslabStatus::Ok
        );
        assert_eq!(
            sslab_result_summary(b, key.as_ptr(), &mut db),
            SslabStatus::Ok
        );
    }
    assert_eq!(da, db, "a fixed seed reproduces the run");
    assert!(da < 1e-8);
    let json: serde_json::Value = serde_json::from_str(
        unsafe { CStr::from_ptr(sslab_result_json(a)) }
            .to_str()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(json["experiment"], "meanfield");
    assert_eq!(json["seed"], 5);
    let missing = CString::new("no_such_key").unwrap();
    assert_eq!(
        unsafe { sslab_result_summary(a, missing.as_ptr(), &mut da) },
        SslabStatus::Validation
    );
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { sslab_result_write(a, path.as_ptr()) },
        SslabStatus::Ok
    );
    assert!(dir.path().join("meanfield.json").exists());
    unsafe {
        sslab_result_free(a);
        sslab_result_free(b);
    }
}

#[test]
fn bad_configs_are_validation_errors() {
    let mut r = ptr::null_mut();
    let text = CString::new("experiment: meanfield\nmodel: I\nJ: 0.5\nGamma: 1\nd: 9\nbogus: 1\n")
        .unwrap();
    assert_eq!(
        unsafe { sslab_run_config(text.as_ptr(), ptr::null(), &mut r) },
        SslabStatus::Validation
    );
    let msg = last_error();
    assert!(msg.contains("bogus") && msg.contains('d'), "{msg}");
    assert!(r.is_null());
    let bytes = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { sslab_run_config(bytes.as_ptr().cast(), ptr::null(), &mut r) },
        SslabStatus::Validation
    );
    assert!(last_error().contains("UTF-8"));
}

#[test]
fn errors_are_per_thread() {
    let mut m = ptr::null_mut();
    assert_ne!(
        unsafe { sslab_model_iii_new(1, 1, 0.3, 0.0, 1.0, &mut m) },
        SslabStatus::Ok
    );
    std::thread::spawn(|| assert!(sslab_last_error().is_null()))
        .join()
        .unwrap();
    assert!(!sslab_last_error().is_null());
}
