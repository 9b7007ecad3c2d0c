use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use qrforms_ffi::*;

fn map(name: &str, params: &[f64]) -> *mut QrfMap {
    let name = CString::new(name).unwrap();
    let mut m = ptr::null_mut();
    let s = unsafe { qrf_map_new(name.as_ptr(), params.as_ptr(), params.len(), &mut m) };
    assert_eq!(s, QrfStatus::Ok, "{}", last_error());
    m
}

fn last_error() -> String {
    let p = qrf_last_error();
    if p.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }
}

#[test]
fn map_lifecycle() {
    let f = map("winding2d", &[2.0]);
    unsafe {
        assert_eq!(qrf_map_dim(f), 2);
        let mut y = [0.0; 2];
        assert_eq!(
            qrf_map_eval(f, [0.0, 0.5].as_ptr(), 2, y.as_mut_ptr()),
            QrfStatus::Ok
        );
        // (i/2)² / |i/2| = -1/2
        assert!((y[0] + 0.5).abs() < 1e-14 && y[1].abs() < 1e-14);
        let mut j = [0.0; 4];
        assert_eq!(
            qrf_map_jacobian(f, [0.6, 0.0].as_ptr(), 2, j.as_mut_ptr()),
            QrfStatus::Ok
        );
        // radial stretch 1, angular stretch 2 on the positive axis
        assert!((j[0] - 1.0).abs() < 1e-12 && (j[3] - 2.0).abs() < 1e-12);
        assert!(j[1].abs() < 1e-12 && j[2].abs() < 1e-12);
        qrf_map_free(f);
        qrf_map_free(ptr::null_mut());
        assert_eq!(qrf_map_dim(ptr::null()), 0);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut m = ptr::null_mut();
    let name = CString::new("spiral").unwrap();
    unsafe {
        assert_eq!(
            qrf_map_new(name.as_ptr(), ptr::null(), 0, &mut m),
            QrfStatus::InvalidArgument
        );
        assert!(m.is_null());
        assert!(last_error().contains("spiral"));
        let w = CString::new("winding2d").unwrap();
        assert_eq!(
            qrf_map_new(w.as_ptr(), [1.5].as_ptr(), 1, &mut m),
            QrfStatus::InvalidArgument
        );
        assert_eq!(
            qrf_map_new(ptr::null(), ptr::null(), 0, &mut m),
            QrfStatus::NullPointer
        );
        assert_eq!(
            qrf_map_new(w.as_ptr(), [2.0].as_ptr(), 1, ptr::null_mut()),
            QrfStatus::NullPointer
        );
        let f = map("winding2d", &[2.0]);
        assert!(qrf_last_error().is_null());
        let mut y = [0.0; 3];
        assert_eq!(
            qrf_map_eval(f, [0.1; 3].as_ptr(), 3, y.as_mut_ptr()),
            QrfStatus::DimensionMismatch
        );
        assert_eq!(
            qrf_map_eval(f, [0.1; 2].as_ptr(), 2, ptr::null_mut()),
            QrfStatus::NullPointer
        );
        assert_eq!(
            qrf_map_eval(ptr::null(), [0.1; 2].as_ptr(), 2, y.as_mut_ptr()),
            QrfStatus::NullPointer
        );
        qrf_map_free(f);
    }
}

#[test]
fn svd_of_diagonal_and_rotation() {
    let mut s = [0.0; 2];
    let (mut j, mut k) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            qrf_svd([1.0, 0.0, 0.0, 3.0].as_ptr(), 2, s.as_mut_ptr(), &mut j, &mut k),
            QrfStatus::Ok
        );
    }
    assert_eq!(s, [3.0, 1.0]);
    assert!((j - 3.0).abs() < 1e-14 && (k - 3.0).abs() < 1e-14);
    let (c, sn) = (0.3f64.cos(), 0.3f64.sin());
    unsafe {
        assert_eq!(
            qrf_svd([c, -sn, sn, c].as_ptr(), 2, s.as_mut_ptr(), &mut j, &mut k),
            QrfStatus::Ok
        );
        assert_eq!(
            qrf_svd([1.0].as_ptr(), 0, s.as_mut_ptr(), &mut j, &mut k),
            QrfStatus::InvalidArgument
        );
    }
    assert!((s[0] - 1.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
    assert!((j - 1.0).abs() < 1e-14);
}

#[test]
fn comass_split_pair_and_certified_grade() {
    // ε12 + ε34 in lexicographic order 12, 13, 14, 23, 24, 34
    let a = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let (mut lower, mut norm, mut certified) = (0.0, 0.0, true);
    unsafe {
        assert_eq!(
            qrf_comass(a.as_ptr(), 6, 4, 2, 7, &mut lower, &mut norm, &mut certified),
            QrfStatus::Ok
        );
    }
    assert!(!certified);
    assert!((lower - 1.0).abs() < 1e-6, "{lower}");
    assert!((norm - 2f64.sqrt()).abs() < 1e-14);
    unsafe {
        assert_eq!(
            qrf_comass(
                [3.0, 4.0].as_ptr(),
                2,
                2,
                1,
                0,
                &mut lower,
                &mut norm,
                &mut certified
            ),
            QrfStatus::Ok
        );
        assert!(certified && lower == 5.0);
        assert_eq!(
            qrf_comass(
                [1.0; 5].as_ptr(),
                5,
                4,
                2,
                0,
                &mut lower,
                &mut norm,
                &mut certified
            ),
            QrfStatus::DimensionMismatch
        );
    }
}

#[test]
fn dilatation_index_and_preimages() {
    let f = map("winding2d", &[3.0]);
    let (mut k, mut viol) = (0.0, 1.0);
    let (mut index, mut residual) = (0i64, 1.0);
    let (mut count, mut unstable) = (0usize, true);
    unsafe {
        assert_eq!(
            qrf_map_dilatation(f, -1.0, 1.0, 65, &mut k, &mut viol),
            QrfStatus::Ok
        );
        assert_eq!(
            qrf_local_index(f, [0.0, 0.0].as_ptr(), 0.2, &mut index, &mut residual),
            QrfStatus::Ok
        );
        assert_eq!(
            qrf_preimage_count(f, [0.3, 0.1].as_ptr(), 1.0, 49, &mut count, &mut unstable),
            QrfStatus::Ok
        );
        assert_eq!(
            qrf_preimage_count(f, [0.3, 0.1].as_ptr(), -1.0, 49, &mut count, &mut unstable),
            QrfStatus::InvalidArgument
        );
        assert_eq!(
            qrf_map_dilatation(f, -1.0, 1.0, 1, &mut k, &mut viol),
            QrfStatus::InvalidArgument
        );
        qrf_map_free(f);
    }
    assert!((k - 3.0).abs() < 1e-9 && viol < 1e-9);
    assert_eq!(index, 3);
    assert!(residual < 0.1);
    assert_eq!(count, 3);
    assert!(!unstable);
}

#[test]
fn run_suite_round_trip() {
    let cfg = CString::new(r#"{"suites": ["algebra"]}"#).unwrap();
    let mut report = ptr::null_mut();
    let mut pass = false;
    unsafe {
        assert_eq!(
            qrf_run_suite(cfg.as_ptr(), QrfFormat::Json, &mut report, &mut pass),
            QrfStatus::Ok
        );
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        qrf_string_free(report);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(pass);
        assert_eq!(v["summary"]["fail"], 0);

        assert_eq!(
            qrf_run_suite(cfg.as_ptr(), QrfFormat::Csv, &mut report, &mut pass),
            QrfStatus::Ok
        );
        assert!(CStr::from_ptr(report).to_str().unwrap().lines().count() > 1);
        qrf_string_free(report);

        let bad = CString::new(r#"{"suites": ["topology"]}"#).unwrap();
        assert_eq!(
            qrf_run_suite(bad.as_ptr(), QrfFormat::Json, &mut report, &mut pass),
            QrfStatus::Parse
        );
        assert!(report.is_null());
        assert!(last_error().contains("topology"));
        qrf_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(qrf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(manifest().join("include/qrforms.h")).unwrap();
    for name in [
        "typedef struct QrfMap QrfMap",
        "QRF_STATUS_OK = 0",
        "QRF_STATUS_PANIC = 7",
        "qrf_map_new",
        "qrf_map_free",
        "qrf_map_eval",
        "qrf_map_jacobian",
        "qrf_map_dilatation",
        "qrf_svd",
        "qrf_comass",
        "qrf_local_index",
        "qrf_preimage_count",
        "qrf_run_suite",
        "qrf_string_free",
        "qrf_last_error",
    ] {
        assert!(h.contains(name), "{name}");
    }
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let lib = dir.join("libqrforms_ffi.a");
    lib.exists().then_some(lib)
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn c_program_links_against_static_library() {
    let Some(lib) = static_lib() else {
        eprintln!("static library not built; skipping");
        return;
    };
    if !have_cc() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(manifest().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(Path::new(&exe)).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
