use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use skorokhod_ffi::*;

fn trace(times: &[f64], values: &[f64], dim: usize) -> *mut SkdTrace {
    let mut out = ptr::null_mut();
    let status = unsafe { skd_trace_new(times.as_ptr(), values.as_ptr(), times.len(), dim, &mut out) };
    assert_eq!(status, SkdStatus::Ok);
    out
}

fn formula(text: &str) -> *mut SkdFormula {
    let text = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { skd_formula_parse(text.as_ptr(), &mut out) }, SkdStatus::Ok);
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(skd_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn distance_between_constant_traces() {
    let a = trace(&[0.0, 1.0], &[0.0, 0.0], 1);
    let b = trace(&[0.0, 1.0], &[3.0, 3.0], 1);
    unsafe {
        assert_eq!(skd_trace_len(a), 2);
        assert_eq!(skd_trace_dim(b), 1);
        let (mut d, mut calls) = (0.0, 0usize);
        assert_eq!(skd_distance(a, b, 0, 1e-6, &mut d, &mut calls), SkdStatus::Ok);
        assert!((d - 3.0).abs() <= 1e-6);
        assert!(calls >= 1);
        let mut within = true;
        assert_eq!(skd_check_within(a, b, 2.0, 5, &mut within), SkdStatus::Ok);
        assert!(!within);
        assert_eq!(skd_distance(a, b, 0, -1.0, &mut d, ptr::null_mut()), SkdStatus::Engine);
        assert!(last_error().contains("tolerance"));
        skd_trace_free(a);
        skd_trace_free(b);
    }
}

#[test]
fn bad_inputs_report_status_codes() {
    let mut out = ptr::null_mut();
    unsafe {
        let times = [1.0, 0.0];
        let status = skd_trace_new(times.as_ptr(), times.as_ptr(), 2, 1, &mut out);
        assert_eq!(status, SkdStatus::InvalidArgument);
        assert!(out.is_null());
        assert_eq!(
            skd_trace_new(ptr::null(), times.as_ptr(), 2, 1, &mut out),
            SkdStatus::NullPointer
        );
        let missing = CString::new("/nonexistent/trace.csv").unwrap();
        assert_eq!(skd_trace_from_csv(missing.as_ptr(), &mut out), SkdStatus::Io);
        let text = CString::new("Q U").unwrap();
        let mut f = ptr::null_mut();
        assert_eq!(skd_formula_parse(text.as_ptr(), &mut f), SkdStatus::Parse);
        assert!(!last_error().is_empty());
        skd_trace_free(ptr::null_mut());
        skd_formula_free(ptr::null_mut());
    }
}

#[test]
fn relax_and_evaluate() {
    let f = formula("Q U[2,3] R");
    unsafe {
        let mut relaxed = ptr::null_mut();
        assert_eq!(skd_formula_relax(f, 0.5, 0.0, 10.0, &mut relaxed), SkdStatus::Ok);
        let s = skd_formula_to_string(relaxed);
        let text = CStr::from_ptr(s).to_str().unwrap().to_string();
        skd_string_free(s);
        assert_eq!(text, "x.(Q U y.(((-x + y - 4 <= 0) & (-x + y - 1 >= 0)) & R))");
        skd_formula_free(relaxed);
        skd_formula_free(f);
    }

    let tr = trace(&[0.0, 1.0, 2.0], &[0.0, 1.0, 3.0], 1);
    let preds = CString::new(r#"{"high": {"coeffs": [1.0], "const": -2.5, "rel": ">="}}"#).unwrap();
    let h = formula("F high");
    unsafe {
        let mut holds = false;
        assert_eq!(skd_formula_eval(h, tr, preds.as_ptr(), &mut holds), SkdStatus::Ok);
        assert!(holds);
        assert_eq!(skd_formula_eval(h, tr, ptr::null(), &mut holds), SkdStatus::Logic);
        skd_formula_free(h);
        skd_trace_free(tr);
    }
}

#[test]
fn csv_round_trip() {
    let dir = std::env::temp_dir().join(format!("skd-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("t.csv");
    std::fs::write(&path, "t,x\n0,1\n1,2\n2,4\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(skd_trace_from_csv(c.as_ptr(), &mut out), SkdStatus::Ok);
        assert_eq!(skd_trace_len(out), 3);
        skd_trace_free(out);
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(skd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/skorokhod.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in [
        "skd_distance",
        "skd_check_within",
        "skd_formula_relax",
        "SKD_STATUS_OK",
        "typedef struct SkdTrace SkdTrace",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler available; skipped syntax check");
        return;
    };
    assert!(status.success());
}
