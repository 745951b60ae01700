//! The C ABI exercised from Rust, plus a C program compiled against the
//! generated header and linked to the static library.

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use girsanov_verdict_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = gv_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn expression_round_trip() {
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { gv_expression_parse(c("x^2 + 1").as_ptr(), &mut e) }, GvStatus::Ok);
    let mut v = 0.0;
    let x = [3.0];
    assert_eq!(unsafe { gv_expression_eval(e, x.as_ptr(), 1, 0.0, &mut v) }, GvStatus::Ok);
    assert_eq!(v, 10.0);
    unsafe { gv_expression_free(e) };
}

#[test]
fn errors_set_status_and_message() {
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { gv_expression_parse(c("x +").as_ptr(), &mut e) }, GvStatus::ParseError);
    assert!(e.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { gv_expression_parse(ptr::null(), &mut e) }, GvStatus::NullPointer);
    let mut log = ptr::null_mut();
    unsafe { gv_expression_parse(c("log(x)").as_ptr(), &mut log) };
    let mut v = 0.0;
    let x = [-1.0];
    assert_eq!(unsafe { gv_expression_eval(log, x.as_ptr(), 1, 0.0, &mut v) }, GvStatus::EvalError);
    unsafe { gv_expression_free(log) };
    let mut f = ptr::null_mut();
    let status = unsafe { gv_field_new_1d(GvDomain::RealLine, c("0").as_ptr(), c("-1").as_ptr(), c("0").as_ptr(), 0.0, &mut f) };
    assert_eq!(status, GvStatus::InvalidField);
    assert!(last_error().contains("not positive"));
}

#[test]
fn classification_through_handles() {
    let mut f = ptr::null_mut();
    let status = unsafe { gv_field_new_1d(GvDomain::RealLine, c("0").as_ptr(), c("1").as_ptr(), c("1").as_ptr(), 0.0, &mut f) };
    assert_eq!(status, GvStatus::Ok);
    let mut v = GvAcVerdict {
        local_ac: GvTri::Inconclusive,
        global_ac: GvTri::Inconclusive,
        beta_zero: GvTri::Inconclusive,
        battery: [GvTri::Inconclusive; 6],
    };
    assert_eq!(unsafe { gv_classify_1d(f, &mut v) }, GvStatus::Ok);
    assert_eq!((v.local_ac, v.global_ac, v.beta_zero), (GvTri::Yes, GvTri::No, GvTri::No));
    assert_eq!(&v.battery[..4], &[GvTri::No, GvTri::Yes, GvTri::No, GvTri::Yes]);
    let mut r = GvTri::Inconclusive;
    assert_eq!(unsafe { gv_classify_reverse(f, &mut r) }, GvStatus::Ok);
    assert_eq!(r, GvTri::Yes);
    unsafe { gv_field_free(f) };

    let mut g = ptr::null_mut();
    let json = c(r#"{"b": ["0", "0", "0"], "c": "1", "beta": ["x1", "x2", "x3"], "x0": [1, 0, 0]}"#);
    assert_eq!(unsafe { gv_field_from_json(json.as_ptr(), &mut g) }, GvStatus::Ok);
    assert_eq!(unsafe { gv_classify_1d(g, &mut v) }, GvStatus::ClassifyError);
    unsafe { gv_field_free(g) };
}

#[test]
fn run_json_returns_the_canonical_report() {
    let cfg = c(r#"{"field": {"b": "0", "c": "1", "beta": "0", "x0": 0}, "mc": {"n_paths": 100}}"#);
    let mut report: *mut c_char = ptr::null_mut();
    let mut code = -1;
    assert_eq!(unsafe { gv_run_json(cfg.as_ptr(), c("simulate").as_ptr(), &mut report, &mut code) }, GvStatus::Ok);
    assert_eq!(code, 0);
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    unsafe { gv_string_free(report) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["result"]["simulate"]["mean_z"]["mean"], 1.0);
    assert_eq!(unsafe { gv_run_json(cfg.as_ptr(), ptr::null(), &mut report, &mut code) }, GvStatus::RunError);
    assert!(last_error().contains("/task"));
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(gv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn c_program_links_against_the_header() {
    let Ok(compiler) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = exe_dir.join("libgirsanov_verdict_ffi.a");
    assert!(lib.exists(), "static library missing at {lib:?}");
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("gv_smoke");
    let status = Command::new(&compiler)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "local=1 global=0 plus2=1");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
