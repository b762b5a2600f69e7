use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use srbkit_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0; 512];
    unsafe { srb_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn new_system(spec: &str) -> Result<*mut SrbSystem, SrbStatus> {
    let spec = CString::new(spec).unwrap();
    let mut sys = ptr::null_mut();
    match unsafe { srb_system_new(spec.as_ptr(), &mut sys) } {
        SrbStatus::Ok => Ok(sys),
        s => Err(s),
    }
}

#[test]
fn cat_round_trip_through_the_handle() {
    let sys = new_system(r#"{"name": "cat"}"#).unwrap();
    let name = unsafe { CStr::from_ptr(srb_system_name(sys)) };
    assert_eq!(name.to_str().unwrap(), "cat");
    let (mut dim, mut dim_f) = (0, 0);
    assert_eq!(unsafe { srb_system_dims(sys, &mut dim, &mut dim_f) }, SrbStatus::Ok);
    assert_eq!((dim, dim_f), (2, 1));

    let x = [0.1, 0.2];
    let mut y = [0.0; 2];
    assert_eq!(
        unsafe { srb_system_forward(sys, x.as_ptr(), 2, y.as_mut_ptr()) },
        SrbStatus::Ok
    );
    assert!((y[0] - 0.4).abs() < 1e-12 && (y[1] - 0.3).abs() < 1e-12, "{y:?}");

    let n = 50;
    let mut log_f_inv = vec![0.0; n];
    let status = unsafe { srb_cocycle_logs(sys, x.as_ptr(), 2, n, ptr::null_mut(), log_f_inv.as_mut_ptr()) };
    assert_eq!(status, SrbStatus::Ok);
    let expected = -((3.0 + 5f64.sqrt()) / 2.0).ln();
    assert!(log_f_inv.iter().all(|l| (l - expected).abs() < 1e-10));

    let mut times = vec![0usize; n];
    let mut count = 0;
    let status =
        unsafe { srb_hyperbolic_times(log_f_inv.as_ptr(), n, 0.5, times.as_mut_ptr(), times.len(), &mut count) };
    assert_eq!(status, SrbStatus::Ok);
    assert_eq!(count, n);
    assert_eq!(times, (1..=n).collect::<Vec<_>>());
    unsafe { srb_system_free(sys) };
}

#[test]
fn errors_carry_codes_and_messages() {
    assert_eq!(
        new_system(r#"{"name": "torus"}"#).unwrap_err(),
        SrbStatus::InvalidConfig
    );
    assert!(last_error().contains("torus"));
    assert_eq!(
        new_system(r#"{"name": "dfa", "delta": 5.0}"#).unwrap_err(),
        SrbStatus::Numerical
    );
    assert!(!last_error().is_empty());

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { srb_system_new(ptr::null(), &mut out) }, SrbStatus::NullPointer);
    assert!(out.is_null());

    let sys = new_system(r#"{"name": "solenoid"}"#).unwrap();
    let mut y = [0.0; 2];
    let status = unsafe { srb_system_forward(sys, [0.0; 2].as_ptr(), 2, y.as_mut_ptr()) };
    assert_eq!(status, SrbStatus::InvalidArgument);
    assert!(last_error().contains("expected 3"));
    unsafe { srb_system_free(sys) };
    unsafe { srb_system_free(ptr::null_mut()) };
}

#[test]
fn small_buffers_report_the_needed_length() {
    let b = [1.0; 10];
    let mut times = [0usize; 3];
    let mut count = 0;
    let status = unsafe { srb_pliss_times(b.as_ptr(), 10, 1.0, 1.0, 0.5, times.as_mut_ptr(), 3, &mut count) };
    assert_eq!(status, SrbStatus::BufferTooSmall);
    assert_eq!(count, 10);
    let status = unsafe { srb_pliss_times(b.as_ptr(), 10, 1.0, 0.5, 0.7, times.as_mut_ptr(), 3, &mut count) };
    assert_eq!(status, SrbStatus::HypothesisViolated);
    let status = unsafe { srb_hyperbolic_times(b.as_ptr(), 10, 1.5, times.as_mut_ptr(), 3, &mut count) };
    assert_eq!(status, SrbStatus::InvalidArgument);
}

#[test]
fn experiments_run_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new(r#"{"model": {"name": "cat"}, "experiment": "pliss_demo"}"#).unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut passed = false;
    assert_eq!(
        unsafe { srb_run_experiment(cfg.as_ptr(), out.as_ptr(), &mut passed) },
        SrbStatus::Ok
    );
    assert!(passed);
    assert!(dir.path().join("summary.json").exists());
    let bad =
        CString::new(r#"{"model": {"name": "cat"}, "experiment": "pliss_demo", "constants": {"sigma": 1.5}}"#).unwrap();
    assert_eq!(
        unsafe { srb_run_experiment(bad.as_ptr(), out.as_ptr(), &mut passed) },
        SrbStatus::InvalidConfig
    );
    assert!(last_error().contains("constants.sigma"));
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_against_the_header() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libsrbkit_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "srbkit.h"
int main(void) {
    SrbSystem *sys = NULL;
    if (srb_system_new("{\"name\": \"cat\"}", &sys) != SRB_STATUS_OK) return 1;
    double x[2] = {0.1, 0.2}, y[2];
    if (srb_system_forward(sys, x, 2, y) != SRB_STATUS_OK) return 2;
    srb_system_free(sys);
    if (srb_system_new("{\"name\": \"nope\"}", &sys) != SRB_STATUS_INVALID_CONFIG) return 3;
    char msg[256];
    if (srb_last_error_message(msg, sizeof msg) == 0) return 4;
    printf("%.3f %.3f\n", y[0], y[1]);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.400 0.300");
}
