//! Exercises the C entry points from Rust, including ownership and error
//! reporting across the boundary.

use std::ffi::{CStr, CString};
use std::ptr;

use omodule_ffi::*;

fn cstrings(items: &[&str]) -> (Vec<CString>, Vec<*const std::ffi::c_char>) {
    let owned: Vec<CString> = items.iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs = owned.iter().map(|s| s.as_ptr()).collect();
    (owned, ptrs)
}

#[test]
fn version_and_gl_order() {
    let v = unsafe { CStr::from_ptr(omod_version()) };
    assert!(!v.to_str().unwrap().is_empty());
    let mut out = 0u64;
    assert_eq!(omod_gl_order(2, 1, 2, &mut out), OmodStatus::Ok);
    assert_eq!(out, 6);
    assert_eq!(omod_gl_order(2, 2, 2, &mut out), OmodStatus::Ok);
    assert_eq!(out, 96);
    assert_eq!(omod_gl_order(0, 1, 2, &mut out), OmodStatus::Usage);
    assert_eq!(omod_gl_order(2, 1, 2, ptr::null_mut()), OmodStatus::NullArg);
}

#[test]
fn certify_round_trip() {
    let (_own, ptrs) = cstrings(&["u0=t,u1=t", "u0=t^2,u1=t"]);
    let mut handle: *mut OmodCertificate = ptr::null_mut();
    let status = omod_certify_run(2, 2, 0, 1, ptrs.as_ptr(), ptrs.len(), 64, &mut handle);
    assert_eq!(status, OmodStatus::Ok);
    assert!(!handle.is_null());
    assert_eq!(omod_certificate_is_surjective(handle), 1);
    let json_ptr = omod_certificate_json(handle);
    assert!(!json_ptr.is_null());
    let json = unsafe { CStr::from_ptr(json_ptr) }.to_str().unwrap();
    let value: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(value["group_order"], 6);
    assert_eq!(value["lcm"], 6);
    assert_eq!(value["verdict"], "surjective");
    omod_string_free(json_ptr);
    omod_certificate_free(handle);
}

#[test]
fn certify_inconclusive_and_errors() {
    let (_own, ptrs) = cstrings(&["u1=2*t^2"]);
    let mut handle: *mut OmodCertificate = ptr::null_mut();
    let status = omod_certify_run(3, 2, 1, 1, ptrs.as_ptr(), ptrs.len(), 64, &mut handle);
    assert_eq!(status, OmodStatus::Ok);
    assert_eq!(omod_certificate_is_surjective(handle), 0);
    omod_certificate_free(handle);

    // grammar failure surfaces as Usage with a message
    let (_own, bad) = cstrings(&["u1=oops"]);
    let mut handle: *mut OmodCertificate = ptr::null_mut();
    let status = omod_certify_run(3, 2, 1, 1, bad.as_ptr(), bad.len(), 64, &mut handle);
    assert_eq!(status, OmodStatus::Usage);
    assert!(handle.is_null());
    let msg = unsafe { CStr::from_ptr(omod_last_error()) }.to_str().unwrap();
    assert!(!msg.is_empty());

    assert_eq!(omod_certificate_is_surjective(ptr::null()), -1);
    assert!(omod_certificate_json(ptr::null()).is_null());
    omod_certificate_free(ptr::null_mut());
    omod_string_free(ptr::null_mut());
}

#[test]
fn identities_report() {
    let spec = CString::new("u1=t").unwrap();
    let (_own, checks) = cstrings(&["eq41", "nonvanishing"]);
    let mut json_ptr: *mut std::ffi::c_char = ptr::null_mut();
    let status = omod_identities_run(
        3,
        2,
        1,
        1,
        spec.as_ptr(),
        checks.as_ptr(),
        checks.len(),
        64,
        &mut json_ptr,
    );
    assert_eq!(status, OmodStatus::Ok);
    let json = unsafe { CStr::from_ptr(json_ptr) }.to_str().unwrap();
    let value: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(value["verdict"], "pass");
    assert_eq!(value["checks"].as_array().unwrap().len(), 2);
    omod_string_free(json_ptr);
}

#[test]
fn generated_header_exists() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("omodule.h");
    let text = std::fs::read_to_string(header).unwrap();
    assert!(text.contains("OMODULE_H"));
    assert!(text.contains("omod_certify_run"));
    assert!(text.contains("OmodCertificate"));
    assert!(text.contains("omod_string_free"));
}
