//! C ABI for the certificate and identity runners. Certificates are
//! opaque handles; reports cross the boundary as JSON strings. All
//! functions return a status code and never unwind.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use omodule::monodromy::{gl_order, Certificate};
use omodule::report::{field_for_q, parse_spec, run_certify, run_identities};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OmodStatus {
    /// Success.
    Ok = 0,
    /// Mathematical or operational failure; see omod_last_error.
    Error = 1,
    /// Invalid arguments or expression grammar; see omod_last_error.
    Usage = 2,
    /// A required pointer argument was null.
    NullArg = 3,
    /// Internal panic; see omod_last_error.
    Panic = 4,
}

/// Opaque certificate handle.
pub struct OmodCertificate {
    cert: Certificate,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap());
}

fn status_of(e: &omodule::Error) -> OmodStatus {
    match e {
        omodule::Error::Parse(_) => OmodStatus::Usage,
        _ => OmodStatus::Error,
    }
}

fn guarded(f: impl FnOnce() -> OmodStatus) -> OmodStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&msg);
            OmodStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, OmodStatus> {
    if p.is_null() {
        return Err(OmodStatus::NullArg);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        OmodStatus::Usage
    })
}

unsafe fn read_str_array<'a>(
    items: *const *const c_char,
    len: usize,
) -> Result<Vec<&'a str>, OmodStatus> {
    if items.is_null() && len > 0 {
        return Err(OmodStatus::NullArg);
    }
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        out.push(read_str(*items.add(i))?);
    }
    Ok(out)
}

/// Library version string; static, do not free.
#[no_mangle]
pub extern "C" fn omod_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread; valid until the
/// next failing call. Do not free.
#[no_mangle]
pub extern "C" fn omod_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Order of GL_k over o/(w^m) with residue field of size q, written to
/// `out`.
#[no_mangle]
pub extern "C" fn omod_gl_order(k: u32, m: u32, q: u64, out: *mut u64) -> OmodStatus {
    guarded(|| {
        if out.is_null() {
            return OmodStatus::NullArg;
        }
        if k == 0 || m == 0 {
            set_error("k and m must be at least 1");
            return OmodStatus::Usage;
        }
        match gl_order(k as usize, m as usize, q) {
            Ok(v) => {
                unsafe { *out = v };
                OmodStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Run a surjectivity certification. `specs` is an array of `nspecs`
/// assignment strings such as "u0=t,u1=t^2". On success `*out` owns a
/// certificate handle; release it with omod_certificate_free.
#[no_mangle]
pub extern "C" fn omod_certify_run(
    q: u64,
    n: u32,
    h: u32,
    m: u32,
    specs: *const *const c_char,
    nspecs: usize,
    precision: i64,
    out: *mut *mut OmodCertificate,
) -> OmodStatus {
    guarded(|| {
        if out.is_null() {
            return OmodStatus::NullArg;
        }
        let texts = match unsafe { read_str_array(specs, nspecs) } {
            Ok(v) => v.into_iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            Err(s) => return s,
        };
        if h >= n {
            set_error("h must be below n");
            return OmodStatus::Usage;
        }
        match run_certify(q, n as usize, h as usize, m as usize, &texts, precision) {
            Ok(cert) => {
                let handle = Box::new(OmodCertificate { cert });
                unsafe { *out = Box::into_raw(handle) };
                OmodStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// 1 if the certificate's verdict is "surjective", 0 if inconclusive,
/// -1 on null.
#[no_mangle]
pub extern "C" fn omod_certificate_is_surjective(cert: *const OmodCertificate) -> i32 {
    if cert.is_null() {
        return -1;
    }
    let cert = unsafe { &*cert };
    cert.cert.is_surjective() as i32
}

/// Certificate as a JSON string; release with omod_string_free. Null on
/// null input.
#[no_mangle]
pub extern "C" fn omod_certificate_json(cert: *const OmodCertificate) -> *mut c_char {
    if cert.is_null() {
        return ptr::null_mut();
    }
    let cert = unsafe { &*cert };
    let json = serde_json::to_string(&cert.cert).expect("certificate serializes");
    CString::new(json).unwrap().into_raw()
}

/// Release a certificate handle. Null is ignored.
#[no_mangle]
pub extern "C" fn omod_certificate_free(cert: *mut OmodCertificate) {
    if !cert.is_null() {
        drop(unsafe { Box::from_raw(cert) });
    }
}

/// Run identity checks on one specialization. `checks` selects from
/// "eq31", "eq41", "nonvanishing"; pass length 0 for all applicable. On
/// success `*out_json` owns the JSON report (release with
/// omod_string_free) and the status is Ok when every check passed,
/// Error when some check failed.
#[no_mangle]
pub extern "C" fn omod_identities_run(
    q: u64,
    n: u32,
    h: u32,
    m: u32,
    spec: *const c_char,
    checks: *const *const c_char,
    nchecks: usize,
    precision: i64,
    out_json: *mut *mut c_char,
) -> OmodStatus {
    guarded(|| {
        if out_json.is_null() {
            return OmodStatus::NullArg;
        }
        let spec_text = match unsafe { read_str(spec) } {
            Ok(s) => s,
            Err(s) => return s,
        };
        let selected: Vec<String> = match unsafe { read_str_array(checks, nchecks) } {
            Ok(v) => v.into_iter().map(|s| s.to_string()).collect(),
            Err(s) => return s,
        };
        let run = || -> omodule::Result<omodule::report::IdentityReport> {
            let field = field_for_q(q)?;
            let parsed = parse_spec(&field, n as usize, h as usize, spec_text)?;
            run_identities(
                &field,
                n as usize,
                h as usize,
                m as usize,
                &parsed,
                &selected,
                precision,
            )
        };
        match run() {
            Ok(report) => {
                let json = serde_json::to_string(&report).expect("report serializes");
                unsafe { *out_json = CString::new(json).unwrap().into_raw() };
                if report.all_pass() {
                    OmodStatus::Ok
                } else {
                    set_error("one or more identity checks failed");
                    OmodStatus::Error
                }
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a string returned by this library. Null is ignored.
#[no_mangle]
pub extern "C" fn omod_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
