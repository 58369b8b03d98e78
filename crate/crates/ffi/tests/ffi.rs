use std::ffi::{CStr, CString};
use std::ptr;

use mcf_ffi::*;

fn last_error() -> String {
    let p = mcf_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn identity(d: usize) -> Vec<f64> {
    (0..d * d)
        .map(|k| if k / d == k % d { 1.0 } else { 0.0 })
        .collect()
}

#[test]
fn uniform_channel_lifecycle() {
    unsafe {
        let p = identity(2);
        let mut h = ptr::null_mut();
        assert_eq!(
            mcf_channel_uniform(2, p.as_ptr(), -0.5, &mut h),
            McfStatus::Ok
        );
        assert!(mcf_last_error_message().is_null());
        assert_eq!(mcf_channel_dim(h), 2);

        let (mut tp, mut cp, mut min) = (false, false, 0.0);
        assert_eq!(
            mcf_channel_verify(h, &mut tp, &mut cp, &mut min),
            McfStatus::Ok
        );
        assert!(tp && cp);
        assert!((min - 0.25).abs() < 1e-15);

        let rho = [0.5, 0.5, 0.5, 0.5];
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        let st = mcf_channel_apply(
            h,
            rho.as_ptr(),
            ptr::null(),
            false,
            re.as_mut_ptr(),
            im.as_mut_ptr(),
        );
        assert_eq!(st, McfStatus::Ok);
        assert_eq!(re, [0.5, 0.25, 0.25, 0.5]);

        let (mut jre, mut jim) = ([0.0; 16], [0.0; 16]);
        assert_eq!(
            mcf_channel_choi(h, jre.as_mut_ptr(), jim.as_mut_ptr()),
            McfStatus::Ok
        );
        assert_eq!(jre[3], 0.25);
        assert_eq!(jre[0], 0.5);

        mcf_channel_free(h);
        mcf_channel_free(ptr::null_mut());
    }
}

#[test]
fn complex_alpha_and_json() {
    unsafe {
        let p = identity(2);
        let are = [0.0, -0.5, -0.5, 0.0];
        let aim = [0.0, 0.2, -0.2, 0.0];
        let mut h = ptr::null_mut();
        assert_eq!(
            mcf_channel_new(2, p.as_ptr(), are.as_ptr(), aim.as_ptr(), &mut h),
            McfStatus::Ok
        );
        mcf_channel_free(h);

        // non-Hermitian α
        let bad_im = [0.0, 0.2, 0.2, 0.0];
        let st = mcf_channel_new(2, p.as_ptr(), are.as_ptr(), bad_im.as_ptr(), &mut h);
        assert_eq!(st, McfStatus::Validation);
        assert!(last_error().contains("conj(alpha"));

        let json =
            CString::new(r#"{"d": 2, "P": [[1, 0], [0, 1]], "alpha": {"uniform": 0}}"#).unwrap();
        assert_eq!(mcf_channel_from_json(json.as_ptr(), &mut h), McfStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(
            mcf_channel_certify_json(h, false, 0, 0, 7, &mut report),
            McfStatus::Ok
        );
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        mcf_string_free(report);
        mcf_channel_free(h);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["verdicts"][0]["flag"], "entangled");
        assert_eq!(v["provenance"]["seed"], 7);

        let garbage = CString::new("{").unwrap();
        assert_eq!(
            mcf_channel_from_json(garbage.as_ptr(), &mut h),
            McfStatus::InvalidArgument
        );
    }
}

#[test]
fn ds_design_and_errors() {
    unsafe {
        let m = [0.3, 0.2, 0.2, 0.3];
        let mut h = ptr::null_mut();
        assert_eq!(mcf_channel_from_ds(2, m.as_ptr(), &mut h), McfStatus::Ok);
        let (mut tp, mut cp, mut min) = (false, false, 0.0);
        mcf_channel_verify(h, &mut tp, &mut cp, &mut min);
        assert!(tp && cp);
        mcf_channel_free(h);

        let bad = [0.3, 0.1, 0.1, 0.3];
        assert_eq!(
            mcf_channel_from_ds(2, bad.as_ptr(), &mut h),
            McfStatus::Validation
        );
        assert!(last_error().contains("marginal condition"));

        assert_eq!(
            mcf_channel_uniform(2, ptr::null(), 0.0, &mut h),
            McfStatus::NullPointer
        );
        assert_eq!(
            mcf_channel_uniform(usize::MAX, m.as_ptr(), 0.0, &mut h),
            McfStatus::InvalidArgument
        );
        let (mut tp, mut cp, mut min) = (false, false, 0.0);
        assert_eq!(
            mcf_channel_verify(ptr::null(), &mut tp, &mut cp, &mut min),
            McfStatus::NullPointer
        );
        assert_eq!(mcf_channel_dim(ptr::null()), 0);
    }
}

#[test]
fn leaky_channel_needs_force() {
    unsafe {
        let p = [0.5, 0.0, 0.0, 1.0];
        let mut h = ptr::null_mut();
        assert_eq!(
            mcf_channel_uniform(2, p.as_ptr(), 0.0, &mut h),
            McfStatus::Ok
        );
        let rho = [1.0, 0.0, 0.0, 0.0];
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        let st = mcf_channel_apply(
            h,
            rho.as_ptr(),
            ptr::null(),
            false,
            re.as_mut_ptr(),
            im.as_mut_ptr(),
        );
        assert_eq!(st, McfStatus::Validation);
        let st = mcf_channel_apply(
            h,
            rho.as_ptr(),
            ptr::null(),
            true,
            re.as_mut_ptr(),
            im.as_mut_ptr(),
        );
        assert_eq!(st, McfStatus::Ok);
        assert_eq!(re[0], 0.5);
        mcf_channel_free(h);
    }
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mcf_ffi.h")).unwrap();
    for name in [
        "mcf_last_error_message",
        "mcf_channel_new",
        "mcf_channel_uniform",
        "mcf_channel_from_json",
        "mcf_channel_from_ds",
        "mcf_channel_free",
        "mcf_channel_dim",
        "mcf_channel_verify",
        "mcf_channel_apply",
        "mcf_channel_choi",
        "mcf_channel_certify_json",
        "mcf_string_free",
        "typedef struct McfChannelHandle McfChannelHandle",
        "MCF_STATUS_VALIDATION = 3",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
