//! C ABI over `mcf-core`.
//!
//! Channels live behind the opaque [`McfChannelHandle`]; every call returns an
//! [`McfStatus`] and writes results through out-pointers. On failure the
//! message is available from [`mcf_last_error_message`] on the same thread.
//! Matrices cross the boundary as row-major `double` arrays, complex ones as
//! separate real and imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mcf_core::cones::SearchBudget;
use mcf_core::entstates::channel_from_ds;
use mcf_core::matcore::{ComplexMatrix, RealMatrix, Tolerance, C64};
use mcf_core::mcfchannel::{ApplyOptions, ChannelConfig, McfChannel};
use mcf_core::pipeline::{run_protocol, ProtocolOptions};
use mcf_core::qstate::DensityMatrix;
use mcf_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McfStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed input: bad dimension, non-finite entry, bad JSON, bad UTF-8.
    InvalidArgument = 2,
    /// Input is well formed but violates a physical or mathematical condition.
    Validation = 3,
    Io = 4,
    Panic = 5,
}

/// Opaque fibre channel.
pub struct McfChannelHandle {
    inner: McfChannel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> McfStatus {
    match e {
        Error::Io(_) => McfStatus::Io,
        Error::Json(_)
        | Error::EmptyMatrix
        | Error::NonFinite
        | Error::ShapeMismatch { .. }
        | Error::NotSquare { .. }
        | Error::DimensionMismatch { .. }
        | Error::DimensionOverflow { .. }
        | Error::InvalidTolerance(_)
        | Error::Config(_) => McfStatus::InvalidArgument,
        _ => McfStatus::Validation,
    }
}

struct Fail(McfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(McfStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> McfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            McfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            McfStatus::Panic
        }
    }
}

fn square(d: usize) -> Result<usize, Fail> {
    d.checked_mul(d).ok_or_else(|| {
        Fail(
            McfStatus::InvalidArgument,
            format!("dimension {d} overflows"),
        )
    })
}

unsafe fn read<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn handle<'a>(h: *const McfChannelHandle) -> Result<&'a McfChannel, Fail> {
    h.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| null("channel handle"))
}

unsafe fn complex_in(
    re: *const f64,
    im: *const f64,
    n: usize,
    what: &str,
) -> Result<ComplexMatrix, Fail> {
    let len = square(n)?;
    let re = read(re, len, what)?;
    let data: Vec<C64> = if im.is_null() {
        re.iter().map(|&x| C64::new(x, 0.0)).collect()
    } else {
        let im = slice::from_raw_parts(im, len);
        re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect()
    };
    Ok(ComplexMatrix::new(n, n, data)?)
}

unsafe fn complex_out(m: &ComplexMatrix, re: *mut f64, im: *mut f64) -> Result<(), Fail> {
    if re.is_null() || im.is_null() {
        return Err(null("output buffer"));
    }
    for (k, z) in m.data().iter().enumerate() {
        re.add(k).write(z.re);
        im.add(k).write(z.im);
    }
    Ok(())
}

unsafe fn boxed(out: *mut *mut McfChannelHandle, ch: McfChannel) -> Result<(), Fail> {
    write_out(
        out,
        Box::into_raw(Box::new(McfChannelHandle { inner: ch })),
        "out",
    )
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mcf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fibre with crosstalk `p` (`d*d`) and dephasing `alpha` (`d*d`, real and
/// imaginary parts; `alpha_im` may be null). Default tolerances.
///
/// # Safety
/// Non-null pointers must reference arrays of `d*d` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_new(
    d: usize,
    p: *const f64,
    alpha_re: *const f64,
    alpha_im: *const f64,
    out: *mut *mut McfChannelHandle,
) -> McfStatus {
    guard(|| {
        let p = RealMatrix::new(d, d, read(p, square(d)?, "p")?.to_vec())?;
        let alpha = complex_in(alpha_re, alpha_im, d, "alpha_re")?;
        boxed(out, McfChannel::new(p, alpha, Tolerance::default())?)
    })
}

/// Fibre with a single real dephasing coefficient on every pair of cores.
///
/// # Safety
/// `p` must reference `d*d` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_uniform(
    d: usize,
    p: *const f64,
    alpha: f64,
    out: *mut *mut McfChannelHandle,
) -> McfStatus {
    guard(|| {
        let p = RealMatrix::new(d, d, read(p, square(d)?, "p")?.to_vec())?;
        boxed(out, McfChannel::uniform(p, alpha, Tolerance::default())?)
    })
}

/// Fibre from a JSON channel config `{"d", "P", "alpha"}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_from_json(
    json: *const c_char,
    out: *mut *mut McfChannelHandle,
) -> McfStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(McfStatus::InvalidArgument, format!("invalid UTF-8: {e}")))?;
        let cfg: ChannelConfig = serde_json::from_str(text).map_err(Error::from)?;
        boxed(out, McfChannel::from_config(&cfg, Tolerance::default())?)
    })
}

/// Fibre whose Choi operator is the partial transpose of the DS state with
/// symmetric matrix `m` (`d*d`).
///
/// # Safety
/// `m` must reference `d*d` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_from_ds(
    d: usize,
    m: *const f64,
    out: *mut *mut McfChannelHandle,
) -> McfStatus {
    guard(|| {
        let m = RealMatrix::new(d, d, read(m, square(d)?, "m")?.to_vec())?;
        boxed(out, channel_from_ds(&m, Tolerance::default())?)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_free(h: *mut McfChannelHandle) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of cores, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_dim(h: *const McfChannelHandle) -> usize {
    h.as_ref().map_or(0, |h| h.inner.d())
}

/// Trace preservation, complete positivity and the smallest eigenvalue of
/// the Choi block.
///
/// # Safety
/// `h` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_verify(
    h: *const McfChannelHandle,
    tp_ok: *mut bool,
    cp_ok: *mut bool,
    choi_min_eig: *mut f64,
) -> McfStatus {
    guard(|| {
        let r = handle(h)?.verify_cptp(Tolerance::default());
        write_out(tp_ok, r.tp_ok, "tp_ok")?;
        write_out(cp_ok, r.cp_ok, "cp_ok")?;
        write_out(choi_min_eig, r.choi_min_eig, "choi_min_eig")
    })
}

/// Propagates the density matrix `rho` (`d*d`; `rho_im` may be null).
/// Non-trace-preserving channels are refused unless `force` is set.
///
/// # Safety
/// Input arrays hold `d*d` doubles; output arrays must have room for `d*d`.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_apply(
    h: *const McfChannelHandle,
    rho_re: *const f64,
    rho_im: *const f64,
    force: bool,
    out_re: *mut f64,
    out_im: *mut f64,
) -> McfStatus {
    guard(|| {
        let ch = handle(h)?;
        let tol = Tolerance::default();
        let rho = DensityMatrix::new(complex_in(rho_re, rho_im, ch.d(), "rho_re")?, None, tol)?;
        let prop = ch.apply(&rho, ApplyOptions { force, tol })?;
        complex_out(&prop.state, out_re, out_im)
    })
}

/// Choi operator, `d²×d²` row-major.
///
/// # Safety
/// Output arrays must have room for `d⁴` doubles.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_choi(
    h: *const McfChannelHandle,
    out_re: *mut f64,
    out_im: *mut f64,
) -> McfStatus {
    guard(|| {
        let choi = handle(h)?.choi();
        complex_out(choi.mat(), out_re, out_im)
    })
}

/// Runs the certification protocol and returns the report as JSON. Zero
/// `restarts` or `max_iters` select the defaults. Free the string with
/// [`mcf_string_free`].
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_channel_certify_json(
    h: *const McfChannelHandle,
    force: bool,
    restarts: usize,
    max_iters: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> McfStatus {
    guard(|| {
        let ch = handle(h)?;
        let defaults = SearchBudget::default();
        let budget = SearchBudget {
            restarts: if restarts == 0 {
                defaults.restarts
            } else {
                restarts
            },
            max_iters: if max_iters == 0 {
                defaults.max_iters
            } else {
                max_iters
            },
            residual_target: defaults.residual_target,
            seed,
        };
        let opts = ProtocolOptions {
            force,
            tol: Tolerance::default(),
            budget,
        };
        let json = run_protocol(ch, &opts)?.to_json()?;
        let c = CString::new(json).map_err(|e| Fail(McfStatus::Panic, e.to_string()))?;
        write_out(out, c.into_raw(), "out")
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
