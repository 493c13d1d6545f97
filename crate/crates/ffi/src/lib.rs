//! C ABI for `zefchan`.
//!
//! Channels and codebooks are opaque heap handles created from JSON and
//! released with their `_free` function. Every fallible call returns a
//! [`ZefStatus`]; on failure [`zef_last_error_message`] describes the error.
//! Strings returned through `out` pointers must be released with
//! [`zef_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use zefchan::capacity::{blahut_arimoto, DEFAULT_MAX_ITER};
use zefchan::codebook::{Codebook, CodebookFile, DecodeOutcome, DEFAULT_ENUMERATION_BUDGET};
use zefchan::dmc::{DisproverPolicy, Dmc, DEFAULT_SUPPORT_EPS, DEFAULT_TOL_DECOMP};
use zefchan::files::{to_stable_json, ChannelFile};
use zefchan::protocol::{GammaSchedule, NoiselessSessionConfig, NoisySessionConfig};
use zefchan::sim::{monte_carlo, SessionConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZefStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Channel = 4,
    Code = 5,
    Capacity = 6,
    Protocol = 7,
    Simulation = 8,
    InvalidArgument = 9,
    Panic = 10,
}

/// Disprover policy: first triple in `(y_c, x_c, x_e)` order.
pub const ZEF_POLICY_FIRST: u32 = 0;
/// Disprover policy: largest `W(y_c|x_c)`.
pub const ZEF_POLICY_MAX_PROB: u32 = 1;

pub struct ZefChannel(Dmc);

pub struct ZefCodebook(Codebook);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

type FfiResult<T> = Result<T, (ZefStatus, String)>;

fn fail<T>(status: ZefStatus, err: impl std::fmt::Display) -> FfiResult<T> {
    Err((status, err.to_string()))
}

/// Run `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> ZefStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ZefStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ZefStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(ZefStatus::NullPointer, "null string argument");
    }
    // SAFETY: caller passes a NUL-terminated string that outlives the call.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .or_else(|e| fail(ZefStatus::InvalidUtf8, e))
}

unsafe fn ref_arg<'a, T>(p: *const T) -> FfiResult<&'a T> {
    // SAFETY: caller passes a live handle or null.
    unsafe { p.as_ref() }.map_or_else(|| fail(ZefStatus::NullPointer, "null handle"), Ok)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return fail(ZefStatus::NullPointer, "null output pointer");
    }
    // SAFETY: non-null and, per the API contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).or_else(|e| fail(ZefStatus::InvalidArgument, e))?;
    unsafe { write_out(out, c.into_raw()) }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn zef_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn zef_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parse a channel file (`{"name","inputs","outputs","rows"}`).
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zef_channel_from_json(json: *const c_char, out: *mut *mut ZefChannel) -> ZefStatus {
    guard(|| {
        let text = unsafe { str_arg(json)? };
        let file: ChannelFile = serde_json::from_str(text).or_else(|e| fail(ZefStatus::Parse, e))?;
        let ch = file.to_dmc().or_else(|e| fail(ZefStatus::Channel, e))?;
        unsafe { write_out(out, Box::into_raw(Box::new(ZefChannel(ch)))) }
    })
}

/// # Safety
/// `ch` is null or a handle from [`zef_channel_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zef_channel_free(ch: *mut ZefChannel) {
    if !ch.is_null() {
        drop(unsafe { Box::from_raw(ch) });
    }
}

/// # Safety
/// `ch` is a live channel handle; `inputs` and `outputs` are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zef_channel_dims(ch: *const ZefChannel, inputs: *mut usize, outputs: *mut usize) -> ZefStatus {
    guard(|| {
        let ch = unsafe { ref_arg(ch)? };
        unsafe {
            write_out(inputs, ch.0.input_size())?;
            write_out(outputs, ch.0.output_size())
        }
    })
}

/// Capacity in bits, to within `tol`.
///
/// # Safety
/// `ch` is a live channel handle; `bits` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zef_channel_capacity(ch: *const ZefChannel, tol: f64, bits: *mut f64) -> ZefStatus {
    guard(|| {
        let ch = unsafe { ref_arg(ch)? };
        let r = blahut_arimoto(&ch.0, tol, DEFAULT_MAX_ITER).or_else(|e| fail(ZefStatus::Capacity, e))?;
        unsafe { write_out(bits, r.capacity_bits) }
    })
}

/// Number of disprover triples of the channel.
///
/// # Safety
/// `ch` is a live channel handle; `count` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zef_channel_disprover_count(ch: *const ZefChannel, count: *mut usize) -> ZefStatus {
    guard(|| {
        let ch = unsafe { ref_arg(ch)? };
        unsafe { write_out(count, ch.0.find_disprovers().len()) }
    })
}

/// Channel report as JSON under the capacity-achieving input.
///
/// # Safety
/// `ch` is a live channel handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zef_channel_report_json(ch: *const ZefChannel, out: *mut *mut c_char) -> ZefStatus {
    guard(|| {
        let ch = unsafe { ref_arg(ch)? };
        let cap = blahut_arimoto(&ch.0, zefchan::capacity::DEFAULT_TOL, DEFAULT_MAX_ITER)
            .or_else(|e| fail(ZefStatus::Capacity, e))?;
        let report = ch
            .0
            .report(&cap.q_star, DEFAULT_SUPPORT_EPS, DEFAULT_TOL_DECOMP)
            .or_else(|e| fail(ZefStatus::Channel, e))?;
        unsafe { write_string(out, to_stable_json(&report)) }
    })
}

/// Parse a codebook file (`{"n","messages","codewords"}`).
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zef_codebook_from_json(json: *const c_char, out: *mut *mut ZefCodebook) -> ZefStatus {
    guard(|| {
        let text = unsafe { str_arg(json)? };
        let file: CodebookFile = serde_json::from_str(text).or_else(|e| fail(ZefStatus::Parse, e))?;
        let code = Codebook::try_from(file).or_else(|e| fail(ZefStatus::Code, e))?;
        unsafe { write_out(out, Box::into_raw(Box::new(ZefCodebook(code)))) }
    })
}

/// # Safety
/// `code` is null or a handle from [`zef_codebook_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zef_codebook_free(code: *mut ZefCodebook) {
    if !code.is_null() {
        drop(unsafe { Box::from_raw(code) });
    }
}

/// Exact erasure probability of message `m`.
///
/// # Safety
/// `code` and `ch` are live handles; `lambda` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zef_codebook_erasure_prob(
    code: *const ZefCodebook,
    ch: *const ZefChannel,
    m: usize,
    lambda: *mut f64,
) -> ZefStatus {
    guard(|| {
        let (code, ch) = unsafe { (ref_arg(code)?, ref_arg(ch)?) };
        let l = code
            .0
            .erasure_prob_exact(&ch.0, m, DEFAULT_ENUMERATION_BUDGET)
            .or_else(|e| fail(ZefStatus::Code, e))?;
        unsafe { write_out(lambda, l) }
    })
}

/// Zero-undetected-error decode of `len` outputs. Writes the message index,
/// or -1 for an erasure.
///
/// # Safety
/// `y` points to `len` readable values; `message` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zef_codebook_decode(
    code: *const ZefCodebook,
    ch: *const ZefChannel,
    y: *const usize,
    len: usize,
    message: *mut i64,
) -> ZefStatus {
    guard(|| {
        let (code, ch) = unsafe { (ref_arg(code)?, ref_arg(ch)?) };
        if y.is_null() && len > 0 {
            return fail(ZefStatus::NullPointer, "null output sequence");
        }
        let y = if len == 0 { &[][..] } else { unsafe { std::slice::from_raw_parts(y, len) } };
        let d = code.0.zue_decode(&ch.0, y).or_else(|e| fail(ZefStatus::Code, e))?;
        let v = match d {
            DecodeOutcome::Message(m) => m as i64,
            DecodeOutcome::Erasure => -1,
        };
        unsafe { write_out(message, v) }
    })
}

/// Monte Carlo run; writes the statistics as JSON. A null `backward` selects
/// the noiseless-feedback scheme. `gamma = 0` means the automatic length.
///
/// # Safety
/// `forward` and `code` are live handles, `backward` is null or live; `out`
/// is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zef_simulate_json(
    forward: *const ZefChannel,
    backward: *const ZefChannel,
    code: *const ZefCodebook,
    gamma: usize,
    policy: u32,
    messages: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> ZefStatus {
    guard(|| {
        let (forward, code) = unsafe { (ref_arg(forward)?, ref_arg(code)?) };
        let gamma = if gamma == 0 { GammaSchedule::Auto } else { GammaSchedule::Fixed(gamma) };
        let policy = match policy {
            ZEF_POLICY_FIRST => DisproverPolicy::First,
            ZEF_POLICY_MAX_PROB => DisproverPolicy::MaxProb,
            other => return fail(ZefStatus::InvalidArgument, format!("unknown disprover policy {other}")),
        };
        // SAFETY: null or a live handle.
        let cfg = match unsafe { backward.as_ref() } {
            None => NoiselessSessionConfig::new(forward.0.clone(), code.0.clone(), gamma, policy)
                .map(SessionConfig::Noiseless),
            Some(b) => NoisySessionConfig::new(forward.0.clone(), b.0.clone(), code.0.clone(), gamma, policy)
                .map(SessionConfig::Noisy),
        }
        .or_else(|e| fail(ZefStatus::Protocol, e))?;
        let stats = monte_carlo(&cfg, messages, seed).or_else(|e| fail(ZefStatus::Simulation, e))?;
        unsafe { write_string(out, to_stable_json(&stats)) }
    })
}
