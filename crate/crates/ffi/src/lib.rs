//! C ABI around the core sketch. Opaque handle, integer statuses, caller
//! owned buffers. Every entry point checks its pointers and catches
//! panics; nothing unwinds across the boundary.
//!
//! The companion header is generated into `include/skewsketch.h` by the
//! build script.

use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use skewsketch::estimators::Method;
use skewsketch::sketch::{SkewedSketch, StreamUpdate};
use skewsketch::Error;

/// Opaque sketch handle. Create with `sks_sketch_new` or
/// `sks_sketch_deserialize`, release with `sks_sketch_free`.
pub struct SksSketch {
    _private: [u8; 0],
}

/// Call outcome. Zero is success; everything else leaves outputs untouched
/// unless documented otherwise.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SksStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Incompatible = 3,
    CorruptData = 4,
    NumericFailure = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Estimator selector. The general-skewness diagnostic estimator is not
/// exposed here: sketches are built from fully skewed projections and
/// accept only the matching estimators.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SksMethod {
    Gm = 0,
    Hm = 1,
    Mle05 = 2,
    Op = 3,
}

/// Result of `sks_sketch_estimate`. `degenerate` flags an empty sketch,
/// whose estimate is 0 by convention. `asymptotic_variance_factor` is the
/// constant V in Var ~ V/k for the chosen method at this alpha.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SksEstimate {
    pub estimate: f64,
    pub alpha: f64,
    pub asymptotic_variance_factor: f64,
    pub k: u32,
    pub degenerate: bool,
}

fn status_of(e: &Error) -> SksStatus {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Parse { .. } => SksStatus::InvalidArgument,
        Error::Incompatible(_) => SksStatus::Incompatible,
        Error::Corrupt(_) => SksStatus::CorruptData,
        // No file IO happens behind this ABI; Io is grouped with the
        // other internal failures for completeness.
        Error::Bracket(_) | Error::Numeric(_) | Error::Io(_) => SksStatus::NumericFailure,
    }
}

fn guarded(f: impl FnOnce() -> SksStatus) -> SksStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(SksStatus::Panic)
}

fn into_handle(s: SkewedSketch) -> *mut SksSketch {
    Box::into_raw(Box::new(s)).cast()
}

unsafe fn sketch_ref<'a>(p: *const SksSketch) -> &'a SkewedSketch {
    &*p.cast::<SkewedSketch>()
}

unsafe fn sketch_mut<'a>(p: *mut SksSketch) -> &'a mut SkewedSketch {
    &mut *p.cast::<SkewedSketch>()
}

fn core_method(m: SksMethod) -> Method {
    match m {
        SksMethod::Gm => Method::Gm,
        SksMethod::Hm => Method::Hm,
        SksMethod::Mle05 => Method::Mle05,
        SksMethod::Op => Method::Op,
    }
}

/// Create a sketch for the alpha-th moment with k accumulators.
///
/// `compensated` turns on compensated accumulator summation, which keeps
/// deleted mass exact under huge transient inserts at a small cost per
/// update. On success `*out` owns the sketch; on failure `*out` is null.
///
/// # Safety
/// `out` must be a valid pointer. `alpha` in (0, 2] except 1, `k >= 2`.
#[no_mangle]
pub unsafe extern "C" fn sks_sketch_new(
    alpha: f64,
    k: u32,
    seed: u64,
    compensated: bool,
    out: *mut *mut SksSketch,
) -> SksStatus {
    if out.is_null() {
        return SksStatus::NullPointer;
    }
    *out = std::ptr::null_mut();
    guarded(|| match SkewedSketch::new(alpha, k, seed) {
        Ok(s) => {
            let s = if compensated {
                s.with_compensated_summation()
            } else {
                s
            };
            *out = into_handle(s);
            SksStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Release a sketch. Null is a no-op. The pointer must not be used again.
///
/// # Safety
/// `sketch` must be null or a pointer obtained from this library that has
/// not already been freed.
#[no_mangle]
pub unsafe extern "C" fn sks_sketch_free(sketch: *mut SksSketch) {
    if !sketch.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| {
            drop(Box::from_raw(sketch.cast::<SkewedSketch>()));
        }));
    }
}

/// Feed one Turnstile update (index, increment). Indices are 1-based;
/// increments may be negative (deletions) but must be finite.
///
/// # Safety
/// `sketch` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sks_sketch_update(
    sketch: *mut SksSketch,
    index: u64,
    increment: f64,
) -> SksStatus {
    if sketch.is_null() {
        return SksStatus::NullPointer;
    }
    guarded(|| {
        match StreamUpdate::new(index, increment).and_then(|u| sketch_mut(sketch).update(u)) {
            Ok(()) => SksStatus::Ok,
            Err(e) => status_of(&e),
        }
    })
}

/// Fold `src` into `dst`. Requires identical alpha, k, and seed, so both
/// sides used the same projection matrix.
///
/// # Safety
/// Both pointers must be live handles from this library and must not
/// alias.
#[no_mangle]
pub unsafe extern "C" fn sks_sketch_merge(
    dst: *mut SksSketch,
    src: *const SksSketch,
) -> SksStatus {
    if dst.is_null() || src.is_null() {
        return SksStatus::NullPointer;
    }
    guarded(|| match sketch_mut(dst).merge_from(sketch_ref(src)) {
        Ok(()) => SksStatus::Ok,
        Err(e) => status_of(&e),
    })
}

/// Number of updates folded in so far (including merged ones).
///
/// # Safety
/// `sketch` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sks_sketch_update_count(
    sketch: *const SksSketch,
    out: *mut u64,
) -> SksStatus {
    if sketch.is_null() || out.is_null() {
        return SksStatus::NullPointer;
    }
    guarded(|| {
        *out = sketch_ref(sketch).update_count();
        SksStatus::Ok
    })
}

/// Estimate the alpha-th frequency moment from the current accumulators.
///
/// # Safety
/// `sketch` must be a live handle; `out` must be a valid pointer;
/// `method` must be one of the declared enum values.
#[no_mangle]
pub unsafe extern "C" fn sks_sketch_estimate(
    sketch: *const SksSketch,
    method: SksMethod,
    out: *mut SksEstimate,
) -> SksStatus {
    if sketch.is_null() || out.is_null() {
        return SksStatus::NullPointer;
    }
    guarded(|| match sketch_ref(sketch).estimate(core_method(method)) {
        Ok(r) => {
            *out = SksEstimate {
                estimate: r.estimate,
                alpha: r.alpha,
                asymptotic_variance_factor: r.asymptotic_variance_factor,
                k: r.k as u32,
                degenerate: r.degenerate,
            };
            SksStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Exact byte length `sks_sketch_serialize` will write for this sketch.
///
/// # Safety
/// `sketch` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sks_sketch_serialized_size(
    sketch: *const SksSketch,
    out: *mut usize,
) -> SksStatus {
    if sketch.is_null() || out.is_null() {
        return SksStatus::NullPointer;
    }
    guarded(|| {
        *out = sketch_ref(sketch).serialized_len();
        SksStatus::Ok
    })
}

/// Write the sketch into a caller buffer of at least
/// `sks_sketch_serialized_size` bytes. Exactly that many bytes are
/// written; the encoding round-trips bit-exactly through
/// `sks_sketch_deserialize`.
///
/// # Safety
/// `sketch` must be a live handle; `buf` must point to `len` writable
/// bytes.
#[no_mangle]
pub unsafe extern "C" fn sks_sketch_serialize(
    sketch: *const SksSketch,
    buf: *mut u8,
    len: usize,
) -> SksStatus {
    if sketch.is_null() || buf.is_null() {
        return SksStatus::NullPointer;
    }
    guarded(|| {
        let bytes = sketch_ref(sketch).to_bytes();
        if len < bytes.len() {
            return SksStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        SksStatus::Ok
    })
}

/// Reconstruct a sketch from bytes produced by `sks_sketch_serialize`.
/// On success `*out` owns the new sketch; on failure `*out` is null.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn sks_sketch_deserialize(
    bytes: *const u8,
    len: usize,
    out: *mut *mut SksSketch,
) -> SksStatus {
    if bytes.is_null() || out.is_null() {
        return SksStatus::NullPointer;
    }
    *out = std::ptr::null_mut();
    guarded(|| {
        let slice = std::slice::from_raw_parts(bytes, len);
        match SkewedSketch::from_bytes(slice) {
            Ok(s) => {
                *out = into_handle(s);
                SksStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Static, NUL-terminated description of a status code. Never null; do
/// not free.
#[no_mangle]
pub extern "C" fn sks_status_message(status: SksStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        SksStatus::Ok => b"ok\0",
        SksStatus::NullPointer => b"null pointer argument\0",
        SksStatus::InvalidArgument => b"argument outside the supported domain\0",
        SksStatus::Incompatible => b"sketches differ in alpha, k, or seed\0",
        SksStatus::CorruptData => b"bytes do not hold a valid sketch\0",
        SksStatus::NumericFailure => b"internal numeric failure\0",
        SksStatus::BufferTooSmall => b"destination buffer is too small\0",
        SksStatus::Panic => b"internal panic; the handle may only be freed\0",
    };
    msg.as_ptr().cast()
}
