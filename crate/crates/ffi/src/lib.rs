//! C ABI for `graphcomplex`.
//!
//! Every function returns a [`GcStatus`]; results go through out-pointers.
//! Objects are opaque handles released with their `_free` function. On
//! failure the message is kept per thread and read with
//! [`gc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use graphcomplex::cohomology::{BasisMemo, Complex};
use graphcomplex::differential::delta_vec;
use graphcomplex::geometry::ImmersionSpec;
use graphcomplex::graph::{read_cochain, GraphVector};
use graphcomplex::integrator::{linking_preset, pairing, CycleKind, LinkPreset, PairingProblem};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Computation = 4,
    Panic = 5,
}

/// The complex `D^{k,*}` with its coboundary ranks.
pub struct GcComplex(Complex);

/// A homogeneous rational cochain.
pub struct GcCochain(GraphVector);

/// Monte-Carlo value and standard error.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GcEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `cycle` argument of [`gc_pairing`].
pub const GC_CYCLE_ALPHA: i32 = 0;
pub const GC_CYCLE_LAMBDA: i32 = 1;

/// `preset` argument of [`gc_linking_preset`].
pub const GC_LINK_HOPF: i32 = 0;
pub const GC_LINK_UNLINKED: i32 = 1;
pub const GC_LINK_S1_VS_I1: i32 = 2;
pub const GC_LINK_S2_VS_I2: i32 = 3;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: GcStatus, msg: impl Into<String>) -> GcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> GcStatus) -> GcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == GcStatus::Ok {
                LAST_ERROR.with(|e| e.borrow_mut().clear());
            }
            s
        }
        Err(_) => fail(GcStatus::Panic, "internal panic"),
    }
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds `D^{k,*}` and its coboundary matrices.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_complex_build(k: i64, out: *mut *mut GcComplex) -> GcStatus {
    guard(|| {
        if out.is_null() {
            return fail(GcStatus::NullPointer, "out is null");
        }
        if k < 1 {
            return fail(GcStatus::InvalidArgument, format!("order must be at least 1, got {k}"));
        }
        match Complex::build(k, &mut BasisMemo::default()) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(GcComplex(c)));
                GcStatus::Ok
            }
            Err(e) => fail(GcStatus::Computation, e.to_string()),
        }
    })
}

/// # Safety
/// `c` must come from [`gc_complex_build`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gc_complex_free(c: *mut GcComplex) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Highest degree with a nonempty basis.
///
/// # Safety
/// `c` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_complex_max_degree(c: *const GcComplex, out: *mut i64) -> GcStatus {
    guard(|| {
        if c.is_null() || out.is_null() {
            return fail(GcStatus::NullPointer, "null argument");
        }
        *out = (*c).0.max_degree();
        GcStatus::Ok
    })
}

/// Dimension of `D^{k,l}`.
///
/// # Safety
/// `c` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_complex_dim(c: *const GcComplex, l: i64, out: *mut u64) -> GcStatus {
    guard(|| {
        if c.is_null() || out.is_null() {
            return fail(GcStatus::NullPointer, "null argument");
        }
        *out = (*c).0.dim(l) as u64;
        GcStatus::Ok
    })
}

/// Betti number of `H^{k,l}`.
///
/// # Safety
/// `c` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_complex_betti(c: *const GcComplex, l: i64, out: *mut i64) -> GcStatus {
    guard(|| {
        if c.is_null() || out.is_null() {
            return fail(GcStatus::NullPointer, "null argument");
        }
        *out = (*c).0.betti(l).betti;
        GcStatus::Ok
    })
}

/// Euler characteristic of `D^{k,*}`.
///
/// # Safety
/// `c` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_complex_euler(c: *const GcComplex, out: *mut i64) -> GcStatus {
    guard(|| {
        if c.is_null() || out.is_null() {
            return fail(GcStatus::NullPointer, "null argument");
        }
        *out = (*c).0.euler_characteristic();
        GcStatus::Ok
    })
}

/// Parses a cochain from JSON: `[{"coeff": "p/q", "graph": "G[...]"}, ...]`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_cochain_parse(json: *const c_char, out: *mut *mut GcCochain) -> GcStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(GcStatus::NullPointer, "null argument");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(GcStatus::Parse, "cochain is not UTF-8");
        };
        match read_cochain(text) {
            Ok(v) => {
                *out = Box::into_raw(Box::new(GcCochain(v)));
                GcStatus::Ok
            }
            Err(e) => fail(GcStatus::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `v` must come from [`gc_cochain_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gc_cochain_free(v: *mut GcCochain) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Number of nonzero terms after canonicalization.
///
/// # Safety
/// `v` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_cochain_len(v: *const GcCochain, out: *mut u64) -> GcStatus {
    guard(|| {
        if v.is_null() || out.is_null() {
            return fail(GcStatus::NullPointer, "null argument");
        }
        *out = (*v).0.len() as u64;
        GcStatus::Ok
    })
}

/// Writes 1 to `out` if the cochain is closed, else 0.
///
/// # Safety
/// `v` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_cochain_is_cocycle(v: *const GcCochain, out: *mut i32) -> GcStatus {
    guard(|| {
        if v.is_null() || out.is_null() {
            return fail(GcStatus::NullPointer, "null argument");
        }
        match delta_vec(&(*v).0) {
            Ok(d) => {
                *out = d.is_zero() as i32;
                GcStatus::Ok
            }
            Err(e) => fail(GcStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Dimension of the chord algebra in `order`, with or without the 1T relation.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_chord_dimension(order: u32, one_term: i32, out: *mut u64) -> GcStatus {
    guard(|| {
        if out.is_null() {
            return fail(GcStatus::NullPointer, "out is null");
        }
        if !(1..=6).contains(&order) {
            return fail(GcStatus::InvalidArgument, format!("order must be between 1 and 6, got {order}"));
        }
        *out = graphcomplex::chord::algebra_dimension(order as usize, one_term != 0) as u64;
        GcStatus::Ok
    })
}

/// Monte-Carlo linking number of a preset. `n` is ignored by the circle
/// presets and must be at least 4 for the others.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_linking_preset(preset: i32, n: u32, samples: u64, seed: u64, out: *mut GcEstimate) -> GcStatus {
    guard(|| {
        if out.is_null() {
            return fail(GcStatus::NullPointer, "out is null");
        }
        let p = match preset {
            GC_LINK_HOPF => LinkPreset::Hopf,
            GC_LINK_UNLINKED => LinkPreset::Unlinked,
            GC_LINK_S1_VS_I1 => LinkPreset::S1VsI1,
            GC_LINK_S2_VS_I2 => LinkPreset::S2VsI2,
            _ => return fail(GcStatus::InvalidArgument, format!("unknown preset {preset}")),
        };
        if samples == 0 {
            return fail(GcStatus::InvalidArgument, "samples must be positive");
        }
        let imm = match p {
            LinkPreset::Hopf | LinkPreset::Unlinked => None,
            _ => {
                if n < 4 {
                    return fail(GcStatus::InvalidArgument, format!("n must be at least 4, got {n}"));
                }
                match ImmersionSpec::default().with_n(n as usize).build() {
                    Ok(i) => Some(i),
                    Err(e) => return fail(GcStatus::InvalidArgument, e.to_string()),
                }
            }
        };
        match linking_preset(p, imm.as_ref(), samples, seed) {
            Ok(e) => {
                *out = GcEstimate { value: e.value, std_error: e.stderr };
                GcStatus::Ok
            }
            Err(e) => fail(GcStatus::Computation, e.to_string()),
        }
    })
}

/// Pairs a cochain with the alpha or lambda cycle on the default immersion
/// in odd `n >= 5`.
///
/// # Safety
/// `v` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gc_pairing(v: *const GcCochain, cycle: i32, n: u32, samples: u64, seed: u64, out: *mut GcEstimate) -> GcStatus {
    guard(|| {
        if v.is_null() || out.is_null() {
            return fail(GcStatus::NullPointer, "null argument");
        }
        let kind = match cycle {
            GC_CYCLE_ALPHA => CycleKind::Alpha,
            GC_CYCLE_LAMBDA => CycleKind::Lambda,
            _ => return fail(GcStatus::InvalidArgument, format!("unknown cycle {cycle}")),
        };
        if samples == 0 || n < 5 || n % 2 == 0 {
            return fail(GcStatus::InvalidArgument, "need samples > 0 and odd n >= 5");
        }
        let imm = match ImmersionSpec::default().with_n(n as usize).build() {
            Ok(i) => i,
            Err(e) => return fail(GcStatus::InvalidArgument, e.to_string()),
        };
        let problem = PairingProblem::new((*v).0.clone(), kind, imm, samples, seed);
        match pairing(&problem) {
            Ok(r) => {
                *out = GcEstimate { value: r.estimate.value, std_error: r.estimate.stderr };
                GcStatus::Ok
            }
            Err(e) => fail(GcStatus::Computation, e.to_string()),
        }
    })
}
