//! C ABI over srslab.
//!
//! Every function returns an [`SrsStatus`]. Results come back through out
//! pointers. Handles are opaque and owned by the caller, who releases them
//! with the matching `*_free`. On failure the message of the last error on
//! the calling thread is available from [`srs_last_error`].
//!
//! Strings are NUL-terminated UTF-8. Functions that produce text write into a
//! caller buffer and always report the needed size (including the NUL) in
//! `*needed`; a buffer that is too small yields `SRS_STATUS_BUFFER_TOO_SMALL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use srslab::bass_serre::BassSerreTree;
use srslab::experiments::{self, ExperimentConfig, ExperimentKind};
use srslab::groups::{BaumslagSolitar, BsElement, Group, Thompson, ThompsonElement};
use srslab::records::{self, TailDistribution};
use srslab::Error;

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BufferTooSmall = 3,
    Parse = 4,
    InvalidElement = 5,
    Precondition = 6,
    Config = 7,
    MissingArtifact = 8,
    Io = 9,
    Other = 10,
    Panic = 11,
}

/// An element of Thompson's group F.
pub struct SrsThompson(ThompsonElement);

/// A Baumslag–Solitar group BS(m, n) with its Bass–Serre tree.
pub struct SrsBs(BassSerreTree);

/// An experiment configuration.
pub struct SrsConfig(ExperimentConfig);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> SrsStatus {
    match e {
        Error::Parse(_) | Error::Json(_) => SrsStatus::Parse,
        Error::InvalidElement(_) | Error::GroupMismatch(_) => SrsStatus::InvalidElement,
        Error::Precondition(_) | Error::EmptyInput(_) | Error::IndexOutOfRange { .. } => SrsStatus::Precondition,
        Error::Config(_) | Error::InvalidDistribution(_) => SrsStatus::Config,
        Error::MissingArtifact(_) => SrsStatus::MissingArtifact,
        Error::Io(_) => SrsStatus::Io,
        _ => SrsStatus::Other,
    }
}

struct Fail(SrsStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_error(e.to_string());
        Fail(status_of(&e))
    }
}

fn fail(status: SrsStatus, msg: &str) -> Fail {
    set_error(msg);
    Fail(status)
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SrsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SrsStatus::Ok
        }
        Ok(Err(Fail(s))) => s,
        Err(_) => {
            set_error("panic inside srslab");
            SrsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(SrsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SrsStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(SrsStatus::NullPointer, "null handle"))
}

unsafe fn handle_mut<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(SrsStatus::NullPointer, "null handle"))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(fail(SrsStatus::NullPointer, "null out pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(fail(SrsStatus::NullPointer, "null out pointer"));
    }
    out.write(Box::into_raw(Box::new(v)));
    Ok(())
}

unsafe fn put_str(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Fail> {
    let bytes = s.as_bytes();
    if !needed.is_null() {
        needed.write(bytes.len() + 1);
    }
    if buf.is_null() || len < bytes.len() + 1 {
        return Err(fail(SrsStatus::BufferTooSmall, "output buffer too small"));
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
    buf.add(bytes.len()).write(0);
    Ok(())
}

/// The message of the last failed call on this thread ("" after a success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn srs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// The library version, a static string.
#[no_mangle]
pub extern "C" fn srs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---- Thompson's group F ----

/// Parses an element of F from its text form.
///
/// # Safety
/// `text` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_thompson_parse(text: *const c_char, out: *mut *mut SrsThompson) -> SrsStatus {
    guard(|| {
        let x = Thompson.parse(str_arg(text)?)?;
        put_box(out, SrsThompson(x))
    })
}

/// The standard generators: index 0 is x0 (translation by 1), 1 is x1.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_thompson_generator(index: u32, out: *mut *mut SrsThompson) -> SrsStatus {
    guard(|| {
        let x = match index {
            0 => ThompsonElement::translation(1),
            1 => ThompsonElement::x1(),
            _ => return Err(fail(SrsStatus::Precondition, "generator index must be 0 or 1")),
        };
        put_box(out, SrsThompson(x))
    })
}

/// `*out = a · b`.
///
/// # Safety
/// `a`, `b` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_thompson_mul(
    a: *const SrsThompson,
    b: *const SrsThompson,
    out: *mut *mut SrsThompson,
) -> SrsStatus {
    guard(|| {
        let x = Thompson.mul(&handle(a)?.0, &handle(b)?.0);
        put_box(out, SrsThompson(x))
    })
}

/// `*out = a⁻¹`.
///
/// # Safety
/// `a` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_thompson_inverse(a: *const SrsThompson, out: *mut *mut SrsThompson) -> SrsStatus {
    guard(|| {
        let x = Thompson.inv(&handle(a)?.0);
        put_box(out, SrsThompson(x))
    })
}

/// `*equal = (a == b)`.
///
/// # Safety
/// `a`, `b` must be live handles and `equal` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_thompson_equal(a: *const SrsThompson, b: *const SrsThompson, equal: *mut bool) -> SrsStatus {
    guard(|| put(equal, handle(a)?.0 == handle(b)?.0))
}

/// Writes the text form of `a`.
///
/// # Safety
/// `a` must be a live handle; `buf` must hold `len` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn srs_thompson_format(
    a: *const SrsThompson,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> SrsStatus {
    guard(|| put_str(&Thompson.format(&handle(a)?.0), buf, len, needed))
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `a` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srs_thompson_free(a: *mut SrsThompson) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

// ---- Baumslag–Solitar groups ----

/// BS(m, n) = ⟨a, t | t a^m t⁻¹ = a^n⟩ with m, n nonzero.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_bs_new(m: i64, n: i64, out: *mut *mut SrsBs) -> SrsStatus {
    guard(|| put_box(out, SrsBs(BassSerreTree::new(BaumslagSolitar::new(m, n)?))))
}

unsafe fn bs_word(g: &SrsBs, word: *const c_char) -> Result<BsElement, Fail> {
    Ok(g.0.group().parse(str_arg(word)?)?)
}

/// Writes the Britton normal form of a word over {a, A, t, T}.
///
/// # Safety
/// `g` must be a live handle, `word` a C string; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn srs_bs_normal_form(
    g: *const SrsBs,
    word: *const c_char,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> SrsStatus {
    guard(|| {
        let g = handle(g)?;
        let x = bs_word(g, word)?;
        put_str(&g.0.group().format(&x), buf, len, needed)
    })
}

/// `*equal` is whether two words give the same group element.
///
/// # Safety
/// `g` must be a live handle, the words C strings and `equal` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_bs_equal(
    g: *const SrsBs,
    u: *const c_char,
    v: *const c_char,
    equal: *mut bool,
) -> SrsStatus {
    guard(|| {
        let g = handle(g)?;
        put(equal, bs_word(g, u)? == bs_word(g, v)?)
    })
}

/// Height (signed t-exponent sum) of the vertex w⟨a⟩ of the Bass–Serre tree.
///
/// # Safety
/// `g` must be a live handle, `word` a C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_bs_height(g: *const SrsBs, word: *const c_char, out: *mut i64) -> SrsStatus {
    guard(|| {
        let g = handle(g)?;
        let v = g.0.vertex_of(&bs_word(g, word)?);
        put(out, g.0.height(&v))
    })
}

/// Smallest k in [1, bound] with w⁻¹ a^k w ∈ ⟨a⟩; `*found` is false when
/// there is none within the bound.
///
/// # Safety
/// `g` must be a live handle, `word` a C string, `k` and `found` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn srs_bs_intersection_index(
    g: *const SrsBs,
    word: *const c_char,
    bound: u64,
    k: *mut u64,
    found: *mut bool,
) -> SrsStatus {
    guard(|| {
        let g = handle(g)?;
        let w = bs_word(g, word)?;
        let r = g.0.intersection_index_witness(&w, bound);
        put(found, r.is_some())?;
        put(k, r.unwrap_or(0))
    })
}

/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srs_bs_free(g: *mut SrsBs) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

// ---- records ----

/// Φ(r) for the telescoping law p_j = 1/((j+1)(j+2)).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_gauge_telescoping(r: u64, out: *mut u64) -> SrsStatus {
    guard(|| put(out, records::gauge(&TailDistribution::telescoping(), r)?))
}

// ---- experiments ----

unsafe fn kind_arg(kind: *const c_char) -> Result<ExperimentKind, Fail> {
    Ok(str_arg(kind)?.parse::<ExperimentKind>()?)
}

/// The default configuration of an experiment ("records", "wreath-srs",
/// "permwreath-srs", "thompson-mu", "bs-tree", "martingale").
///
/// # Safety
/// `kind` must be a C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_config_default(kind: *const c_char, out: *mut *mut SrsConfig) -> SrsStatus {
    guard(|| put_box(out, SrsConfig(ExperimentConfig::defaults(kind_arg(kind)?))))
}

/// A configuration from TOML text. `kind` may be null when the text names it.
///
/// # Safety
/// `kind` must be null or a C string; `toml` a C string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_config_from_toml(
    kind: *const c_char,
    toml: *const c_char,
    out: *mut *mut SrsConfig,
) -> SrsStatus {
    guard(|| {
        let kind = if kind.is_null() { None } else { Some(kind_arg(kind)?) };
        put_box(out, SrsConfig(ExperimentConfig::from_toml(kind, str_arg(toml)?)?))
    })
}

/// Overrides seed, trials and horizon.
///
/// # Safety
/// `c` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn srs_config_set_run(c: *mut SrsConfig, seed: u64, trials: u64, horizon: u64) -> SrsStatus {
    guard(|| {
        let c = handle_mut(c)?;
        c.0.seed = seed;
        c.0.trials = trials as usize;
        c.0.horizon = horizon;
        Ok(())
    })
}

/// Writes the SHA-256 of the configuration as hex.
///
/// # Safety
/// `c` must be a live handle; `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn srs_config_hash(c: *const SrsConfig, buf: *mut c_char, len: usize, needed: *mut usize) -> SrsStatus {
    guard(|| put_str(&handle(c)?.0.hash(), buf, len, needed))
}

/// # Safety
/// `c` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srs_config_free(c: *mut SrsConfig) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs the experiment into `out_dir`; `*all_checks_pass` reports the
/// acceptance checks of the manifest.
///
/// # Safety
/// `c` must be a live handle, `out_dir` a C string and `all_checks_pass` valid.
#[no_mangle]
pub unsafe extern "C" fn srs_run(c: *const SrsConfig, out_dir: *const c_char, all_checks_pass: *mut bool) -> SrsStatus {
    guard(|| {
        let m = experiments::run(&handle(c)?.0, Path::new(str_arg(out_dir)?))?;
        put(all_checks_pass, m.checks.values().all(|&ok| ok))
    })
}

/// Re-checks a run directory; `*passed` is whether every check holds.
///
/// # Safety
/// `dir` must be a C string and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srs_verify(dir: *const c_char, passed: *mut bool) -> SrsStatus {
    guard(|| {
        let report = experiments::verify(Path::new(str_arg(dir)?))?;
        put(passed, report.passed())
    })
}
