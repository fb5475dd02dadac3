//! C ABI over `bergman-toeplitz`.
//!
//! Every fallible call returns a [`BtStatus`]; on failure the message is
//! available from [`bt_last_error`] on the same thread. Handles are opaque
//! and freed with their `_free` function. Strings returned through `out`
//! parameters are freed with [`bt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use bergman_toeplitz::commands::{self, Command};
use bergman_toeplitz::config::{Format, JobConfig, Overrides};
use bergman_toeplitz::gamma::build_gamma_table;
use bergman_toeplitz::indexcore::{Basis, MultiIndex};
use bergman_toeplitz::toeplitz::{self, ToeplitzMatrix};
use bergman_toeplitz::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Validation = 3,
    Unsupported = 4,
    Parse = 5,
    Eval = 6,
    Domain = 7,
    Numerical = 8,
    Io = 9,
    Config = 10,
    OutOfRange = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BtCommand {
    Gamma = 0,
    Operator = 1,
    Commutator = 2,
    Fusion = 3,
    OracleCompare = 4,
    Geometry = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BtFormat {
    Csv = 0,
    Json = 1,
}

/// Parsed job configuration.
pub struct BtJob {
    cfg: JobConfig,
}

/// Assembled Toeplitz matrix in coordinate form.
pub struct BtMatrix {
    m: ToeplitzMatrix,
}

/// One nonzero entry.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BtEntry {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|e| {
        let mut v = e.into_vec();
        v.retain(|&b| b != 0);
        CString::new(v).expect("nul bytes removed")
    });
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BtStatus {
    match e {
        Error::Validation(_) => BtStatus::Validation,
        Error::Unsupported(_) => BtStatus::Unsupported,
        Error::Parse(_) => BtStatus::Parse,
        Error::Eval(_) => BtStatus::Eval,
        Error::Domain(_) => BtStatus::Domain,
        Error::Numerical(_) => BtStatus::Numerical,
        Error::Io(_) => BtStatus::Io,
        Error::Config(_) => BtStatus::Config,
    }
}

struct Fail(BtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BtStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            BtStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(BtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail(BtStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn job_ref<'a>(job: *const BtJob) -> Result<&'a BtJob, Fail> {
    job.as_ref().ok_or_else(|| null("job"))
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Fail(BtStatus::Numerical, format!("output contains a nul byte: {e}")))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn bt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn bt_version() -> *const c_char {
    static VERSION: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    VERSION.get_or_init(|| CString::new(commands::VERSION).expect("version has no nul")).as_ptr()
}

/// Parses a JSON job configuration into `*out`.
///
/// # Safety
/// `json` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bt_job_from_json(json: *const c_char, out: *mut *mut BtJob) -> BtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = JobConfig::from_json(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(BtJob { cfg }));
        Ok(())
    })
}

/// # Safety
/// `job` must come from [`bt_job_from_json`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn bt_job_free(job: *mut BtJob) {
    if !job.is_null() {
        drop(Box::from_raw(job));
    }
}

/// Overrides the seed of every random component, as the CLI `--seed` flag.
///
/// # Safety
/// `job` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bt_job_set_seed(job: *mut BtJob, seed: u64) -> BtStatus {
    guard(|| {
        let job = job.as_mut().ok_or_else(|| null("job"))?;
        job.cfg.apply(&Overrides { seed: Some(seed), ..Default::default() });
        Ok(())
    })
}

/// Sets the output format used by [`bt_job_run`].
///
/// # Safety
/// `job` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bt_job_set_format(job: *mut BtJob, format: BtFormat) -> BtStatus {
    guard(|| {
        let job = job.as_mut().ok_or_else(|| null("job"))?;
        job.cfg.output.format = match format {
            BtFormat::Csv => Format::Csv,
            BtFormat::Json => Format::Json,
        };
        Ok(())
    })
}

/// Runs a command and stores its output text (the CLI file contents) in `*out`.
///
/// # Safety
/// `job` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bt_job_run(job: *const BtJob, command: BtCommand, out: *mut *mut c_char) -> BtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let job = job_ref(job)?;
        let cmd = match command {
            BtCommand::Gamma => Command::Gamma,
            BtCommand::Operator => Command::Operator,
            BtCommand::Commutator => Command::Commutator,
            BtCommand::Fusion => Command::Fusion,
            BtCommand::OracleCompare => Command::OracleCompare,
            BtCommand::Geometry => Command::Geometry,
        };
        *out = into_c_string(commands::run(cmd, job.cfg.clone())?)?;
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn bt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `γ(α)` of symbol `symbol` (0-based). `*hard_zero` is set when `α + p`
/// leaves the basis; `re` and `im` are then 0.
///
/// # Safety
/// `job` must be a live handle, `alpha` must point to `len` values, and the
/// output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bt_gamma(
    job: *const BtJob,
    symbol: usize,
    alpha: *const u32,
    len: usize,
    re: *mut f64,
    im: *mut f64,
    hard_zero: *mut bool,
) -> BtStatus {
    guard(|| {
        let job = job_ref(job)?;
        if alpha.is_null() || re.is_null() || im.is_null() || hard_zero.is_null() {
            return Err(null("argument"));
        }
        let k = job.cfg.partition()?;
        let symbols = job.cfg.symbols(&k)?;
        let psi = symbols
            .get(symbol)
            .ok_or_else(|| Fail(BtStatus::OutOfRange, format!("symbol {symbol} of {}", symbols.len())))?;
        let space = job.cfg.space.space();
        let a = MultiIndex::new(std::slice::from_raw_parts(alpha, len).to_vec());
        let table = build_gamma_table(psi, &space, &k, &job.cfg.quadrature)?;
        let (_, v) = table
            .entries
            .iter()
            .find(|(x, _)| *x == a)
            .ok_or_else(|| Fail(BtStatus::OutOfRange, format!("α = {a} is not in the basis")))?;
        *hard_zero = v.is_none();
        let v = v.unwrap_or_default();
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// Assembles the normalized matrix of symbol `symbol` (0-based) into `*out`.
///
/// # Safety
/// `job` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bt_operator(job: *const BtJob, symbol: usize, out: *mut *mut BtMatrix) -> BtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let job = job_ref(job)?;
        let k = job.cfg.partition()?;
        let symbols = job.cfg.symbols(&k)?;
        let psi = symbols
            .get(symbol)
            .ok_or_else(|| Fail(BtStatus::OutOfRange, format!("symbol {symbol} of {}", symbols.len())))?;
        let basis = Arc::new(Basis::new(k.n(), job.cfg.space.space())?);
        let m = toeplitz::operator(psi, &basis, &k, &job.cfg.quadrature)?;
        *out = Box::into_raw(Box::new(BtMatrix { m }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`bt_operator`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn bt_matrix_free(m: *mut BtMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of the basis. Returns 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bt_matrix_dim(m: *const BtMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.m.dim())
}

/// Number of stored nonzeros. Returns 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bt_matrix_nnz(m: *const BtMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.m.nnz())
}

/// Copies the nonzeros in column order into `entries` (capacity `cap`).
///
/// # Safety
/// `m` must be a live handle and `entries` must point to `cap` writable entries.
#[no_mangle]
pub unsafe extern "C" fn bt_matrix_entries(m: *const BtMatrix, entries: *mut BtEntry, cap: usize) -> BtStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        if entries.is_null() {
            return Err(null("entries"));
        }
        let nnz = m.m.nnz();
        if cap < nnz {
            return Err(Fail(BtStatus::OutOfRange, format!("capacity {cap} is below nnz = {nnz}")));
        }
        let out = std::slice::from_raw_parts_mut(entries, nnz);
        for (o, (row, col, v)) in out.iter_mut().zip(m.m.triplets()) {
            *o = BtEntry { row, col, re: v.re, im: v.im };
        }
        Ok(())
    })
}

/// Fusion verdict of symbol 0 against the remaining symbols: 0 EQUAL,
/// 1 UNEQUAL, 2 INCONCLUSIVE, 3 DEGENERATE.
///
/// # Safety
/// `job` must be a live handle and the output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn bt_fusion(
    job: *const BtJob,
    defect: *mut f64,
    scale: *mut f64,
    verdict: *mut i32,
) -> BtStatus {
    guard(|| {
        let job = job_ref(job)?;
        if defect.is_null() || scale.is_null() || verdict.is_null() {
            return Err(null("argument"));
        }
        let k = job.cfg.partition()?;
        let symbols = job.cfg.symbols(&k)?;
        if symbols.len() < 2 {
            return Err(Fail(BtStatus::Validation, "fusion needs at least two symbols".into()));
        }
        let basis = Arc::new(Basis::new(k.n(), job.cfg.space.space())?);
        let r = toeplitz::fusion_defect(&symbols[0], &symbols[1..], &basis, &k, &job.cfg.quadrature)?;
        *defect = r.defect;
        *scale = r.scale;
        *verdict = match r.verdict {
            toeplitz::Verdict::Equal => 0,
            toeplitz::Verdict::Unequal => 1,
            toeplitz::Verdict::Inconclusive => 2,
            toeplitz::Verdict::Degenerate => 3,
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_message_drops_nul_bytes() {
        set_error("a\0b".into());
        let s = unsafe { CStr::from_ptr(bt_last_error()) };
        assert_eq!(s.to_str().unwrap(), "ab");
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, BtStatus::Panic);
        let msg = unsafe { CStr::from_ptr(bt_last_error()) }.to_str().unwrap().to_owned();
        assert_eq!(msg, "panic: boom");
    }

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Config("x".into())), BtStatus::Config);
        assert_eq!(status_of(&Error::Numerical("x".into())), BtStatus::Numerical);
    }
}
