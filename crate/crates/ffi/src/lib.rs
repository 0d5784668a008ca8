//! C ABI over `looplab`.
//!
//! Datasets and evaluators are opaque handles created by `*_open` / `*_load`
//! and released with the matching `*_free`. Every fallible function returns
//! an [`LlStatus`]; on failure the message is kept per thread and can be read
//! with [`ll_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use looplab::diagnostics::{flip_test_model, CorrelationKind};
use looplab::evaluators::{load_checkpoint, Evaluator};
use looplab::features::{Dataset, LoopStateRecord, PairSource, Role};
use looplab::nn::Parameterized;
use looplab::optim::cosine_warmup_lr;
use looplab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument is out of range or not valid UTF-8.
    InvalidArgument = 2,
    /// The configuration or checkpoint is inconsistent.
    ConfigError = 3,
    /// Missing, malformed or mismatched data.
    DataError = 4,
    /// Non-finite values or a failed numerical routine.
    NumericError = 5,
    /// A Rust panic was caught.
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LlCorrelation {
    Pearson = 0,
    Spearman = 1,
}

/// Opaque dataset handle.
pub struct LlDataset {
    inner: Dataset,
}

/// Opaque evaluator handle.
pub struct LlEvaluator {
    inner: Evaluator<f32>,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LlDatasetInfo {
    pub num_pairs: usize,
    pub num_chunks: usize,
    pub steps: usize,
    pub dim: usize,
    pub max_len: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LlEvaluatorInfo {
    pub is_pairwise: bool,
    pub d_in: usize,
    pub num_parameters: usize,
}

/// Flip-test summary. `correlation` is NaN when undefined.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LlFlipSummary {
    pub n: usize,
    pub ties: usize,
    pub sign_flip_rate: f64,
    pub correlation: f64,
    pub mean_sum: f64,
    pub normal_min: f64,
    pub normal_max: f64,
    pub flipped_min: f64,
    pub flipped_max: f64,
    pub constant_output: bool,
    pub order_insensitive: bool,
    pub degenerate: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Fail {
    Status(LlStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn status_of(e: &Error) -> LlStatus {
    match e.root() {
        Error::Config(_) => LlStatus::ConfigError,
        Error::NonFinite(_) | Error::NonFiniteLoss { .. } | Error::Probe(_) => LlStatus::NumericError,
        _ => LlStatus::DataError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LlStatus::Ok
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            LlStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(LlStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail::Status(LlStatus::InvalidArgument, msg.into())
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ll_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the calling thread's last error message (0 if none).
#[no_mangle]
pub extern "C" fn ll_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `cap - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ll_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Learning rate at `step` of a linear-warmup cosine schedule.
#[no_mangle]
pub extern "C" fn ll_cosine_warmup_lr(step: u64, total_steps: u64, warmup_steps: u64, lr_max: f64, lr_min: f64) -> f64 {
    cosine_warmup_lr(step, total_steps, warmup_steps, lr_max, lr_min)
}

/// Opens a chunked dataset directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ll_dataset_open(path: *const c_char, out_handle: *mut *mut LlDataset) -> LlStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = ptr::null_mut();
        let inner = Dataset::open(&path_arg(path)?)?;
        *slot = Box::into_raw(Box::new(LlDataset { inner }));
        Ok(())
    })
}

/// Releases a dataset handle. Null is ignored.
///
/// # Safety
/// `handle` must come from [`ll_dataset_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ll_dataset_free(handle: *mut LlDataset) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_dataset_info(handle: *const LlDataset, info: *mut LlDatasetInfo) -> LlStatus {
    guard(|| {
        let ds = &deref(handle, "dataset")?.inner;
        let (steps, dim, max_len) = ds.geometry();
        *out(info, "info")? =
            LlDatasetInfo { num_pairs: ds.total_pairs(), num_chunks: ds.num_chunks(), steps, dim, max_len };
        Ok(())
    })
}

/// Reads and checks every chunk; writes the pair count.
///
/// # Safety
/// Pointers must be valid; `num_pairs` may be null.
#[no_mangle]
pub unsafe extern "C" fn ll_dataset_validate(handle: *const LlDataset, num_pairs: *mut usize) -> LlStatus {
    guard(|| {
        let n = deref(handle, "dataset")?.inner.validate()?;
        if let Some(slot) = num_pairs.as_mut() {
            *slot = n;
        }
        Ok(())
    })
}

/// Loads a checkpoint (`.json` next to its `.params`).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ll_evaluator_load(path: *const c_char, out_handle: *mut *mut LlEvaluator) -> LlStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = ptr::null_mut();
        let (inner, _) = load_checkpoint(&path_arg(path)?)?;
        *slot = Box::into_raw(Box::new(LlEvaluator { inner }));
        Ok(())
    })
}

/// Releases an evaluator handle. Null is ignored.
///
/// # Safety
/// `handle` must come from [`ll_evaluator_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ll_evaluator_free(handle: *mut LlEvaluator) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_evaluator_info(handle: *const LlEvaluator, info: *mut LlEvaluatorInfo) -> LlStatus {
    guard(|| {
        let ev = &deref(handle, "evaluator")?.inner;
        *out(info, "info")? = LlEvaluatorInfo {
            is_pairwise: ev.is_pairwise(),
            d_in: ev.config().d_in(),
            num_parameters: ev.num_parameters(),
        };
        Ok(())
    })
}

/// Preference score of pair `index` of a dataset; positive favours the
/// first response. With `swapped` the rejected response goes first.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_evaluator_score_pair(
    evaluator: *const LlEvaluator,
    dataset: *const LlDataset,
    index: usize,
    swapped: bool,
    score: *mut f64,
) -> LlStatus {
    guard(|| {
        let ev = &deref(evaluator, "evaluator")?.inner;
        let ds = &deref(dataset, "dataset")?.inner;
        let slot = out(score, "score")?;
        let mut rest = index;
        for c in 0..ds.num_chunks() {
            let len = ds.chunk_len(c);
            if rest < len {
                let chunk = ds.load_chunk(c)?;
                let p = &chunk[rest];
                *slot = if swapped {
                    ev.preference_score(&p.rejected, &p.chosen)?
                } else {
                    ev.preference_score(&p.chosen, &p.rejected)?
                };
                return Ok(());
            }
            rest -= len;
        }
        Err(invalid(format!("pair index {index} out of range ({} pairs)", ds.total_pairs())))
    })
}

/// Preference score of two responses given as `[steps, seq_len, dim]`
/// row-major `f32` states and left-padded 0/1 masks of length `seq_len`.
/// States are rounded to half precision, as in the chunk format.
///
/// # Safety
/// State arrays must hold `steps * seq_len * dim` floats and masks
/// `seq_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ll_evaluator_score_states(
    evaluator: *const LlEvaluator,
    steps: usize,
    seq_len: usize,
    dim: usize,
    first_states: *const f32,
    first_mask: *const u8,
    second_states: *const f32,
    second_mask: *const u8,
    score: *mut f64,
) -> LlStatus {
    guard(|| {
        let ev = &deref(evaluator, "evaluator")?.inner;
        let slot = out(score, "score")?;
        let n = steps
            .checked_mul(seq_len)
            .and_then(|v| v.checked_mul(dim))
            .ok_or_else(|| invalid("state size overflows"))?;
        if n == 0 {
            return Err(invalid("steps, seq_len and dim must be positive"));
        }
        let record = |states: *const f32, mask: *const u8, role: Role| -> Result<LoopStateRecord, Fail> {
            if states.is_null() || mask.is_null() {
                return Err(null("states or mask"));
            }
            let states = std::slice::from_raw_parts(states, n);
            let mask = std::slice::from_raw_parts(mask, seq_len).to_vec();
            Ok(LoopStateRecord::from_f32("ffi", role, steps, dim, states, mask)?)
        };
        let a = record(first_states, first_mask, Role::Chosen)?;
        let b = record(second_states, second_mask, Role::Rejected)?;
        *slot = ev.preference_score(&a, &b)?;
        Ok(())
    })
}

/// Flip test of a pairwise evaluator over a whole dataset.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_flip_test(
    evaluator: *const LlEvaluator,
    dataset: *const LlDataset,
    correlation: LlCorrelation,
    summary: *mut LlFlipSummary,
) -> LlStatus {
    guard(|| {
        let ev = &deref(evaluator, "evaluator")?.inner;
        let ds = &deref(dataset, "dataset")?.inner;
        let slot = out(summary, "summary")?;
        let kind = match correlation {
            LlCorrelation::Pearson => CorrelationKind::Pearson,
            LlCorrelation::Spearman => CorrelationKind::Spearman,
        };
        let r = flip_test_model(ev, ds, kind)?;
        *slot = LlFlipSummary {
            n: r.n,
            ties: r.ties,
            sign_flip_rate: r.sign_flip_rate,
            correlation: r.antisym_correlation.unwrap_or(f64::NAN),
            mean_sum: r.mean_sum,
            normal_min: r.normal_range.0,
            normal_max: r.normal_range.1,
            flipped_min: r.flipped_range.0,
            flipped_max: r.flipped_range.1,
            constant_output: r.constant_output,
            order_insensitive: r.order_insensitive,
            degenerate: r.degenerate,
        };
        Ok(())
    })
}
